#include "pamrecon/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "pamrecon/errors.hpp"
#include "pamrecon/image.hpp"
#include "pamrecon/image_io.hpp"

namespace fs = std::filesystem;

namespace pam {

std::string to_string(SplitTag tag) {
    switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::val: return "val";
    case SplitTag::test: return "test";
    }
    return "?";
}

SplitTag parse_split_tag(const std::string& text) {
    if (text == "train")
        return SplitTag::train;
    if (text == "val")
        return SplitTag::val;
    if (text == "test")
        return SplitTag::test;
    throw FormatError("unknown split tag '" + text + "' (expected train, val, test or -)");
}

Manifest parse_manifest(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw FormatError("manifest is empty (expected header 'PAMMANIFEST 1')");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != "PAMMANIFEST 1")
        throw FormatError("manifest line 1: expected header 'PAMMANIFEST 1', got '" + line + "'");
    Manifest m;
    std::set<std::string> seen;
    for (std::size_t number = 2; std::getline(in, line); ++number) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto where = "manifest line " + std::to_string(number) + ": ";
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || line.find('\t', tab + 1) != std::string::npos)
            throw FormatError(where + "expected '<path>\\t<tag or ->'");
        ManifestEntry e;
        e.path = line.substr(0, tab);
        const std::string tag = line.substr(tab + 1);
        if (tag != "-") {
            try {
                e.tag = parse_split_tag(tag);
            } catch (const FormatError& err) {
                throw FormatError(where + err.what());
            }
        }
        if (!seen.insert(e.path).second)
            throw FormatError(where + "duplicate path '" + e.path + "'");
        m.entries.push_back(std::move(e));
    }
    return m;
}

void format_manifest(std::ostream& out, const Manifest& manifest) {
    out << "PAMMANIFEST " << manifest.version << '\n';
    for (const ManifestEntry& e : manifest.entries)
        out << e.path << '\t' << (e.tag ? to_string(*e.tag) : "-") << '\n';
}

Manifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open manifest " + path.string());
    return parse_manifest(in);
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
    std::ofstream out(path);
    if (!out)
        throw FormatError("cannot write manifest " + path.string());
    format_manifest(out, manifest);
    if (!out)
        throw FormatError("failed writing manifest " + path.string());
}

IngestResult ingest_directory(const fs::path& source, const fs::path& out_dir, const IngestOptions& options) {
    if (!fs::is_directory(source))
        throw InvalidInput("not a directory: " + source.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(source))
        if (entry.is_regular_file())
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    fs::create_directories(out_dir);

    IngestResult result;
    std::set<std::string> names;
    for (const fs::path& file : files) {
        try {
            Image img = read_image(file).image;
            if (img.empty())
                throw FormatError("empty image");
            img = threshold_denoise(img, options.threshold);
            img = median_filter_directional(img, MedianWindow::Vertical3x1);
            img = median_filter_directional(img, MedianWindow::Horizontal1x3);
            img = normalize_percentile(img, options.percentile_low, options.percentile_high);
            std::string name = file.stem().string() + ".pamimg";
            if (!names.insert(name).second)
                throw FormatError("another file already produced " + name);
            write_raw(out_dir / name, img);
            result.manifest.entries.push_back({name, std::nullopt});
        } catch (const std::exception& e) {
            ++result.skipped;
            result.warnings.push_back(file.filename().string() + ": " + e.what());
        }
    }
    if (result.manifest.entries.empty())
        result.warnings.push_back("no usable images in " + source.string());
    write_manifest(out_dir / "manifest.txt", result.manifest);
    return result;
}

} // namespace pam
