#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pam {

enum class SplitTag { train, val, test };

std::string to_string(SplitTag tag);
SplitTag parse_split_tag(const std::string& text);

struct ManifestEntry {
    std::string path; // relative to the manifest's directory
    std::optional<SplitTag> tag;
    bool operator==(const ManifestEntry&) const = default;
};

/// Text format: header "PAMMANIFEST 1", then one "<path>\t<tag or ->" per line.
struct Manifest {
    int version = 1;
    std::vector<ManifestEntry> entries;
};

/// Throws FormatError (with line numbers) for bad headers, malformed lines,
/// unknown tags or duplicate paths.
Manifest parse_manifest(std::istream& in);
void format_manifest(std::ostream& out, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

struct IngestResult {
    Manifest manifest;
    std::size_t skipped = 0;
    std::vector<std::string> warnings;
};

struct IngestOptions {
    float threshold = 0.0f;          // values below become 0 before filtering
    double percentile_low = 0.05;
    double percentile_high = 99.95;
};

/// Reads every regular file in `source` (sorted by name), applies threshold,
/// 3x1 and 1x3 median filtering and percentile normalization, writes the
/// result as `<stem>.pamimg` into `out_dir` and records it in
/// `out_dir/manifest.txt`. Unreadable files are skipped and counted.
IngestResult ingest_directory(const std::filesystem::path& source, const std::filesystem::path& out_dir,
                              const IngestOptions& options = {});

} // namespace pam
