#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pamrecon/errors.hpp"
#include "pamrecon/image.hpp"
#include "pamrecon/image_io.hpp"
#include "pamrecon/manifest.hpp"
#include "pamrecon/nn/checkpoint.hpp"
#include "pamrecon/phantom.hpp"
#include "pamrecon/pipeline.hpp"
#include "pamrecon/run_config.hpp"
#include "pamrecon/sampling.hpp"

namespace fs = std::filesystem;
using namespace pam;

namespace {

const auto ratio_validator = CLI::Validator(
    [](std::string& text) -> std::string {
        try {
            parse_ratio(text);
            return {};
        } catch (const std::exception& e) {
            return e.what();
        }
    },
    "SXxSY", "ratio");

int cmd_ingest(const fs::path& source, const fs::path& out, float threshold) {
    IngestOptions opt;
    opt.threshold = threshold;
    const IngestResult r = ingest_directory(source, out, opt);
    for (const std::string& w : r.warnings)
        std::cerr << "warning: " << w << '\n';
    std::cout << "ingested " << r.manifest.entries.size() << " images, skipped " << r.skipped << '\n';
    return 0;
}

int cmd_phantom(std::size_t count, std::size_t size, std::uint64_t seed, const fs::path& out,
                const std::string& format) {
    fs::create_directories(out);
    RunConfig rc;
    apply_seed(rc, seed);
    rc.phantom_size = size;
    Manifest manifest;
    for (std::size_t i = 0; i < count; ++i) {
        char name[48];
        std::snprintf(name, sizeof name, "phantom_%03zu.%s", i, format.c_str());
        write_image(out / name, generate_phantom(phantom_config(rc, i)));
        manifest.entries.push_back({name, std::nullopt});
    }
    write_manifest(out / "manifest.txt", manifest);
    std::cout << "wrote " << count << " phantoms to " << out.string() << '\n';
    return 0;
}

int cmd_downsample(const fs::path& in, const fs::path& out, const std::string& ratio_text,
                   const std::string& mode) {
    const DownsamplingRatio ratio = parse_ratio(ratio_text);
    const LoadedImage src = read_image(in);
    const SampledImage s = downsample(src.image, ratio);
    Image result;
    if (mode == "zerofill")
        result = zero_fill(s);
    else if (mode == "bicubic")
        result = bicubic_upsample(s);
    else
        result = sample_mask(ratio, src.image.height(), src.image.width());
    write_image(out, result, src.bit_depth == 8 ? 8 : 16);
    std::printf("effective pixel fraction: %.4f%% (%zu of %zu pixels; asymptotic %.4f%%)\n",
                100.0 * retained_fraction(ratio, src.image.height(), src.image.width()),
                s.retained.size(), src.image.size(), 100.0 / (ratio.sx * ratio.sy));
    return 0;
}

int cmd_train(const fs::path& config_path, std::optional<std::uint64_t> seed, const fs::path& out) {
    RunConfig cfg = load_run_config(config_path);
    if (seed)
        apply_seed(cfg, *seed);
    if (!out.empty())
        cfg.output_dir = out;
    const TrainOutcome r = run_training(cfg, [](const EpochRecord& rec) {
        std::printf("epoch %zu  steps %zu  loss %.6f  val PSNR %.3f dB  SSIM %.4f  metric %.5f\n", rec.epoch,
                    rec.steps, rec.train_loss, rec.val_psnr, rec.val_ssim, rec.saving_metric);
        std::fflush(stdout);
    });
    std::printf("best epoch %zu (metric %.5f); checkpoint %s, log %s\n", r.fit.best.epoch,
                r.fit.best.saving_metric, r.checkpoint.string().c_str(), r.log.string().c_str());
    return 0;
}

int cmd_reconstruct(const fs::path& checkpoint, const fs::path& in, const fs::path& out,
                    const std::string& ratio_text, bool sparse, std::size_t tile, std::size_t buffer) {
    nn::Model<float> model = nn::load_checkpoint(checkpoint);
    const Image input = read_image(in).image;
    write_image(out, reconstruct_image(model, input, parse_ratio(ratio_text), sparse, tile, buffer));
    return 0;
}

std::vector<fs::path> list_images(const fs::path& p) {
    if (!fs::is_directory(p))
        return {p};
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(p)) {
        const auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".png" || ext == ".pamimg"))
            files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

int cmd_evaluate(const fs::path& truth, const std::vector<fs::path>& recons, std::vector<std::string> labels,
                 const std::string& bicubic_ratio, const fs::path& out) {
    if (!labels.empty() && labels.size() != recons.size())
        throw InvalidInput("--label must be given once per --recon");
    for (std::size_t i = labels.size(); i < recons.size(); ++i)
        labels.push_back(recons[i].filename().string());

    const bool truth_is_dir = fs::is_directory(truth);
    std::vector<ReportRow> rows;
    std::size_t warnings = 0;
    for (const fs::path& t : list_images(truth)) {
        const Image gt = read_image(t).image;
        const std::string name = t.stem().string();
        for (std::size_t i = 0; i < recons.size(); ++i) {
            fs::path match = recons[i];
            if (fs::is_directory(recons[i])) {
                match.clear();
                for (const fs::path& c : list_images(recons[i]))
                    if (c.stem() == t.stem())
                        match = c;
                if (match.empty()) {
                    std::cerr << "warning: no reconstruction of " << name << " in " << recons[i] << '\n';
                    ++warnings;
                    continue;
                }
            } else if (truth_is_dir) {
                throw InvalidInput("a directory of truths needs directories of reconstructions");
            }
            const Image rc = read_image(match).image;
            if (rc.height() != gt.height() || rc.width() != gt.width()) {
                std::cerr << "warning: " << name << " (" << labels[i] << "): " << rc.height() << "x" << rc.width()
                          << " reconstruction vs " << gt.height() << "x" << gt.width() << " truth, skipped\n";
                ++warnings;
                continue;
            }
            rows.push_back({name, labels[i], compute_metrics(gt, rc)});
        }
        if (!bicubic_ratio.empty())
            rows.push_back({name, "bicubic",
                            compute_metrics(gt, bicubic_upsample(downsample(gt, parse_ratio(bicubic_ratio))))});
    }
    if (rows.empty())
        throw InvalidInput("no image pairs could be evaluated");
    if (out.empty()) {
        write_report(std::cout, rows);
    } else {
        std::ofstream f(out);
        write_report(f, rows);
        if (!f)
            throw FormatError("failed writing " + out.string());
    }
    if (warnings)
        std::cerr << warnings << " pair(s) skipped\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse-scan photoacoustic image reconstruction"};
    app.require_subcommand(1);

    fs::path ingest_src, ingest_out;
    float ingest_threshold = 0.0f;
    auto* ingest = app.add_subcommand("ingest", "Normalize a directory of images and write a manifest");
    ingest->add_option("source", ingest_src, "Directory of PNG or .pamimg images")->required();
    ingest->add_option("--out", ingest_out, "Output directory for normalized copies and manifest.txt")->required();
    ingest->add_option("--threshold", ingest_threshold, "Values below this become 0 before filtering");

    std::size_t ph_count = 8, ph_size = 256;
    std::uint64_t ph_seed = 7;
    fs::path ph_out;
    std::string ph_format = "png";
    auto* phantom = app.add_subcommand("phantom", "Generate synthetic vascular phantoms");
    phantom->add_option("--count", ph_count, "Number of images")->capture_default_str();
    phantom->add_option("--size", ph_size, "Image side length (>= 128)")->capture_default_str();
    phantom->add_option("--seed", ph_seed, "Root seed")->capture_default_str();
    phantom->add_option("--out", ph_out, "Output directory")->required();
    phantom->add_option("--format", ph_format, "png or pamimg")
        ->check(CLI::IsMember({"png", "pamimg"}))
        ->capture_default_str();

    fs::path ds_in, ds_out;
    std::string ds_ratio, ds_mode = "zerofill";
    auto* down = app.add_subcommand("downsample", "Decimate an image and write a derived version");
    down->add_option("input", ds_in, "Input image")->required();
    down->add_option("output", ds_out, "Output image (.png or .pamimg)")->required();
    down->add_option("--ratio", ds_ratio, "Column x row strides, e.g. 7x3")->required()->check(ratio_validator);
    down->add_option("--mode", ds_mode, "zerofill, bicubic or mask")
        ->check(CLI::IsMember({"zerofill", "bicubic", "mask"}))
        ->capture_default_str();

    fs::path tr_config, tr_out;
    std::optional<std::uint64_t> tr_seed;
    auto* train = app.add_subcommand("train", "Train a reconstruction model from a run config");
    train->add_option("--config", tr_config, "Run config (key = value lines)")->required();
    train->add_option("--seed", tr_seed, "Override the root seed");
    train->add_option("--out", tr_out, "Override output_dir");

    fs::path rc_ckpt, rc_in, rc_out;
    std::string rc_ratio = "5x1";
    bool rc_sparse = false;
    std::size_t rc_tile = 128, rc_buffer = 20;
    auto* recon = app.add_subcommand("reconstruct", "Reconstruct a full-size image with patchwork inference");
    recon->add_option("--checkpoint", rc_ckpt, "Trained checkpoint")->required();
    recon->add_option("input", rc_in, "Fully sampled image, or zero-filled sparse image with --sparse-input")->required();
    recon->add_option("output", rc_out, "Output image (.png or .pamimg)")->required();
    recon->add_option("--ratio", rc_ratio, "Column x row strides")->check(ratio_validator)->capture_default_str();
    recon->add_flag("--sparse-input", rc_sparse, "Input is already zero-filled; skip decimation");
    recon->add_option("--tile", rc_tile, "Tile size")->capture_default_str();
    recon->add_option("--buffer", rc_buffer, "Seam buffer depth in pixels")->capture_default_str();

    fs::path ev_truth, ev_out;
    std::vector<fs::path> ev_recon;
    std::vector<std::string> ev_labels;
    std::string ev_bicubic;
    auto* eval = app.add_subcommand("evaluate", "Score reconstructions against ground truth (CSV report)");
    eval->add_option("--truth", ev_truth, "Ground-truth image or directory")->required();
    eval->add_option("--recon", ev_recon, "Reconstruction image or directory (repeatable)");
    eval->add_option("--label", ev_labels, "Method name for each --recon");
    eval->add_option("--bicubic", ev_bicubic, "Also score bicubic upsampling at this ratio")->check(ratio_validator);
    eval->add_option("--out", ev_out, "Report path (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest)
            return cmd_ingest(ingest_src, ingest_out, ingest_threshold);
        if (*phantom)
            return cmd_phantom(ph_count, ph_size, ph_seed, ph_out, ph_format);
        if (*down)
            return cmd_downsample(ds_in, ds_out, ds_ratio, ds_mode);
        if (*train)
            return cmd_train(tr_config, tr_seed, tr_out);
        if (*recon)
            return cmd_reconstruct(rc_ckpt, rc_in, rc_out, rc_ratio, rc_sparse, rc_tile, rc_buffer);
        if (*eval)
            return cmd_evaluate(ev_truth, ev_recon, ev_labels, ev_bicubic, ev_out);
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
