#include "pamrecon/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "pamrecon/errors.hpp"
#include "pamrecon/image_io.hpp"
#include "pamrecon/manifest.hpp"
#include "pamrecon/nn/checkpoint.hpp"
#include "pamrecon/patchwork.hpp"
#include "pamrecon/phantom.hpp"

namespace fs = std::filesystem;

namespace pam {

DatasetSplit load_dataset(const RunConfig& cfg) {
    if (cfg.dataset.empty())
        throw ConfigError("dataset is not set");
    DatasetSplit out;
    if (cfg.dataset == "phantom") {
        if (cfg.phantom_count == 0)
            throw ConfigError("phantom_count must be >= 1");
        for (std::size_t i = 0; i < cfg.phantom_count; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "phantom_%03zu", i);
            out.train.push_back({name, generate_phantom(phantom_config(cfg, i))});
        }
        return out;
    }

    fs::path manifest_path = cfg.dataset;
    if (fs::is_directory(manifest_path))
        manifest_path /= "manifest.txt";
    if (!fs::is_regular_file(manifest_path))
        throw ConfigError("dataset not found: " + manifest_path.string());
    const Manifest manifest = read_manifest(manifest_path);
    if (manifest.entries.empty())
        throw ConfigError("dataset manifest has no entries: " + manifest_path.string());
    const fs::path root = manifest_path.parent_path();
    auto load = [&](const ManifestEntry& e) { return NamedImage{e.path, read_image(root / e.path).image}; };

    const bool tagged = std::all_of(manifest.entries.begin(), manifest.entries.end(),
                                    [](const ManifestEntry& e) { return e.tag.has_value(); });
    if (tagged) {
        for (const ManifestEntry& e : manifest.entries) {
            auto& bucket = *e.tag == SplitTag::train ? out.train : *e.tag == SplitTag::val ? out.val : out.test;
            bucket.push_back(load(e));
        }
    } else {
        const auto split = split_dataset(manifest.entries, cfg.train.split, cfg.seed);
        for (const auto& e : split.train)
            out.train.push_back(load(e));
        for (const auto& e : split.val)
            out.val.push_back(load(e));
        for (const auto& e : split.test)
            out.test.push_back(load(e));
    }
    if (out.train.empty())
        throw ConfigError("dataset split leaves no training images");
    return out;
}

namespace {

std::vector<Image> images_of(const std::vector<NamedImage>& items) {
    std::vector<Image> out;
    out.reserve(items.size());
    for (const NamedImage& n : items)
        out.push_back(n.image);
    return out;
}

} // namespace

TrainOutcome run_training(const RunConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch) {
    const DatasetSplit data = load_dataset(cfg);
    nn::Model<float> model(cfg.model, cfg.seed);
    if (!cfg.resume.empty()) {
        const nn::Model<float> previous = nn::load_checkpoint(cfg.resume);
        if (!(previous.config() == cfg.model))
            throw ConfigError("resume checkpoint " + cfg.resume.string() + " was trained with a different model configuration");
        nn::restore(model, nn::snapshot(previous));
    }

    fs::create_directories(cfg.output_dir);
    TrainOutcome outcome;
    outcome.checkpoint = cfg.output_dir / "best.ckpt";
    outcome.log = cfg.output_dir / "train_log.csv";
    {
        std::ofstream config_out(cfg.output_dir / "config.txt");
        format_run_config(config_out, cfg);
    }
    std::ofstream log(outcome.log);
    if (!log)
        throw ConfigError("cannot write " + outcome.log.string());
    log << "epoch,train_loss,val_psnr,val_ssim,saving_metric\n";

    const std::vector<Image> train = images_of(data.train);
    const std::vector<Image> val = images_of(data.val);
    outcome.fit = fit(model, train, val, cfg.train, cfg.augment, [&](const EpochRecord& r) {
        log << format_log_record(r) << '\n' << std::flush;
        if (on_epoch)
            on_epoch(r);
    });
    nn::save_checkpoint(outcome.checkpoint, model);
    return outcome;
}

Image reconstruct_image(nn::Model<float>& model, const Image& input, const DownsamplingRatio& ratio,
                        bool already_sparse, std::size_t tile, std::size_t buffer) {
    if (tile % static_cast<std::size_t>(model.spatial_multiple()) != 0)
        throw ConfigError("tile size " + std::to_string(tile) + " is not a multiple of the model's " +
                          std::to_string(model.spatial_multiple()));
    const Image sparse = already_sparse ? input : sparse_input(input, ratio);
    return clip_unit(patchwork_reconstruct(model_tile_inference(model), sparse, tile, buffer));
}

namespace {

std::string number(double v) {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

double sample_sd(const std::vector<double>& v, double mean) {
    if (v.size() < 2)
        return 0.0;
    if (!std::isfinite(mean)) {
        const bool all_same = std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
        return all_same ? 0.0 : std::nan("");
    }
    double s = 0.0;
    for (double x : v)
        s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace

void write_report(std::ostream& out, const std::vector<ReportRow>& rows) {
    out << "image,method,psnr,ssim,mae,mse\n";
    std::vector<std::string> methods;
    for (const ReportRow& r : rows) {
        out << r.image << ',' << r.method << ',' << number(r.metrics.psnr) << ',' << number(r.metrics.ssim)
            << ',' << number(r.metrics.mae) << ',' << number(r.metrics.mse) << '\n';
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
            methods.push_back(r.method);
    }
    for (const std::string& m : methods) {
        std::array<std::vector<double>, 4> cols;
        for (const ReportRow& r : rows) {
            if (r.method != m)
                continue;
            cols[0].push_back(r.metrics.psnr);
            cols[1].push_back(r.metrics.ssim);
            cols[2].push_back(r.metrics.mae);
            cols[3].push_back(r.metrics.mse);
        }
        std::array<double, 4> mean{}, sd{};
        for (std::size_t k = 0; k < 4; ++k) {
            for (double x : cols[k])
                mean[k] += x;
            mean[k] /= static_cast<double>(cols[k].size());
            sd[k] = sample_sd(cols[k], mean[k]);
        }
        out << "MEAN," << m;
        for (double x : mean)
            out << ',' << number(x);
        out << "\nSD," << m;
        for (double x : sd)
            out << ',' << number(x);
        out << '\n';
    }
}

} // namespace pam
