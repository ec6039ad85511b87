#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pamrecon/image.hpp"
#include "pamrecon/nn/model.hpp"
#include "pamrecon/run_config.hpp"
#include "pamrecon/sampling.hpp"
#include "pamrecon/training.hpp"

namespace pam {

struct NamedImage {
    std::string name;
    Image image;
};

struct DatasetSplit {
    std::vector<NamedImage> train, val, test;
};

/// Resolves cfg.dataset: "phantom" generates cfg.phantom_count phantoms (all
/// used for training); a manifest file or a directory holding manifest.txt is
/// loaded and split by its tags when every entry is tagged, otherwise by the
/// seeded split rule. Throws ConfigError when the dataset is missing.
DatasetSplit load_dataset(const RunConfig& cfg);

struct TrainOutcome {
    FitResult fit;
    std::filesystem::path checkpoint;
    std::filesystem::path log;
};

/// Builds (or resumes) the model, trains, and writes `best.ckpt`,
/// `train_log.csv` and `config.txt` into cfg.output_dir.
TrainOutcome run_training(const RunConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Zero-fills the decimated image (unless `already_sparse`) and runs the
/// patchwork reconstruction; output clipped to [0, 1].
Image reconstruct_image(nn::Model<float>& model, const Image& input, const DownsamplingRatio& ratio,
                        bool already_sparse, std::size_t tile = 128, std::size_t buffer = 20);

struct ReportRow {
    std::string image;
    std::string method;
    MetricsReport metrics;
};

/// CSV with header `image,method,psnr,ssim,mae,mse`; per-image rows followed by
/// MEAN and SD rows (sample SD, 0 for a single image) for every method in
/// first-appearance order.
void write_report(std::ostream& out, const std::vector<ReportRow>& rows);

} // namespace pam
