#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>

#include "pamrecon/errors.hpp"
#include <string>
#include <vector>

#include "pamrecon/augment.hpp"
#include "pamrecon/image.hpp"
#include "pamrecon/nn/model.hpp"
#include "pamrecon/rng.hpp"
#include "pamrecon/sampling.hpp"

namespace pam {

struct TrainConfig {
    std::size_t batch_size = 16;
    std::size_t epochs = 500;
    std::size_t max_steps = 0; // 0 = no cap; otherwise stop after this many optimizer steps
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-7;
    double lambda1 = 1.0;
    double lambda2 = 0.01;
    DownsamplingRatio ratio{5, 1};
    std::size_t crops_per_image = 10;
    std::size_t val_crops = 10; // 0 -> a single center crop per validation image
    std::array<double, 3> split{0.8, 0.1, 0.1};
    std::uint64_t seed = 7;
};

struct AdamSettings {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
};

/// Bias-corrected Adam over the trainable parameters of a model.
template <typename T>
class Adam {
public:
    explicit Adam(AdamSettings settings) : settings_(settings) {}

    /// theta -= lr * m_hat / (sqrt(v_hat) + eps), with moments kept per parameter.
    void step(const std::vector<nn::Param<T>*>& params);
    std::uint64_t steps() const { return t_; }

private:
    AdamSettings settings_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

/// (1 - SSIM) + (40 - PSNR) / 275, lower is better. An infinite PSNR is
/// treated as the 40 dB limit, so its term is 0.
double saving_metric(double ssim, double psnr);

struct SplitSizes {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
};

/// train = floor(f_train * n), test = floor(f_test * n), validation takes the
/// rest (292 -> 233/30/29, 10 -> 8/1/1).
SplitSizes split_sizes(std::size_t n, const std::array<double, 3>& fractions);

template <typename Item>
struct Split {
    std::vector<Item> train, val, test;
};

/// Seeded Fisher-Yates shuffle followed by split_sizes partitioning.
template <typename Item>
Split<Item> split_dataset(const std::vector<Item>& items, const std::array<double, 3>& fractions,
                          std::uint64_t seed) {
    if (items.empty())
        throw InvalidInput("split_dataset: empty manifest");
    const SplitSizes sizes = split_sizes(items.size(), fractions);
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    Rng rng(seed, Stream::split);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.index(i)]);
    Split<Item> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Item& item = items[order[i]];
        if (i < sizes.train)
            out.train.push_back(item);
        else if (i < sizes.train + sizes.val)
            out.val.push_back(item);
        else
            out.test.push_back(item);
    }
    return out;
}

/// Network input for a fully sampled patch: zero-filled decimation.
Image sparse_input(const Image& truth, const DownsamplingRatio& ratio);

struct EpochRecord {
    std::size_t epoch = 0; // 1-based
    std::size_t steps = 0; // optimizer steps so far
    double train_loss = 0.0;
    double val_psnr = 0.0;
    double val_ssim = 0.0;
    double saving_metric = 0.0;
};

/// "epoch,train_loss,val_psnr,val_ssim,saving_metric"
std::string format_log_record(const EpochRecord& r);

struct Checkpoint {
    nn::ModelState<float> state;
    std::size_t epoch = 0; // 0 = initial weights
    MetricsReport validation;
    double saving_metric = 0.0;
};

struct FitResult {
    Checkpoint best;
    std::vector<EpochRecord> log;
    std::size_t steps = 0;
};

/// Raised when the training loss stops being finite. what() carries the
/// diagnostic state (epoch, step, loss, largest gradient magnitude).
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mean metrics of the model (infer mode, outputs clipped to [0, 1]) over
/// aligned truth / input pairs, evaluated in batches.
MetricsReport evaluate_pairs(nn::Model<float>& model, std::span<const Image> truths,
                             std::span<const Image> inputs, std::size_t batch_size);

/// Trains with Adam on augmented crops.
///
/// Each epoch draws crops_per_image augmented crops from every training image,
/// shuffles them and runs mini-batches (the last may be short). Network input
/// is the zero-filled decimation of each augmented crop. After every epoch
/// the model is scored on fixed validation crops; the state with the lowest
/// saving metric is kept. With no validation images the training images are
/// used for validation. On return the model holds the best state.
FitResult fit(nn::Model<float>& model, std::span<const Image> train, std::span<const Image> val,
              const TrainConfig& cfg, const AugmentConfig& augment,
              const std::function<void(const EpochRecord&)>& on_epoch = {});

} // namespace pam
