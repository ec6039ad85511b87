#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pamrecon/augment.hpp"
#include "pamrecon/nn/model.hpp"
#include "pamrecon/phantom.hpp"
#include "pamrecon/training.hpp"

namespace pam {

/// Everything a training run needs. Loaded from flat `key = value` text with
/// `#` comments; unknown keys are rejected.
struct RunConfig {
    nn::ModelConfig model;
    TrainConfig train;
    AugmentConfig augment;
    std::uint64_t seed = 7;

    /// Manifest file, directory of images, or the word "phantom".
    std::string dataset;
    std::size_t phantom_count = 8;
    std::size_t phantom_size = 256;
    std::filesystem::path output_dir = "run";
    std::filesystem::path resume; // optional checkpoint whose weights seed the run
};

/// Throws ConfigError naming the line and key on any problem. Relative paths
/// are kept as written; `base_dir` is used to resolve them.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Writes every key with its current value (round-trips through parse_run_config).
void format_run_config(std::ostream& out, const RunConfig& cfg);

/// Seed fan-out: the root seed drives split, init, augmentation, shuffling
/// and validation streams.
void apply_seed(RunConfig& cfg, std::uint64_t seed);

/// Phantom generator settings used when dataset = phantom.
PhantomConfig phantom_config(const RunConfig& cfg, std::size_t index);

} // namespace pam
