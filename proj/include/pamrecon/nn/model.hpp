#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pamrecon/nn/layers.hpp"
#include "pamrecon/nn/tensor.hpp"

namespace pam::nn {

enum class Architecture { fd_unet, unet };

std::string to_string(Architecture arch);
Architecture parse_architecture(const std::string& text);

struct ModelConfig {
    Architecture architecture = Architecture::fd_unet;
    int depth = 4;         // resolution levels, including the bottleneck
    int base_filters = 32; // channels after the stem
    double bn_momentum = 0.99;
    double bn_epsilon = 1e-3;
    int dense_layers = 4; // growth layers per dense block, k = f_in / dense_layers

    bool operator==(const ModelConfig&) const = default;
};

/// Throws ConfigError for depth < 1, base_filters < 1, base_filters not
/// divisible by dense_layers (fd_unet), or momentum outside [0, 1).
void validate(const ModelConfig& cfg);

/// Shape record of one top-level block from the most recent forward pass.
struct BlockTrace {
    std::string name;
    std::string kind; // stem, dense, conv_pair, down, up, head
    Shape input;
    Shape output;
};

/// Encoder-decoder over single-channel images.
///
/// fd_unet: stem 3x3 conv block (1 -> b), then per contracting level l with
/// f_l = b * 2^(l-1): dense block (f_l -> 2 f_l, kept as skip) and down block.
/// The bottleneck level runs a dense block only. Each expanding level
/// upsamples, convolves to 2 f_l, concatenates the skip, reduces to f_l with a
/// 1x1 conv block and runs a dense block back to 2 f_l. A linear 1x1 conv
/// maps to one output channel.
///
/// unet: same skeleton with F_l = b * 2^(l-1) channels per level and a pair
/// of 3x3 conv blocks in place of every dense block (and of the 1x1 reduce).
///
/// Inputs must be 1-channel with spatial dims divisible by 2^(depth-1).
template <typename T>
class Model {
public:
    Model(const ModelConfig& cfg, std::uint64_t seed);
    ~Model();
    Model(Model&&) noexcept;
    Model& operator=(Model&&) noexcept;

    const ModelConfig& config() const { return config_; }

    Tensor4<T> forward(const Tensor4<T>& x, Mode mode);
    /// Reverse pass for the last forward; accumulates into Param::grad.
    void backward(const Tensor4<T>& grad_output);

    /// Every parameter in a fixed order, running statistics included.
    const std::vector<Param<T>*>& parameters() const { return params_; }
    void zero_grad();
    std::size_t trainable_count() const;

    const std::vector<BlockTrace>& trace() const { return trace_; }

    /// Spatial divisor the input must honor.
    int spatial_multiple() const { return 1 << (config_.depth - 1); }

private:
    struct Graph;

    ModelConfig config_;
    std::unique_ptr<Graph> graph_;
    std::vector<Param<T>*> params_;
    std::vector<BlockTrace> trace_;
};

/// Snapshot of all parameter values in Model::parameters() order.
template <typename T>
using ModelState = std::vector<AlignedVector<T>>;

template <typename T>
ModelState<T> snapshot(const Model<T>& model);

template <typename T>
void restore(Model<T>& model, const ModelState<T>& state);

template <typename T>
Model<T> build_model(const ModelConfig& cfg, std::uint64_t seed) {
    return Model<T>(cfg, seed);
}

} // namespace pam::nn
