#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pamrecon/nn/tensor.hpp"
#include "pamrecon/rng.hpp"

namespace pam::nn {

enum class Mode { train, infer };

/// Named value array. Batch-norm running statistics are stored as
/// non-trainable parameters so they travel with checkpoints.
template <typename T>
struct Param {
    std::string name;
    std::vector<int> dims;
    AlignedVector<T> value;
    AlignedVector<T> grad;
    bool trainable = true;

    Param(std::string n, std::vector<int> d, bool train = true);
    std::size_t size() const { return value.size(); }
};

/// Layer with explicit reverse pass. backward() must follow the matching
/// forward(); it accumulates parameter gradients and returns the gradient
/// with respect to the layer input.
template <typename T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor4<T> forward(const Tensor4<T>& x, Mode mode) = 0;
    virtual Tensor4<T> backward(const Tensor4<T>& grad) = 0;
    virtual void collect(std::vector<Param<T>*>& /*out*/) {}
};

struct NormSettings {
    double momentum = 0.99;
    double epsilon = 1e-3;
};

/// Cross-correlation with TensorFlow-style "same" padding: output extent is
/// ceil(in / stride), the odd padding pixel goes to the bottom/right.
/// Kernel layout (kh, kw, c_in, c_out); He-uniform initialization, zero bias.
template <typename T>
class Conv2d final : public Layer<T> {
public:
    Conv2d(const std::string& name, int kh, int kw, int c_in, int c_out, int stride, Rng& rng);

    Tensor4<T> forward(const Tensor4<T>& x, Mode mode) override;
    Tensor4<T> backward(const Tensor4<T>& grad) override;
    void collect(std::vector<Param<T>*>& out) override;

    Param<T>& kernel() { return kernel_; }
    Param<T>& bias() { return bias_; }
    int stride() const { return stride_; }

private:
    struct Geometry {
        int oh, ow, pad_top, pad_left;
    };
    Geometry geometry(const Shape& in) const;
    /// Unfolds output rows [oy_begin, oy_end) of one sample.
    void im2col(const Tensor4<T>& x, int sample, const Geometry& g, int oy_begin, int oy_end,
                AlignedVector<T>& col) const;
    int chunk_rows(const Geometry& g) const;

    int kh_, kw_, c_in_, c_out_, stride_;
    Param<T> kernel_;
    Param<T> bias_;
    Tensor4<T> input_;
};

/// Per-channel normalization over (batch, height, width). Train mode uses
/// biased batch statistics and updates running = m * running + (1 - m) * batch.
template <typename T>
class BatchNorm final : public Layer<T> {
public:
    BatchNorm(const std::string& name, int channels, NormSettings settings);

    Tensor4<T> forward(const Tensor4<T>& x, Mode mode) override;
    Tensor4<T> backward(const Tensor4<T>& grad) override;
    void collect(std::vector<Param<T>*>& out) override;

    Param<T>& gamma() { return gamma_; }
    Param<T>& beta() { return beta_; }
    Param<T>& running_mean() { return running_mean_; }
    Param<T>& running_var() { return running_var_; }

private:
    int channels_;
    NormSettings settings_;
    Param<T> gamma_, beta_, running_mean_, running_var_;
    Mode mode_ = Mode::infer;
    Tensor4<T> x_hat_;
    std::vector<double> inv_std_;
};

/// ELU with alpha = 1.
template <typename T>
class Elu final : public Layer<T> {
public:
    Tensor4<T> forward(const Tensor4<T>& x, Mode mode) override;
    Tensor4<T> backward(const Tensor4<T>& grad) override;

private:
    Tensor4<T> output_;
};

/// Nearest-neighbor 2x upsampling.
template <typename T>
class Upsample2x final : public Layer<T> {
public:
    Tensor4<T> forward(const Tensor4<T>& x, Mode mode) override;
    Tensor4<T> backward(const Tensor4<T>& grad) override;

private:
    Shape input_shape_;
};

template <typename T>
class Sequential final : public Layer<T> {
public:
    Sequential() = default;
    Sequential& add(std::unique_ptr<Layer<T>> layer);

    Tensor4<T> forward(const Tensor4<T>& x, Mode mode) override;
    Tensor4<T> backward(const Tensor4<T>& grad) override;
    void collect(std::vector<Param<T>*>& out) override;

    std::size_t size() const { return layers_.size(); }
    Layer<T>& at(std::size_t i) { return *layers_[i]; }

private:
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

/// Convolution -> ELU -> batch norm.
template <typename T>
std::unique_ptr<Sequential<T>> make_conv_block(const std::string& name, int kernel, int c_in,
                                               int c_out, int stride, NormSettings norm, Rng& rng);

/// Fully dense block: each growth layer (1x1 bottleneck to f_in, then 3x3 to
/// k = f_in / layers) sees the block input concatenated with every earlier
/// growth output; the block emits that full concatenation, i.e.
/// f_in + layers * k = 2 * f_in channels.
template <typename T>
class DenseBlock final : public Layer<T> {
public:
    DenseBlock(const std::string& name, int f_in, int layers, NormSettings norm, Rng& rng);

    Tensor4<T> forward(const Tensor4<T>& x, Mode mode) override;
    Tensor4<T> backward(const Tensor4<T>& grad) override;
    void collect(std::vector<Param<T>*>& out) override;

    int input_channels() const { return f_in_; }
    int growth() const { return k_; }
    int output_channels() const { return f_in_ + k_ * static_cast<int>(growth_.size()); }
    const Shape& last_input_shape() const { return last_in_; }
    const Shape& last_output_shape() const { return last_out_; }

private:
    Shape last_in_;
    Shape last_out_;
    int f_in_;
    int k_;
    std::vector<std::unique_ptr<Sequential<T>>> growth_;
};

/// 1x1 conv block followed by a stride-2 3x3 conv block; channels unchanged.
template <typename T>
std::unique_ptr<Sequential<T>> make_down_block(const std::string& name, int channels,
                                               NormSettings norm, Rng& rng);

/// Expanding-path step: nearest 2x upsample, 3x3 conv block to `up_channels`,
/// concatenation with the skip tensor, then `level` (the per-level block).
template <typename T>
class UpBlock {
public:
    UpBlock(const std::string& name, int c_in, int up_channels, std::unique_ptr<Layer<T>> level,
            NormSettings norm, Rng& rng);

    Tensor4<T> forward(const Tensor4<T>& x, const Tensor4<T>& skip, Mode mode);
    /// Returns (grad wrt x, grad wrt skip).
    std::pair<Tensor4<T>, Tensor4<T>> backward(const Tensor4<T>& grad);
    void collect(std::vector<Param<T>*>& out);

private:
    Upsample2x<T> upsample_;
    std::unique_ptr<Sequential<T>> up_conv_;
    std::unique_ptr<Layer<T>> level_;
    int up_channels_;
    int skip_channels_ = 0;
};

} // namespace pam::nn
