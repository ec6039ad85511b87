#include "pamrecon/nn/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "pamrecon/errors.hpp"

namespace pam::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using ConstRowVecMap = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;
template <typename T>
using RowVecMap = Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>;

std::size_t product(const std::vector<int>& dims) {
    std::size_t n = 1;
    for (int d : dims)
        n *= static_cast<std::size_t>(d);
    return n;
}

} // namespace

template <typename T>
Param<T>::Param(std::string n, std::vector<int> d, bool train)
    : name(std::move(n)), dims(std::move(d)), value(product(dims), T(0)),
      grad(product(dims), T(0)), trainable(train) {}

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(const std::string& name, int kh, int kw, int c_in, int c_out, int stride,
                  Rng& rng)
    : kh_(kh), kw_(kw), c_in_(c_in), c_out_(c_out), stride_(stride),
      kernel_(name + ".kernel", {kh, kw, c_in, c_out}), bias_(name + ".bias", {c_out}) {
    if (kh < 1 || kw < 1 || c_in < 1 || c_out < 1)
        throw ConfigError(name + ": conv dims must be >= 1");
    if (stride != 1 && stride != 2)
        throw ConfigError(name + ": stride must be 1 or 2");
    const double limit = std::sqrt(6.0 / static_cast<double>(kh * kw * c_in));
    for (auto& v : kernel_.value)
        v = static_cast<T>(rng.uniform(-limit, limit));
}

template <typename T>
typename Conv2d<T>::Geometry Conv2d<T>::geometry(const Shape& in) const {
    Geometry g{};
    g.oh = (in.h + stride_ - 1) / stride_;
    g.ow = (in.w + stride_ - 1) / stride_;
    g.pad_top = std::max((g.oh - 1) * stride_ + kh_ - in.h, 0) / 2;
    g.pad_left = std::max((g.ow - 1) * stride_ + kw_ - in.w, 0) / 2;
    return g;
}

template <typename T>
void Conv2d<T>::im2col(const Tensor4<T>& x, int n, const Geometry& g, int oy_begin, int oy_end,
                       AlignedVector<T>& col) const {
    const int h = x.height();
    const int w = x.width();
    const std::size_t k = static_cast<std::size_t>(kh_) * kw_ * c_in_;
    col.resize(static_cast<std::size_t>(oy_end - oy_begin) * g.ow * k);
    T* dst = col.data();
    for (int oy = oy_begin; oy < oy_end; ++oy)
        for (int ox = 0; ox < g.ow; ++ox) {
            for (int ky = 0; ky < kh_; ++ky) {
                const int iy = oy * stride_ - g.pad_top + ky;
                for (int kx = 0; kx < kw_; ++kx) {
                    const int ix = ox * stride_ - g.pad_left + kx;
                    if (iy >= 0 && iy < h && ix >= 0 && ix < w)
                        std::copy_n(x.data() + x.offset(n, iy, ix, 0), c_in_, dst);
                    else
                        std::fill_n(dst, c_in_, T(0));
                    dst += c_in_;
                }
            }
        }
}

template <typename T>
int Conv2d<T>::chunk_rows(const Geometry& g) const {
    // keep each unfolded block around 1 MB so it stays in cache
    const std::size_t per_row = static_cast<std::size_t>(g.ow) * kh_ * kw_ * c_in_ * sizeof(T);
    return static_cast<int>(std::clamp<std::size_t>((std::size_t{1} << 20) / per_row, 1, static_cast<std::size_t>(g.oh)));
}

template <typename T>
Tensor4<T> Conv2d<T>::forward(const Tensor4<T>& x, Mode) {
    if (x.channels() != c_in_)
        throw ShapeError(kernel_.name + ": expected " + std::to_string(c_in_) +
                         " input channels, got " + to_string(x.shape()));
    input_ = x;
    const Geometry g = geometry(x.shape());
    Tensor4<T> out(x.batch(), g.oh, g.ow, c_out_);
    const auto k = static_cast<Eigen::Index>(kh_) * kw_ * c_in_;
    ConstMatMap<T> weights(kernel_.value.data(), k, c_out_);
    ConstRowVecMap<T> bias(bias_.value.data(), c_out_);
    if (kh_ == 1 && kw_ == 1 && stride_ == 1) {
        const auto rows = static_cast<Eigen::Index>(x.batch()) * g.oh * g.ow;
        MatMap<T> y(out.data(), rows, c_out_);
        y.noalias() = ConstMatMap<T>(x.data(), rows, k) * weights;
        y.rowwise() += bias;
        return out;
    }
    const int step = chunk_rows(g);
    AlignedVector<T> col;
    for (int n = 0; n < x.batch(); ++n)
        for (int oy = 0; oy < g.oh; oy += step) {
            const int end = std::min(oy + step, g.oh);
            im2col(x, n, g, oy, end, col);
            const auto rows = static_cast<Eigen::Index>(end - oy) * g.ow;
            MatMap<T> y(out.data() + out.offset(n, oy, 0, 0), rows, c_out_);
            y.noalias() = ConstMatMap<T>(col.data(), rows, k) * weights;
            y.rowwise() += bias;
        }
    return out;
}

template <typename T>
Tensor4<T> Conv2d<T>::backward(const Tensor4<T>& grad) {
    const Geometry g = geometry(input_.shape());
    if (grad.batch() != input_.batch() || grad.height() != g.oh || grad.width() != g.ow ||
        grad.channels() != c_out_)
        throw ShapeError(kernel_.name + ": gradient shape " + to_string(grad.shape()));
    const int h = input_.height();
    const int w = input_.width();
    const auto k = static_cast<Eigen::Index>(kh_) * kw_ * c_in_;
    ConstMatMap<T> weights(kernel_.value.data(), k, c_out_);
    MatMap<T> dweights(kernel_.grad.data(), k, c_out_);
    RowVecMap<T> dbias(bias_.grad.data(), c_out_);

    Tensor4<T> dx(input_.shape(), T(0));
    if (kh_ == 1 && kw_ == 1 && stride_ == 1) {
        const auto rows = static_cast<Eigen::Index>(input_.batch()) * g.oh * g.ow;
        ConstMatMap<T> dy(grad.data(), rows, c_out_);
        dweights.noalias() += ConstMatMap<T>(input_.data(), rows, k).transpose() * dy;
        dbias += dy.colwise().sum();
        MatMap<T>(dx.data(), rows, c_in_).noalias() = dy * weights.transpose();
        return dx;
    }
    const int step = chunk_rows(g);
    AlignedVector<T> col;
    RowMat<T> dcol;
    for (int n = 0; n < input_.batch(); ++n)
        for (int oy0 = 0; oy0 < g.oh; oy0 += step) {
            const int end = std::min(oy0 + step, g.oh);
            const auto rows = static_cast<Eigen::Index>(end - oy0) * g.ow;
            ConstMatMap<T> dy(grad.data() + grad.offset(n, oy0, 0, 0), rows, c_out_);
            im2col(input_, n, g, oy0, end, col);
            dweights.noalias() += ConstMatMap<T>(col.data(), rows, k).transpose() * dy;
            dbias += dy.colwise().sum();
            dcol.noalias() = dy * weights.transpose();
            const T* d = dcol.data();
            for (int oy = oy0; oy < end; ++oy)
                for (int ox = 0; ox < g.ow; ++ox)
                    for (int ky = 0; ky < kh_; ++ky) {
                        const int iy = oy * stride_ - g.pad_top + ky;
                        for (int kx = 0; kx < kw_; ++kx) {
                            const int ix = ox * stride_ - g.pad_left + kx;
                            if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
                                T* dst = dx.data() + dx.offset(n, iy, ix, 0);
                                for (int c = 0; c < c_in_; ++c)
                                    dst[c] += d[c];
                            }
                            d += c_in_;
                        }
                    }
        }
    return dx;
}

template <typename T>
void Conv2d<T>::collect(std::vector<Param<T>*>& out) {
    out.push_back(&kernel_);
    out.push_back(&bias_);
}

// ------------------------------------------------------------- BatchNorm

template <typename T>
BatchNorm<T>::BatchNorm(const std::string& name, int channels, NormSettings settings)
    : channels_(channels), settings_(settings), gamma_(name + ".gamma", {channels}),
      beta_(name + ".beta", {channels}), running_mean_(name + ".running_mean", {channels}, false),
      running_var_(name + ".running_var", {channels}, false) {
    std::fill(gamma_.value.begin(), gamma_.value.end(), T(1));
    std::fill(running_var_.value.begin(), running_var_.value.end(), T(1));
}

template <typename T>
Tensor4<T> BatchNorm<T>::forward(const Tensor4<T>& x, Mode mode) {
    if (x.channels() != channels_)
        throw ShapeError(gamma_.name + ": expected " + std::to_string(channels_) +
                         " channels, got " + to_string(x.shape()));
    mode_ = mode;
    const std::size_t pixels = x.size() / static_cast<std::size_t>(channels_);
    const auto c = static_cast<std::size_t>(channels_);
    std::vector<double> mean(c, 0.0), var(c, 0.0);
    if (mode == Mode::train) {
        const T* p = x.data();
        for (std::size_t i = 0; i < pixels; ++i, p += c)
            for (std::size_t k = 0; k < c; ++k)
                mean[k] += p[k];
        for (auto& m : mean)
            m /= static_cast<double>(pixels);
        p = x.data();
        for (std::size_t i = 0; i < pixels; ++i, p += c)
            for (std::size_t k = 0; k < c; ++k) {
                const double d = p[k] - mean[k];
                var[k] += d * d;
            }
        for (auto& v : var)
            v /= static_cast<double>(pixels);
        const double m = settings_.momentum;
        for (std::size_t k = 0; k < c; ++k) {
            running_mean_.value[k] = static_cast<T>(m * running_mean_.value[k] + (1.0 - m) * mean[k]);
            running_var_.value[k] = static_cast<T>(m * running_var_.value[k] + (1.0 - m) * var[k]);
        }
    } else {
        for (std::size_t k = 0; k < c; ++k) {
            mean[k] = running_mean_.value[k];
            var[k] = running_var_.value[k];
        }
    }
    inv_std_.resize(c);
    for (std::size_t k = 0; k < c; ++k)
        inv_std_[k] = 1.0 / std::sqrt(var[k] + settings_.epsilon);

    x_hat_ = Tensor4<T>(x.shape());
    Tensor4<T> out(x.shape());
    const T* src = x.data();
    T* xh = x_hat_.data();
    T* dst = out.data();
    for (std::size_t i = 0; i < pixels; ++i)
        for (std::size_t k = 0; k < c; ++k, ++src, ++xh, ++dst) {
            const double n = (*src - mean[k]) * inv_std_[k];
            *xh = static_cast<T>(n);
            *dst = static_cast<T>(gamma_.value[k] * n + beta_.value[k]);
        }
    return out;
}

template <typename T>
Tensor4<T> BatchNorm<T>::backward(const Tensor4<T>& grad) {
    if (!(grad.shape() == x_hat_.shape()))
        throw ShapeError(gamma_.name + ": gradient shape " + to_string(grad.shape()));
    const auto c = static_cast<std::size_t>(channels_);
    const std::size_t pixels = grad.size() / c;
    std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
    const T* g = grad.data();
    const T* xh = x_hat_.data();
    for (std::size_t i = 0; i < pixels; ++i)
        for (std::size_t k = 0; k < c; ++k, ++g, ++xh) {
            sum_g[k] += *g;
            sum_gx[k] += static_cast<double>(*g) * *xh;
        }
    for (std::size_t k = 0; k < c; ++k) {
        gamma_.grad[k] += static_cast<T>(sum_gx[k]);
        beta_.grad[k] += static_cast<T>(sum_g[k]);
    }

    Tensor4<T> dx(grad.shape());
    g = grad.data();
    xh = x_hat_.data();
    T* d = dx.data();
    const double m = static_cast<double>(pixels);
    for (std::size_t i = 0; i < pixels; ++i)
        for (std::size_t k = 0; k < c; ++k, ++g, ++xh, ++d) {
            const double scale = gamma_.value[k] * inv_std_[k];
            if (mode_ == Mode::train)
                *d = static_cast<T>(scale * (*g - sum_g[k] / m - *xh * sum_gx[k] / m));
            else
                *d = static_cast<T>(scale * *g);
        }
    return dx;
}

template <typename T>
void BatchNorm<T>::collect(std::vector<Param<T>*>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
}

// ------------------------------------------------------------------- ELU

template <typename T>
Tensor4<T> Elu<T>::forward(const Tensor4<T>& x, Mode) {
    output_ = Tensor4<T>(x.shape());
    const T* s = x.data();
    T* d = output_.data();
    for (std::size_t i = 0; i < x.size(); ++i)
        d[i] = s[i] > T(0) ? s[i] : std::expm1(s[i]);
    return output_;
}

template <typename T>
Tensor4<T> Elu<T>::backward(const Tensor4<T>& grad) {
    if (!(grad.shape() == output_.shape()))
        throw ShapeError("elu: gradient shape " + to_string(grad.shape()));
    Tensor4<T> dx(grad.shape());
    const T* y = output_.data();
    const T* g = grad.data();
    T* d = dx.data();
    // y > 0 exactly when x > 0; below zero dy/dx = exp(x) = y + 1
    for (std::size_t i = 0; i < grad.size(); ++i)
        d[i] = y[i] > T(0) ? g[i] : g[i] * (y[i] + T(1));
    return dx;
}

// ------------------------------------------------------------ Upsample2x

template <typename T>
Tensor4<T> Upsample2x<T>::forward(const Tensor4<T>& x, Mode) {
    input_shape_ = x.shape();
    Tensor4<T> out(x.batch(), 2 * x.height(), 2 * x.width(), x.channels());
    const int c = x.channels();
    for (int n = 0; n < x.batch(); ++n)
        for (int y = 0; y < out.height(); ++y)
            for (int xx = 0; xx < out.width(); ++xx)
                std::copy_n(x.data() + x.offset(n, y / 2, xx / 2, 0), c,
                            out.data() + out.offset(n, y, xx, 0));
    return out;
}

template <typename T>
Tensor4<T> Upsample2x<T>::backward(const Tensor4<T>& grad) {
    Tensor4<T> dx(input_shape_, T(0));
    if (grad.batch() != dx.batch() || grad.height() != 2 * dx.height() ||
        grad.width() != 2 * dx.width() || grad.channels() != dx.channels())
        throw ShapeError("upsample: gradient shape " + to_string(grad.shape()));
    const int c = grad.channels();
    for (int n = 0; n < grad.batch(); ++n)
        for (int y = 0; y < grad.height(); ++y)
            for (int x = 0; x < grad.width(); ++x) {
                const T* g = grad.data() + grad.offset(n, y, x, 0);
                T* d = dx.data() + dx.offset(n, y / 2, x / 2, 0);
                for (int k = 0; k < c; ++k)
                    d[k] += g[k];
            }
    return dx;
}

// ------------------------------------------------------------ Sequential

template <typename T>
Sequential<T>& Sequential<T>::add(std::unique_ptr<Layer<T>> layer) {
    layers_.push_back(std::move(layer));
    return *this;
}

template <typename T>
Tensor4<T> Sequential<T>::forward(const Tensor4<T>& x, Mode mode) {
    Tensor4<T> h = x;
    for (auto& layer : layers_)
        h = layer->forward(h, mode);
    return h;
}

template <typename T>
Tensor4<T> Sequential<T>::backward(const Tensor4<T>& grad) {
    Tensor4<T> g = grad;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
        g = (*it)->backward(g);
    return g;
}

template <typename T>
void Sequential<T>::collect(std::vector<Param<T>*>& out) {
    for (auto& layer : layers_)
        layer->collect(out);
}

template <typename T>
std::unique_ptr<Sequential<T>> make_conv_block(const std::string& name, int kernel, int c_in,
                                               int c_out, int stride, NormSettings norm, Rng& rng) {
    auto block = std::make_unique<Sequential<T>>();
    block->add(std::make_unique<Conv2d<T>>(name + ".conv", kernel, kernel, c_in, c_out, stride, rng));
    block->add(std::make_unique<Elu<T>>());
    block->add(std::make_unique<BatchNorm<T>>(name + ".bn", c_out, norm));
    return block;
}

// ------------------------------------------------------------ DenseBlock

template <typename T>
DenseBlock<T>::DenseBlock(const std::string& name, int f_in, int layers, NormSettings norm, Rng& rng)
    : f_in_(f_in), k_(layers > 0 ? f_in / layers : 0) {
    if (layers < 1 || f_in < 1 || f_in % layers != 0)
        throw ConfigError(name + ": input channels " + std::to_string(f_in) +
                          " not divisible into " + std::to_string(layers) + " growth layers");
    for (int i = 0; i < layers; ++i) {
        const std::string prefix = name + ".layer" + std::to_string(i);
        auto layer = std::make_unique<Sequential<T>>();
        layer->add(make_conv_block<T>(prefix + ".bottleneck", 1, f_in + i * k_, f_in, 1, norm, rng));
        layer->add(make_conv_block<T>(prefix + ".growth", 3, f_in, k_, 1, norm, rng));
        growth_.push_back(std::move(layer));
    }
}

template <typename T>
Tensor4<T> DenseBlock<T>::forward(const Tensor4<T>& x, Mode mode) {
    if (x.channels() != f_in_)
        throw ShapeError("dense block: expected " + std::to_string(f_in_) + " channels, got " +
                         to_string(x.shape()));
    Tensor4<T> features = x;
    for (auto& layer : growth_)
        features = concat_channels(features, layer->forward(features, mode));
    last_in_ = x.shape();
    last_out_ = features.shape();
    return features;
}

template <typename T>
Tensor4<T> DenseBlock<T>::backward(const Tensor4<T>& grad) {
    if (grad.channels() != output_channels())
        throw ShapeError("dense block: gradient shape " + to_string(grad.shape()));
    // gradient w.r.t. the running concatenation, shrinking by k per layer
    Tensor4<T> g = grad;
    for (int i = static_cast<int>(growth_.size()) - 1; i >= 0; --i) {
        const int width = f_in_ + i * k_;
        Tensor4<T> g_features = slice_channels(g, 0, width);
        add_into(g_features, growth_[static_cast<std::size_t>(i)]->backward(slice_channels(g, width, k_)));
        g = std::move(g_features);
    }
    return g;
}

template <typename T>
void DenseBlock<T>::collect(std::vector<Param<T>*>& out) {
    for (auto& layer : growth_)
        layer->collect(out);
}

template <typename T>
std::unique_ptr<Sequential<T>> make_down_block(const std::string& name, int channels,
                                               NormSettings norm, Rng& rng) {
    auto block = std::make_unique<Sequential<T>>();
    block->add(make_conv_block<T>(name + ".pointwise", 1, channels, channels, 1, norm, rng));
    block->add(make_conv_block<T>(name + ".strided", 3, channels, channels, 2, norm, rng));
    return block;
}

// --------------------------------------------------------------- UpBlock

template <typename T>
UpBlock<T>::UpBlock(const std::string& name, int c_in, int up_channels,
                    std::unique_ptr<Layer<T>> level, NormSettings norm, Rng& rng)
    : up_conv_(make_conv_block<T>(name + ".up", 3, c_in, up_channels, 1, norm, rng)),
      level_(std::move(level)), up_channels_(up_channels) {}

template <typename T>
Tensor4<T> UpBlock<T>::forward(const Tensor4<T>& x, const Tensor4<T>& skip, Mode mode) {
    if (skip.batch() != x.batch() || skip.height() != 2 * x.height() ||
        skip.width() != 2 * x.width())
        throw ShapeError("up block: skip " + to_string(skip.shape()) + " does not match input " +
                         to_string(x.shape()));
    skip_channels_ = skip.channels();
    Tensor4<T> up = up_conv_->forward(upsample_.forward(x, mode), mode);
    return level_->forward(concat_channels(up, skip), mode);
}

template <typename T>
std::pair<Tensor4<T>, Tensor4<T>> UpBlock<T>::backward(const Tensor4<T>& grad) {
    Tensor4<T> g_cat = level_->backward(grad);
    Tensor4<T> g_skip = slice_channels(g_cat, up_channels_, skip_channels_);
    Tensor4<T> g_up = slice_channels(g_cat, 0, up_channels_);
    Tensor4<T> g_x = upsample_.backward(up_conv_->backward(g_up));
    return {std::move(g_x), std::move(g_skip)};
}

template <typename T>
void UpBlock<T>::collect(std::vector<Param<T>*>& out) {
    up_conv_->collect(out);
    level_->collect(out);
}

#define PAM_INSTANTIATE(T)                                                                      \
    template struct Param<T>;                                                                   \
    template class Conv2d<T>;                                                                   \
    template class BatchNorm<T>;                                                                \
    template class Elu<T>;                                                                      \
    template class Upsample2x<T>;                                                               \
    template class Sequential<T>;                                                               \
    template class DenseBlock<T>;                                                               \
    template class UpBlock<T>;                                                                  \
    template std::unique_ptr<Sequential<T>> make_conv_block<T>(const std::string&, int, int,   \
                                                               int, int, NormSettings, Rng&);   \
    template std::unique_ptr<Sequential<T>> make_down_block<T>(const std::string&, int,        \
                                                               NormSettings, Rng&);

PAM_INSTANTIATE(float)
PAM_INSTANTIATE(double)
#undef PAM_INSTANTIATE

} // namespace pam::nn
