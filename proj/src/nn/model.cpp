#include "pamrecon/nn/model.hpp"

#include <utility>

#include "pamrecon/errors.hpp"

namespace pam::nn {

std::string to_string(Architecture arch) {
    return arch == Architecture::fd_unet ? "fd_unet" : "unet";
}

Architecture parse_architecture(const std::string& text) {
    if (text == "fd_unet")
        return Architecture::fd_unet;
    if (text == "unet")
        return Architecture::unet;
    throw ConfigError("unknown architecture '" + text + "' (expected fd_unet or unet)");
}

void validate(const ModelConfig& cfg) {
    if (cfg.depth < 1 || cfg.depth > 12)
        throw ConfigError("depth must be in [1, 12], got " + std::to_string(cfg.depth));
    if (cfg.base_filters < 1)
        throw ConfigError("base_filters must be >= 1");
    if (cfg.dense_layers < 1)
        throw ConfigError("dense_layers must be >= 1");
    if (cfg.architecture == Architecture::fd_unet && cfg.base_filters % cfg.dense_layers != 0)
        throw ConfigError("base_filters " + std::to_string(cfg.base_filters) +
                          " must be divisible by dense_layers " +
                          std::to_string(cfg.dense_layers) + " so the growth rate is integral");
    if (!(cfg.bn_momentum >= 0.0 && cfg.bn_momentum < 1.0))
        throw ConfigError("bn_momentum must be in [0, 1)");
    if (!(cfg.bn_epsilon > 0.0))
        throw ConfigError("bn_epsilon must be > 0");
}

template <typename T>
struct Model<T>::Graph {
    std::unique_ptr<Sequential<T>> stem;
    std::vector<std::unique_ptr<Layer<T>>> encoders; // one per contracting level
    std::vector<std::unique_ptr<Sequential<T>>> downs;
    std::unique_ptr<Layer<T>> bottom;
    std::vector<std::unique_ptr<UpBlock<T>>> ups; // ups[l] restores level l
    std::vector<DenseBlock<T>*> decoder_dense;    // fd_unet only, parallel to ups
    std::unique_ptr<Conv2d<T>> head;
    std::vector<Tensor4<T>> skips;
};

namespace {

template <typename T>
std::unique_ptr<Sequential<T>> make_conv_pair(const std::string& name, int c_in, int c_out,
                                              NormSettings norm, Rng& rng) {
    auto pair = std::make_unique<Sequential<T>>();
    pair->add(make_conv_block<T>(name + ".a", 3, c_in, c_out, 1, norm, rng));
    pair->add(make_conv_block<T>(name + ".b", 3, c_out, c_out, 1, norm, rng));
    return pair;
}

} // namespace

template <typename T>
Model<T>::Model(const ModelConfig& cfg, std::uint64_t seed) : config_(cfg), graph_(std::make_unique<Graph>()) {
    validate(cfg);
    Rng rng(seed, Stream::init);
    const NormSettings norm{cfg.bn_momentum, cfg.bn_epsilon};
    const int levels = cfg.depth;
    const int b = cfg.base_filters;
    Graph& g = *graph_;

    g.stem = make_conv_block<T>("stem", 3, 1, b, 1, norm, rng);
    if (cfg.architecture == Architecture::fd_unet) {
        for (int l = 0; l + 1 < levels; ++l) {
            const int f = b << l;
            const std::string lv = "enc" + std::to_string(l + 1);
            g.encoders.push_back(std::make_unique<DenseBlock<T>>(lv + ".dense", f, cfg.dense_layers, norm, rng));
            g.downs.push_back(make_down_block<T>("down" + std::to_string(l + 1), 2 * f, norm, rng));
        }
        g.bottom = std::make_unique<DenseBlock<T>>("bottleneck.dense", b << (levels - 1),
                                                   cfg.dense_layers, norm, rng);
        g.ups.resize(static_cast<std::size_t>(levels - 1));
        g.decoder_dense.resize(static_cast<std::size_t>(levels - 1));
        for (int l = levels - 2; l >= 0; --l) {
            const int f = b << l;
            const std::string lv = "dec" + std::to_string(l + 1);
            auto level = std::make_unique<Sequential<T>>();
            level->add(make_conv_block<T>(lv + ".reduce", 1, 4 * f, f, 1, norm, rng));
            auto dense = std::make_unique<DenseBlock<T>>(lv + ".dense", f, cfg.dense_layers, norm, rng);
            g.decoder_dense[static_cast<std::size_t>(l)] = dense.get();
            level->add(std::move(dense));
            g.ups[static_cast<std::size_t>(l)] =
                std::make_unique<UpBlock<T>>(lv, 4 * f, 2 * f, std::move(level), norm, rng);
        }
        g.head = std::make_unique<Conv2d<T>>("head", 1, 1, 2 * b, 1, 1, rng);
    } else {
        int c = b;
        for (int l = 0; l + 1 < levels; ++l) {
            const int f = b << l;
            const std::string lv = "enc" + std::to_string(l + 1);
            g.encoders.push_back(make_conv_pair<T>(lv + ".pair", c, f, norm, rng));
            g.downs.push_back(make_down_block<T>("down" + std::to_string(l + 1), f, norm, rng));
            c = f;
        }
        const int fb = b << (levels - 1);
        g.bottom = make_conv_pair<T>("bottleneck.pair", c, fb, norm, rng);
        g.ups.resize(static_cast<std::size_t>(levels - 1));
        for (int l = levels - 2; l >= 0; --l) {
            const int f = b << l;
            const std::string lv = "dec" + std::to_string(l + 1);
            g.ups[static_cast<std::size_t>(l)] = std::make_unique<UpBlock<T>>(
                lv, 2 * f, f, make_conv_pair<T>(lv + ".pair", 2 * f, f, norm, rng), norm, rng);
        }
        g.head = std::make_unique<Conv2d<T>>("head", 1, 1, b, 1, 1, rng);
    }

    g.stem->collect(params_);
    for (int l = 0; l + 1 < levels; ++l) {
        g.encoders[static_cast<std::size_t>(l)]->collect(params_);
        g.downs[static_cast<std::size_t>(l)]->collect(params_);
    }
    g.bottom->collect(params_);
    for (int l = levels - 2; l >= 0; --l)
        g.ups[static_cast<std::size_t>(l)]->collect(params_);
    g.head->collect(params_);
}

template <typename T>
Model<T>::~Model() = default;
template <typename T>
Model<T>::Model(Model&&) noexcept = default;
template <typename T>
Model<T>& Model<T>::operator=(Model&&) noexcept = default;

template <typename T>
Tensor4<T> Model<T>::forward(const Tensor4<T>& x, Mode mode) {
    const int m = spatial_multiple();
    if (x.channels() != 1)
        throw ShapeError("model input must have 1 channel, got " + to_string(x.shape()));
    if (x.height() % m != 0 || x.width() % m != 0)
        throw ShapeError("model input spatial dims " + to_string(x.shape()) +
                         " not divisible by " + std::to_string(m));
    Graph& g = *graph_;
    const bool dense = config_.architecture == Architecture::fd_unet;
    trace_.clear();
    auto record = [&](std::string name, std::string kind, const Shape& in, const Shape& out) {
        trace_.push_back(BlockTrace{std::move(name), std::move(kind), in, out});
    };

    Tensor4<T> h = g.stem->forward(x, mode);
    record("stem", "stem", x.shape(), h.shape());
    const int levels = config_.depth;
    g.skips.assign(static_cast<std::size_t>(levels - 1), Tensor4<T>());
    for (int l = 0; l + 1 < levels; ++l) {
        const auto i = static_cast<std::size_t>(l);
        const std::string lv = std::to_string(l + 1);
        Shape in = h.shape();
        h = g.encoders[i]->forward(h, mode);
        record("enc" + lv, dense ? "dense" : "conv_pair", in, h.shape());
        g.skips[i] = h;
        in = h.shape();
        h = g.downs[i]->forward(h, mode);
        record("down" + lv, "down", in, h.shape());
    }
    Shape in = h.shape();
    h = g.bottom->forward(h, mode);
    record("bottleneck", dense ? "dense" : "conv_pair", in, h.shape());
    for (int l = levels - 2; l >= 0; --l) {
        const auto i = static_cast<std::size_t>(l);
        const std::string lv = std::to_string(l + 1);
        in = h.shape();
        h = g.ups[i]->forward(h, g.skips[i], mode);
        record("dec" + lv, "up", in, h.shape());
        if (dense) {
            const DenseBlock<T>& db = *g.decoder_dense[i];
            record("dec" + lv + ".dense", "dense", db.last_input_shape(), db.last_output_shape());
        }
    }
    in = h.shape();
    h = g.head->forward(h, mode);
    record("head", "head", in, h.shape());
    return h;
}

template <typename T>
void Model<T>::backward(const Tensor4<T>& grad_output) {
    Graph& g = *graph_;
    const int levels = config_.depth;
    Tensor4<T> grad = g.head->backward(grad_output);
    std::vector<Tensor4<T>> skip_grads(static_cast<std::size_t>(levels - 1));
    for (int l = 0; l + 1 < levels; ++l) {
        auto [gx, gskip] = g.ups[static_cast<std::size_t>(l)]->backward(grad);
        grad = std::move(gx);
        skip_grads[static_cast<std::size_t>(l)] = std::move(gskip);
    }
    grad = g.bottom->backward(grad);
    for (int l = levels - 2; l >= 0; --l) {
        const auto i = static_cast<std::size_t>(l);
        grad = g.downs[i]->backward(grad);
        add_into(grad, skip_grads[i]);
        grad = g.encoders[i]->backward(grad);
    }
    g.stem->backward(grad);
}

template <typename T>
void Model<T>::zero_grad() {
    for (Param<T>* p : params_)
        std::fill(p->grad.begin(), p->grad.end(), T(0));
}

template <typename T>
std::size_t Model<T>::trainable_count() const {
    std::size_t n = 0;
    for (const Param<T>* p : params_)
        if (p->trainable)
            n += p->size();
    return n;
}

template <typename T>
ModelState<T> snapshot(const Model<T>& model) {
    ModelState<T> state;
    state.reserve(model.parameters().size());
    for (const Param<T>* p : model.parameters())
        state.push_back(p->value);
    return state;
}

template <typename T>
void restore(Model<T>& model, const ModelState<T>& state) {
    const auto& params = model.parameters();
    if (state.size() != params.size())
        throw ConfigError("model state has " + std::to_string(state.size()) + " arrays, model has " +
                          std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (state[i].size() != params[i]->size())
            throw ConfigError("model state size mismatch for " + params[i]->name);
        params[i]->value = state[i];
    }
}

template class Model<float>;
template class Model<double>;
template ModelState<float> snapshot(const Model<float>&);
template ModelState<double> snapshot(const Model<double>&);
template void restore(Model<float>&, const ModelState<float>&);
template void restore(Model<double>&, const ModelState<double>&);

} // namespace pam::nn
