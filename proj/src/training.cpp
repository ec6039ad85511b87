#include "pamrecon/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "pamrecon/errors.hpp"
#include "pamrecon/losses.hpp"

namespace pam {

using nn::Mode;
using nn::Tensor4;

template <typename T>
void Adam<T>::step(const std::vector<nn::Param<T>*>& params) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i]->size(), 0.0);
            v_[i].assign(params[i]->size(), 0.0);
        }
    }
    if (m_.size() != params.size())
        throw ConfigError("Adam: parameter list changed between steps");
    ++t_;
    const double b1 = settings_.beta1;
    const double b2 = settings_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        nn::Param<T>& p = *params[i];
        if (!p.trainable)
            continue;
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double g = p.grad[j];
            m[j] = b1 * m[j] + (1.0 - b1) * g;
            v[j] = b2 * v[j] + (1.0 - b2) * g * g;
            const double m_hat = m[j] / c1;
            const double v_hat = v[j] / c2;
            p.value[j] = static_cast<T>(p.value[j] - settings_.lr * m_hat / (std::sqrt(v_hat) + settings_.epsilon));
        }
    }
}

template class Adam<float>;
template class Adam<double>;

double saving_metric(double ssim, double psnr) {
    constexpr double psnr_limit = 40.0;
    if (std::isinf(psnr) && psnr > 0.0)
        psnr = psnr_limit;
    return (1.0 - ssim) + (psnr_limit - psnr) / 275.0;
}

SplitSizes split_sizes(std::size_t n, const std::array<double, 3>& fractions) {
    double sum = 0.0;
    for (double f : fractions) {
        if (f < 0.0)
            throw InvalidInput("split fractions must be >= 0");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw InvalidInput("split fractions must sum to 1");
    // the small slack keeps products like 0.1 * 30 from flooring to 2
    auto part = [n](double f) {
        return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9));
    };
    SplitSizes s;
    s.train = part(fractions[0]);
    s.test = std::min(part(fractions[2]), n - s.train);
    s.val = n - s.train - s.test;
    return s;
}

Image sparse_input(const Image& truth, const DownsamplingRatio& ratio) {
    return zero_fill(downsample(truth, ratio));
}

std::string format_log_record(const EpochRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g", r.epoch, r.train_loss, r.val_psnr,
                  r.val_ssim, r.saving_metric);
    return buf;
}

namespace {

Tensor4<float> stack(std::span<const Image> images, std::size_t begin, std::size_t count) {
    const Image& first = images[begin];
    Tensor4<float> t(static_cast<int>(count), static_cast<int>(first.height()),
                     static_cast<int>(first.width()), 1);
    for (std::size_t i = 0; i < count; ++i) {
        const Image& img = images[begin + i];
        if (img.height() != first.height() || img.width() != first.width())
            throw ShapeError("batch images differ in size");
        std::copy(img.pixels().begin(), img.pixels().end(),
                  t.data() + t.offset(static_cast<int>(i), 0, 0, 0));
    }
    return t;
}

Image unstack(const Tensor4<float>& t, int n) {
    Image img(static_cast<std::size_t>(t.height()), static_cast<std::size_t>(t.width()));
    const float* src = t.data() + t.offset(n, 0, 0, 0);
    std::copy(src, src + img.size(), img.pixels().begin());
    return img;
}

double largest_gradient(const std::vector<nn::Param<float>*>& params) {
    double g = 0.0;
    for (const auto* p : params)
        for (float v : p->grad)
            g = std::max(g, static_cast<double>(std::abs(v)));
    return g;
}

} // namespace

MetricsReport evaluate_pairs(nn::Model<float>& model, std::span<const Image> truths,
                             std::span<const Image> inputs, std::size_t batch_size) {
    if (truths.size() != inputs.size() || truths.empty())
        throw InvalidInput("evaluate_pairs: need matching, non-empty truth/input lists");
    batch_size = std::max<std::size_t>(batch_size, 1);
    MetricsReport mean;
    for (std::size_t begin = 0; begin < inputs.size(); begin += batch_size) {
        const std::size_t count = std::min(batch_size, inputs.size() - begin);
        const Tensor4<float> out = model.forward(stack(inputs, begin, count), Mode::infer);
        for (std::size_t i = 0; i < count; ++i) {
            const MetricsReport m =
                compute_metrics(truths[begin + i], clip_unit(unstack(out, static_cast<int>(i))));
            mean.psnr += m.psnr;
            mean.ssim += m.ssim;
            mean.mae += m.mae;
            mean.mse += m.mse;
        }
    }
    const double n = static_cast<double>(inputs.size());
    mean.psnr /= n;
    mean.ssim /= n;
    mean.mae /= n;
    mean.mse /= n;
    return mean;
}

FitResult fit(nn::Model<float>& model, std::span<const Image> train, std::span<const Image> val,
              const TrainConfig& cfg, const AugmentConfig& augment,
              const std::function<void(const EpochRecord&)>& on_epoch) {
    if (train.empty())
        throw InvalidInput("fit: empty training set");
    if (cfg.batch_size == 0 || cfg.crops_per_image == 0)
        throw ConfigError("fit: batch_size and crops_per_image must be >= 1");

    Adam<float> adam(AdamSettings{cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_epsilon});
    Rng augment_rng(augment.seed, Stream::augment);
    Rng shuffle_rng(cfg.seed, Stream::shuffle);

    // fixed validation crops, identical every epoch
    std::vector<Image> val_truth, val_inputs;
    {
        Rng val_rng(cfg.seed, Stream::validation);
        const std::span<const Image> source = val.empty() ? train : val;
        for (const Image& img : source) {
            if (cfg.val_crops == 0) {
                val_truth.push_back(center_crop(img, augment.crop));
            } else {
                for (std::size_t c = 0; c < cfg.val_crops; ++c)
                    val_truth.push_back(random_crop(img, augment, val_rng));
            }
        }
        for (const Image& t : val_truth)
            val_inputs.push_back(sparse_input(t, cfg.ratio));
    }

    FitResult result;
    result.best.state = nn::snapshot(model);
    result.best.saving_metric = std::numeric_limits<double>::infinity();

    std::size_t steps = 0;
    const auto budget_left = [&] { return cfg.max_steps == 0 || steps < cfg.max_steps; };
    for (std::size_t epoch = 1; epoch <= cfg.epochs && budget_left(); ++epoch) {
        std::vector<Image> truths;
        truths.reserve(train.size() * cfg.crops_per_image);
        for (const Image& img : train)
            for (std::size_t c = 0; c < cfg.crops_per_image; ++c)
                truths.push_back(augment_sample(img, augment, augment_rng));
        for (std::size_t i = truths.size(); i > 1; --i)
            std::swap(truths[i - 1], truths[shuffle_rng.index(i)]);
        std::vector<Image> inputs;
        inputs.reserve(truths.size());
        for (const Image& t : truths)
            inputs.push_back(sparse_input(t, cfg.ratio));

        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (std::size_t begin = 0; begin < truths.size() && budget_left(); begin += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, truths.size() - begin);
            const Tensor4<float> x = stack(inputs, begin, count);
            const Tensor4<float> y = stack(truths, begin, count);
            model.zero_grad();
            const Tensor4<float> out = model.forward(x, Mode::train);
            const LossValue<float> loss = loss_total(y, out, cfg.lambda1, cfg.lambda2);
            if (!std::isfinite(loss.value)) {
                std::ostringstream msg;
                msg << "training diverged: epoch " << epoch << ", step " << steps + 1
                    << ", loss " << loss.value << ", max |grad| " << largest_gradient(model.parameters());
                throw TrainingDiverged(msg.str());
            }
            model.backward(loss.grad);
            adam.step(model.parameters());
            ++steps;
            loss_sum += loss.value * static_cast<double>(count);
            loss_count += count;
        }

        const MetricsReport m = evaluate_pairs(model, val_truth, val_inputs, cfg.batch_size);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.steps = steps;
        rec.train_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
        rec.val_psnr = m.psnr;
        rec.val_ssim = m.ssim;
        rec.saving_metric = saving_metric(m.ssim, m.psnr);
        result.log.push_back(rec);
        if (on_epoch)
            on_epoch(rec);
        if (rec.saving_metric < result.best.saving_metric) {
            result.best.state = nn::snapshot(model);
            result.best.epoch = epoch;
            result.best.validation = m;
            result.best.saving_metric = rec.saving_metric;
        }
    }
    result.steps = steps;
    nn::restore(model, result.best.state);
    return result;
}

} // namespace pam
