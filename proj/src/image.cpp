#include "pamrecon/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pamrecon/errors.hpp"

namespace pam {

Image::Image(std::size_t height, std::size_t width, float fill)
    : height_(height), width_(width), data_(height * width, fill) {}

Image::Image(std::size_t height, std::size_t width, std::vector<float> data)
    : height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != height_ * width_)
        throw InvalidInput("image data length " + std::to_string(data_.size()) +
                           " does not match " + std::to_string(height_) + "x" +
                           std::to_string(width_));
}

namespace {

void require_nonempty(const Image& img, const char* what) {
    if (img.empty())
        throw InvalidInput(std::string(what) + ": empty image");
}

void require_same_dims(const Image& a, const Image& b, const char* what) {
    require_nonempty(a, what);
    if (a.height() != b.height() || a.width() != b.width())
        throw InvalidInput(std::string(what) + ": dimension mismatch " +
                           std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                           " vs " + std::to_string(b.height()) + "x" +
                           std::to_string(b.width()));
}

float median3(float a, float b, float c) {
    return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

// Separable Gaussian taps, normalized to unit sum.
std::vector<double> gaussian_taps(int size, double sigma) {
    std::vector<double> taps(static_cast<std::size_t>(size));
    const int radius = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - radius;
        taps[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += taps[static_cast<std::size_t>(i)];
    }
    for (auto& t : taps)
        t /= sum;
    return taps;
}

// 'valid' separable filtering of a row-major double grid.
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::vector<double>& taps) {
    const std::size_t k = taps.size();
    const std::size_t ow = w - k + 1;
    const std::size_t oh = h - k + 1;
    std::vector<double> rows(h * ow, 0.0);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t)
                acc += taps[t] * src[y * w + x + t];
            rows[y * ow + x] = acc;
        }
    std::vector<double> out(oh * ow, 0.0);
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t)
                acc += taps[t] * rows[(y + t) * ow + x];
            out[y * ow + x] = acc;
        }
    return out;
}

} // namespace

double percentile(std::span<const float> values, double p) {
    if (values.empty())
        throw InvalidInput("percentile: no values");
    if (!(p >= 0.0 && p <= 100.0))
        throw InvalidInput("percentile: p outside [0, 100]");
    std::vector<float> v(values.begin(), values.end());
    const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto lower = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lower);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lower), v.end());
    const double a = v[lower];
    if (frac == 0.0 || lower + 1 >= v.size())
        return a;
    // the next order statistic is the minimum of the upper partition
    const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lower) + 1, v.end());
    return a + frac * (b - a);
}

Image normalize_percentile(const Image& img, double lo, double hi) {
    require_nonempty(img, "normalize_percentile");
    if (!(lo >= 0.0 && lo < hi && hi <= 100.0))
        throw InvalidInput("normalize_percentile: need 0 <= lo < hi <= 100");
    const double p_lo = percentile(img.pixels(), lo);
    const double p_hi = percentile(img.pixels(), hi);
    Image out(img.height(), img.width(), 0.0f);
    if (!(p_hi > p_lo))
        return out;
    const double span = p_hi - p_lo;
    auto src = img.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double v = std::clamp(static_cast<double>(src[i]), p_lo, p_hi);
        dst[i] = static_cast<float>((v - p_lo) / span);
    }
    return out;
}

Image median_filter_directional(const Image& img, MedianWindow window) {
    require_nonempty(img, "median_filter_directional");
    const std::size_t h = img.height();
    const std::size_t w = img.width();
    Image out(h, w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            float a, b, c;
            if (window == MedianWindow::Vertical3x1) {
                a = img.at(y == 0 ? 0 : y - 1, x);
                b = img.at(y, x);
                c = img.at(y + 1 == h ? y : y + 1, x);
            } else {
                a = img.at(y, x == 0 ? 0 : x - 1);
                b = img.at(y, x);
                c = img.at(y, x + 1 == w ? x : x + 1);
            }
            out.at(y, x) = median3(a, b, c);
        }
    return out;
}

Image threshold_denoise(const Image& img, float floor) {
    require_nonempty(img, "threshold_denoise");
    if (!(floor >= 0.0f && floor <= 1.0f))
        throw InvalidInput("threshold_denoise: floor outside [0, 1]");
    Image out = img;
    for (auto& v : out.pixels())
        if (v < floor)
            v = 0.0f;
    return out;
}

Image rescale_min_max(const Image& img) {
    require_nonempty(img, "rescale_min_max");
    const auto [lo_it, hi_it] = std::minmax_element(img.pixels().begin(), img.pixels().end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    Image out(img.height(), img.width(), 0.0f);
    if (!(hi > lo))
        return out;
    auto src = img.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = static_cast<float>((src[i] - lo) / (hi - lo));
    return out;
}

Image clip_unit(const Image& img) {
    Image out = img;
    for (auto& v : out.pixels())
        v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

double mean_absolute_error(const Image& truth, const Image& recon) {
    require_same_dims(truth, recon, "mean_absolute_error");
    auto a = truth.pixels();
    auto b = recon.pixels();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    return acc / static_cast<double>(a.size());
}

double mean_squared_error(const Image& truth, const Image& recon) {
    require_same_dims(truth, recon, "mean_squared_error");
    auto a = truth.pixels();
    auto b = recon.pixels();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double psnr(const Image& truth, const Image& recon) {
    const double mse = mean_squared_error(truth, recon);
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& truth, const Image& recon) {
    require_same_dims(truth, recon, "ssim");
    constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
    constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);

    const std::size_t h = truth.height();
    const std::size_t w = truth.width();
    int size = static_cast<int>(std::min<std::size_t>({11, h, w}));
    if (size % 2 == 0)
        --size;
    const auto taps = gaussian_taps(size, 1.5);

    const std::size_t n = h * w;
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = truth.pixels()[i];
        y[i] = recon.pixels()[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mu_x = filter_valid(x, h, w, taps);
    const auto mu_y = filter_valid(y, h, w, taps);
    const auto e_xx = filter_valid(xx, h, w, taps);
    const auto e_yy = filter_valid(yy, h, w, taps);
    const auto e_xy = filter_valid(xy, h, w, taps);

    double acc = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double mx = mu_x[i];
        const double my = mu_y[i];
        const double sxx = e_xx[i] - mx * mx;
        const double syy = e_yy[i] - my * my;
        const double sxy = e_xy[i] - mx * my;
        acc += ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) /
               ((mx * mx + my * my + c1) * (sxx + syy + c2));
    }
    return acc / static_cast<double>(mu_x.size());
}

MetricsReport compute_metrics(const Image& truth, const Image& recon) {
    MetricsReport r;
    r.mae = mean_absolute_error(truth, recon);
    r.mse = mean_squared_error(truth, recon);
    r.psnr = r.mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / r.mse);
    r.ssim = ssim(truth, recon);
    return r;
}

std::pair<Image, CropRecord> pad_to_multiple(const Image& img, std::size_t multiple) {
    require_nonempty(img, "pad_to_multiple");
    if (multiple == 0)
        throw InvalidInput("pad_to_multiple: multiple must be >= 1");
    const std::size_t h = (img.height() + multiple - 1) / multiple * multiple;
    const std::size_t w = (img.width() + multiple - 1) / multiple * multiple;
    Image out(h, w, 0.0f);
    for (std::size_t y = 0; y < img.height(); ++y)
        std::copy_n(img.pixels().begin() + static_cast<std::ptrdiff_t>(y * img.width()),
                    img.width(),
                    out.pixels().begin() + static_cast<std::ptrdiff_t>(y * w));
    return {std::move(out), CropRecord{0, 0, img.height(), img.width()}};
}

Image crop(const Image& img, const CropRecord& region) {
    if (region.height == 0 || region.width == 0 || region.top + region.height > img.height() ||
        region.left + region.width > img.width())
        throw InvalidInput("crop: region outside image");
    Image out(region.height, region.width);
    for (std::size_t y = 0; y < region.height; ++y)
        for (std::size_t x = 0; x < region.width; ++x)
            out.at(y, x) = img.at(region.top + y, region.left + x);
    return out;
}

} // namespace pam
