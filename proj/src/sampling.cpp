#include "pamrecon/sampling.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include "pamrecon/errors.hpp"

namespace pam {

namespace {

void check_ratio(const DownsamplingRatio& r) {
    if (r.sx == 0 || r.sy == 0)
        throw InvalidInput("downsampling strides must be >= 1");
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

double cubic_weight(double t) {
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0)
        return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0)
        return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

struct Taps {
    std::array<std::size_t, 4> index{};
    std::array<double, 4> weight{};
};

// Interpolation taps for every output coordinate along one axis.
std::vector<Taps> axis_taps(std::size_t out_len, std::size_t in_len, std::size_t stride) {
    std::vector<Taps> taps(out_len);
    for (std::size_t o = 0; o < out_len; ++o) {
        Taps& t = taps[o];
        if (in_len < 2) {
            t.index = {0, 0, 0, 0};
            t.weight = {1.0, 0.0, 0.0, 0.0};
            continue;
        }
        const double src = static_cast<double>(o) / static_cast<double>(stride);
        const double base = std::floor(src);
        const double frac = src - base;
        for (int k = 0; k < 4; ++k) {
            const auto i = static_cast<long long>(base) - 1 + k;
            t.index[static_cast<std::size_t>(k)] = static_cast<std::size_t>(
                std::clamp<long long>(i, 0, static_cast<long long>(in_len) - 1));
            t.weight[static_cast<std::size_t>(k)] = cubic_weight(frac - (k - 1));
        }
    }
    return taps;
}

} // namespace

DownsamplingRatio parse_ratio(std::string_view text) {
    const auto sep = text.find_first_of("xX");
    if (sep == std::string_view::npos)
        throw InvalidInput("ratio must look like SXxSY, got '" + std::string(text) + "'");
    auto parse = [&](std::string_view part) {
        std::size_t v = 0;
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (ec != std::errc() || ptr != part.data() + part.size() || part.empty())
            throw InvalidInput("bad ratio component '" + std::string(part) + "'");
        return v;
    };
    DownsamplingRatio r{parse(text.substr(0, sep)), parse(text.substr(sep + 1))};
    if (r.sx == 0 || r.sy == 0)
        throw InvalidInput("ratio strides must be >= 1, got '" + std::string(text) + "'");
    return r;
}

std::string format_ratio(const DownsamplingRatio& ratio) {
    return std::to_string(ratio.sx) + "x" + std::to_string(ratio.sy);
}

double retained_fraction(const DownsamplingRatio& ratio, std::size_t h, std::size_t w) {
    check_ratio(ratio);
    return static_cast<double>(ceil_div(h, ratio.sy) * ceil_div(w, ratio.sx)) /
           static_cast<double>(h * w);
}

SampledImage downsample(const Image& img, const DownsamplingRatio& ratio) {
    check_ratio(ratio);
    if (img.empty())
        throw InvalidInput("downsample: empty image");
    const std::size_t rh = ceil_div(img.height(), ratio.sy);
    const std::size_t rw = ceil_div(img.width(), ratio.sx);
    Image kept(rh, rw);
    for (std::size_t i = 0; i < rh; ++i)
        for (std::size_t j = 0; j < rw; ++j)
            kept.at(i, j) = img.at(i * ratio.sy, j * ratio.sx);
    return SampledImage{img.height(), img.width(), ratio, std::move(kept)};
}

Image zero_fill(const SampledImage& s) {
    check_ratio(s.ratio);
    Image out(s.full_height, s.full_width, 0.0f);
    for (std::size_t i = 0; i < s.retained.height(); ++i)
        for (std::size_t j = 0; j < s.retained.width(); ++j)
            out.at(i * s.ratio.sy, j * s.ratio.sx) = s.retained.at(i, j);
    return out;
}

Image bicubic_upsample(const SampledImage& s) {
    check_ratio(s.ratio);
    const std::size_t rh = s.retained.height();
    const std::size_t rw = s.retained.width();
    if (rh == 0 || rw == 0)
        throw InvalidInput("bicubic_upsample: empty sample grid");
    const auto col_taps = axis_taps(s.full_width, rw, s.ratio.sx);
    const auto row_taps = axis_taps(s.full_height, rh, s.ratio.sy);

    // horizontal pass on retained rows, then vertical pass
    std::vector<double> rows(rh * s.full_width);
    for (std::size_t i = 0; i < rh; ++i)
        for (std::size_t x = 0; x < s.full_width; ++x) {
            const Taps& t = col_taps[x];
            double acc = 0.0;
            for (std::size_t k = 0; k < 4; ++k)
                acc += t.weight[k] * s.retained.at(i, t.index[k]);
            rows[i * s.full_width + x] = acc;
        }
    Image out(s.full_height, s.full_width);
    for (std::size_t y = 0; y < s.full_height; ++y) {
        const Taps& t = row_taps[y];
        for (std::size_t x = 0; x < s.full_width; ++x) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 4; ++k)
                acc += t.weight[k] * rows[t.index[k] * s.full_width + x];
            out.at(y, x) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
        }
    }
    return out;
}

Image sample_mask(const DownsamplingRatio& ratio, std::size_t h, std::size_t w) {
    check_ratio(ratio);
    if (h == 0 || w == 0)
        throw InvalidInput("sample_mask: dimensions must be >= 1");
    Image mask(h, w, 0.0f);
    for (std::size_t y = 0; y < h; y += ratio.sy)
        for (std::size_t x = 0; x < w; x += ratio.sx)
            mask.at(y, x) = 1.0f;
    return mask;
}

} // namespace pam
