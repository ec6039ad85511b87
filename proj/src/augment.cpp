#include "pamrecon/augment.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pamrecon/errors.hpp"

namespace pam {

namespace {

void require_at_least(const Image& img, std::size_t size, const char* what) {
    if (img.empty() || img.height() < size || img.width() < size)
        throw InvalidInput(std::string(what) + ": image " + std::to_string(img.height()) + "x" +
                           std::to_string(img.width()) + " smaller than crop " +
                           std::to_string(size));
}

Image sub_image(const Image& img, std::size_t top, std::size_t left, std::size_t size) {
    Image out(size, size);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x)
            out.at(y, x) = img.at(top + y, left + x);
    return out;
}

} // namespace

Image random_crop(const Image& img, const AugmentConfig& cfg, Rng& rng) {
    require_at_least(img, cfg.crop, "random_crop");
    const std::size_t top = rng.index(img.height() - cfg.crop + 1);
    const std::size_t left = rng.index(img.width() - cfg.crop + 1);
    return sub_image(img, top, left, cfg.crop);
}

Image center_crop(const Image& img, std::size_t size) {
    require_at_least(img, size, "center_crop");
    return sub_image(img, (img.height() - size) / 2, (img.width() - size) / 2, size);
}

AffineParams draw_affine(const Image& img, const AugmentConfig& cfg, Rng& rng) {
    AffineParams p;
    p.rotation_deg = rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg);
    p.shift_x = rng.uniform(-cfg.max_shift_frac, cfg.max_shift_frac) * static_cast<double>(img.width());
    p.shift_y = rng.uniform(-cfg.max_shift_frac, cfg.max_shift_frac) * static_cast<double>(img.height());
    p.shear = rng.uniform(-cfg.max_shear, cfg.max_shear);
    return p;
}

Image apply_affine(const Image& img, const AffineParams& params, float fill) {
    if (img.empty())
        throw InvalidInput("apply_affine: empty image");
    const double theta = params.rotation_deg * std::numbers::pi / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    // forward A = R * Sh, Sh = [[1, k], [0, 1]]; invert explicitly (det A = 1)
    const double k = params.shear;
    const double a00 = c, a01 = c * k - s;
    const double a10 = s, a11 = s * k + c;
    const double i00 = a11, i01 = -a01;
    const double i10 = -a10, i11 = a00;

    const double cy = (static_cast<double>(img.height()) - 1.0) / 2.0;
    const double cx = (static_cast<double>(img.width()) - 1.0) / 2.0;
    const auto h = static_cast<long long>(img.height());
    const auto w = static_cast<long long>(img.width());
    auto tap = [&](long long y, long long x) -> double {
        if (y < 0 || y >= h || x < 0 || x >= w)
            return fill;
        return img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
    };

    Image out(img.height(), img.width());
    for (long long y = 0; y < h; ++y)
        for (long long x = 0; x < w; ++x) {
            const double dx = static_cast<double>(x) - cx - params.shift_x;
            const double dy = static_cast<double>(y) - cy - params.shift_y;
            const double sx = cx + i00 * dx + i01 * dy;
            const double sy = cy + i10 * dx + i11 * dy;
            const double fx = std::floor(sx);
            const double fy = std::floor(sy);
            const double tx = sx - fx;
            const double ty = sy - fy;
            const auto x0 = static_cast<long long>(fx);
            const auto y0 = static_cast<long long>(fy);
            double v = 0.0;
            // skip zero-weight taps so exact source coordinates copy pixels exactly
            if (tx == 0.0 && ty == 0.0) {
                v = tap(y0, x0);
            } else {
                v = (1.0 - ty) * ((1.0 - tx) * tap(y0, x0) + tx * tap(y0, x0 + 1)) +
                    ty * ((1.0 - tx) * tap(y0 + 1, x0) + tx * tap(y0 + 1, x0 + 1));
            }
            out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = static_cast<float>(v);
        }
    return out;
}

Image affine_augment(const Image& img, const AugmentConfig& cfg, Rng& rng) {
    return apply_affine(img, draw_affine(img, cfg, rng), cfg.fill);
}

Image add_gaussian_noise(const Image& img, double sigma, Rng& rng) {
    if (img.empty())
        throw InvalidInput("add_gaussian_noise: empty image");
    Image noisy = img;
    for (auto& v : noisy.pixels())
        v = static_cast<float>(v + sigma * rng.normal());
    return rescale_min_max(noisy);
}

Image noise_augment(const Image& img, const AugmentConfig& cfg, Rng& rng) {
    if (rng.uniform() >= cfg.noise_prob)
        return img;
    return add_gaussian_noise(img, cfg.noise_sigma, rng);
}

Image augment_sample(const Image& img, const AugmentConfig& cfg, Rng& rng) {
    Image patch = random_crop(img, cfg, rng);
    patch = affine_augment(patch, cfg, rng);
    return noise_augment(patch, cfg, rng);
}

} // namespace pam
