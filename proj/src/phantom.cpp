#include "pamrecon/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "pamrecon/errors.hpp"
#include "pamrecon/rng.hpp"

namespace pam {
namespace {

struct Walker {
    double y, x, heading, radius, amplitude;
    int generation;
};

void stamp(Image& img, double cy, double cx, double sigma, double amplitude, double background) {
    const double reach = 3.0 * sigma;
    const auto h = static_cast<long>(img.height());
    const auto w = static_cast<long>(img.width());
    const long y0 = std::max(0L, static_cast<long>(std::floor(cy - reach)));
    const long y1 = std::min(h - 1, static_cast<long>(std::ceil(cy + reach)));
    const long x0 = std::max(0L, static_cast<long>(std::floor(cx - reach)));
    const long x1 = std::min(w - 1, static_cast<long>(std::ceil(cx + reach)));
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (long y = y0; y <= y1; ++y) {
        for (long x = x0; x <= x1; ++x) {
            const double dy = static_cast<double>(y) - cy;
            const double dx = static_cast<double>(x) - cx;
            const double v = background + amplitude * std::exp(-(dy * dy + dx * dx) * inv);
            float& px = img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
            px = std::max(px, static_cast<float>(std::min(v, 1.0)));
        }
    }
}

} // namespace

Image generate_phantom(const PhantomConfig& cfg) {
    if (cfg.height < 128 || cfg.width < 128)
        throw InvalidInput("phantom dims must be at least 128x128");
    if (cfg.vessels_min > cfg.vessels_max || cfg.radius_min <= 0.0 || cfg.radius_min > cfg.radius_max ||
        cfg.intensity_min > cfg.intensity_max || cfg.background < 0.0 || cfg.background >= 1.0 ||
        cfg.intensity_min <= cfg.background || cfg.intensity_max > 1.0 || cfg.tortuosity < 0.0 ||
        cfg.branch_probability < 0.0 || cfg.branch_probability > 1.0)
        throw InvalidInput("inconsistent phantom configuration");

    Rng rng(cfg.seed, Stream::phantom);
    Image img(cfg.height, cfg.width, static_cast<float>(cfg.background));
    const double h = static_cast<double>(cfg.height);
    const double w = static_cast<double>(cfg.width);
    const std::size_t count = cfg.vessels_min + rng.index(cfg.vessels_max - cfg.vessels_min + 1);
    const std::size_t max_steps = cfg.height + cfg.width;
    constexpr std::size_t max_branches = 4; // per trunk

    std::vector<Walker> pending;
    for (std::size_t v = 0; v < count; ++v) {
        // trunks start on a random edge heading inwards
        const std::size_t edge = rng.index(4);
        const double along = rng.uniform();
        Walker t{};
        switch (edge) {
        case 0: t = {0.0, along * w, std::numbers::pi / 2, 0, 0, 0}; break;
        case 1: t = {h - 1, along * w, -std::numbers::pi / 2, 0, 0, 0}; break;
        case 2: t = {along * h, 0.0, 0.0, 0, 0, 0}; break;
        default: t = {along * h, w - 1, std::numbers::pi, 0, 0, 0}; break;
        }
        t.heading += rng.uniform(-0.6, 0.6);
        t.radius = rng.uniform(cfg.radius_min, cfg.radius_max);
        t.amplitude = rng.uniform(cfg.intensity_min, cfg.intensity_max) - cfg.background;
        pending.push_back(t);
        std::size_t branches = 0;

        while (!pending.empty()) {
            Walker k = pending.back();
            pending.pop_back();
            double turn = 0.0;
            for (std::size_t s = 0; s < max_steps; ++s) {
                if (k.y < -3 * k.radius || k.y > h + 3 * k.radius || k.x < -3 * k.radius ||
                    k.x > w + 3 * k.radius)
                    break;
                stamp(img, k.y, k.x, k.radius, k.amplitude, cfg.background);
                // smoothed heading change keeps centerlines curved rather than jagged
                turn = 0.9 * turn + cfg.tortuosity * rng.normal();
                k.heading += turn;
                k.y += std::sin(k.heading);
                k.x += std::cos(k.heading);
                if (branches < max_branches && k.generation < 2 && rng.uniform() < cfg.branch_probability) {
                    ++branches;
                    Walker b = k;
                    b.generation = k.generation + 1;
                    b.heading += (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.1);
                    b.radius = std::max(cfg.radius_min, 0.7 * k.radius);
                    b.amplitude = 0.85 * k.amplitude;
                    pending.push_back(b);
                }
            }
        }
    }
    return img;
}

} // namespace pam
