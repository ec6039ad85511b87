#pragma once

#include <cstddef>
#include <cstdint>

#include "pamrecon/image.hpp"

namespace pam {

/// Synthetic maximum-projection-like vascular image: bright tubular vessels on
/// a dark background.
struct PhantomConfig {
    std::size_t height = 256;
    std::size_t width = 256;
    std::size_t vessels_min = 5;
    std::size_t vessels_max = 7;
    double radius_min = 0.8; // Gaussian cross-section sigma, pixels
    double radius_max = 2.0;
    double tortuosity = 0.012; // std of heading change per unit step, radians
    double branch_probability = 0.005; // per step, at most 4 branches per trunk
    double intensity_min = 0.45;
    double intensity_max = 1.0;
    double background = 0.05;
    std::uint64_t seed = 1;
};

/// Deterministic per seed; values in [0, 1]. Throws InvalidInput for dims
/// below 128 or inconsistent ranges.
Image generate_phantom(const PhantomConfig& cfg);

} // namespace pam
