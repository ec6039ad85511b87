#pragma once

#include <cstddef>
#include <cstdint>

#include "pamrecon/image.hpp"
#include "pamrecon/rng.hpp"

namespace pam {

struct AugmentConfig {
    std::size_t crop = 128;
    double max_rotation_deg = 20.0;
    double max_shift_frac = 0.20;
    double max_shear = 0.2;
    double noise_prob = 0.10;
    double noise_sigma = 0.1;
    float fill = 0.0f;
    std::uint64_t seed = 7;
    std::size_t crops_per_image = 10;
};

/// One draw of the affine jitter. Rotation and shear act about the image
/// center; shifts are in pixels.
struct AffineParams {
    double rotation_deg = 0.0;
    double shift_x = 0.0;
    double shift_y = 0.0;
    double shear = 0.0;
};

/// Crop of cfg.crop x cfg.crop at a uniformly drawn top-left corner.
Image random_crop(const Image& img, const AugmentConfig& cfg, Rng& rng);

/// Central crop; odd margins round toward the top-left.
Image center_crop(const Image& img, std::size_t size);

AffineParams draw_affine(const Image& img, const AugmentConfig& cfg, Rng& rng);

/// Bilinear resampling under the forward map
/// p' = c + R(theta) * [[1, shear], [0, 1]] * (p - c) + shift, taps outside
/// the source read `fill`.
Image apply_affine(const Image& img, const AffineParams& params, float fill = 0.0f);

Image affine_augment(const Image& img, const AugmentConfig& cfg, Rng& rng);

/// Adds N(0, sigma^2) per pixel and rescales to [0, 1].
Image add_gaussian_noise(const Image& img, double sigma, Rng& rng);

/// Applies noise with probability cfg.noise_prob; returns the input otherwise.
Image noise_augment(const Image& img, const AugmentConfig& cfg, Rng& rng);

/// Full training-time chain: crop -> affine -> optional noise.
Image augment_sample(const Image& img, const AugmentConfig& cfg, Rng& rng);

} // namespace pam
