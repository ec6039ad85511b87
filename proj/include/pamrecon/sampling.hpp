#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "pamrecon/image.hpp"

namespace pam {

/// Raster decimation strides. x runs along columns, y along rows.
struct DownsamplingRatio {
    std::size_t sx = 1;
    std::size_t sy = 1;

    bool operator==(const DownsamplingRatio&) const = default;
};

/// Parses "SxxSy", e.g. "7x3" -> {7, 3}. Rejects zero or malformed strides.
DownsamplingRatio parse_ratio(std::string_view text);
std::string format_ratio(const DownsamplingRatio& ratio);

/// Fraction of pixels kept on an h x w raster.
double retained_fraction(const DownsamplingRatio& ratio, std::size_t h, std::size_t w);

/// Samples kept at rows i*sy and columns j*sx of the full raster.
struct SampledImage {
    std::size_t full_height = 0;
    std::size_t full_width = 0;
    DownsamplingRatio ratio;
    Image retained;
};

SampledImage downsample(const Image& img, const DownsamplingRatio& ratio);

/// Full-size image with retained samples in place and exact zeros elsewhere.
Image zero_fill(const SampledImage& s);

/// Separable Catmull-Rom (a = -0.5) interpolation back to full size, clipped
/// to [0, 1]. Retained sample j sits at full-raster coordinate j*stride; axes
/// with fewer than two samples are replicated instead of interpolated.
Image bicubic_upsample(const SampledImage& s);

/// 1 at retained positions, 0 elsewhere.
Image sample_mask(const DownsamplingRatio& ratio, std::size_t h, std::size_t w);

} // namespace pam
