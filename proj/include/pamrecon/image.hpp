#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace pam {

/// Single-channel raster, row-major, nominal intensity range [0, 1].
///
/// A default-constructed Image is empty (0x0); every operation that needs
/// pixels rejects it with InvalidInput.
class Image {
public:
    Image() = default;
    Image(std::size_t height, std::size_t width, float fill = 0.0f);
    Image(std::size_t height, std::size_t width, std::vector<float> data);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float& at(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
    float at(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }

    std::span<float> pixels() { return data_; }
    std::span<const float> pixels() const { return data_; }

    bool operator==(const Image&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<float> data_;
};

struct MetricsReport {
    double psnr = 0.0; // dB, +inf for identical images
    double ssim = 0.0;
    double mae = 0.0;
    double mse = 0.0;
};

/// Region of a padded image that holds the original content.
struct CropRecord {
    std::size_t top = 0;
    std::size_t left = 0;
    std::size_t height = 0;
    std::size_t width = 0;
};

enum class MedianWindow { Vertical3x1, Horizontal1x3 };

/// Percentile with linear interpolation between order statistics (p in [0, 100]).
double percentile(std::span<const float> values, double p);

/// Clips to [P_lo, P_hi] and rescales affinely to [0, 1]; constant images become zeros.
Image normalize_percentile(const Image& img, double lo, double hi);

/// 3-tap median along one axis with replicated edges.
Image median_filter_directional(const Image& img, MedianWindow window);

/// Values strictly below `floor` become 0.
Image threshold_denoise(const Image& img, float floor);

/// Rescales min -> 0 and max -> 1; constant images become zeros.
Image rescale_min_max(const Image& img);

Image clip_unit(const Image& img);

double mean_absolute_error(const Image& truth, const Image& recon);
double mean_squared_error(const Image& truth, const Image& recon);
/// Peak fixed at 1.0. Returns +infinity when the images are identical.
double psnr(const Image& truth, const Image& recon);
/// Mean SSIM over all valid placements of an 11x11 Gaussian window (sigma 1.5,
/// K1 = 0.01, K2 = 0.03, L = 1). Images smaller than 11 pixels in an axis use
/// the largest odd window that fits.
double ssim(const Image& truth, const Image& recon);

MetricsReport compute_metrics(const Image& truth, const Image& recon);

/// Zero-pads at the bottom/right up to the next multiple of `multiple` in each axis.
std::pair<Image, CropRecord> pad_to_multiple(const Image& img, std::size_t multiple);

Image crop(const Image& img, const CropRecord& region);

} // namespace pam
