#pragma once

#include <filesystem>

#include "pamrecon/image.hpp"

namespace pam {

/// Raw float image: "PAMIMG1", u32 LE height, u32 LE width, then row-major f32 LE.
inline constexpr char kRawImageMagic[] = "PAMIMG1";
inline constexpr const char* kRawImageExtension = ".pamimg";

struct LoadedImage {
    Image image;
    int bit_depth = 32; // 8 or 16 for PNG sources, 32 for raw float
};

/// 8/16-bit grayscale PNG (scaled by 1/255 or 1/65535) or raw PAMIMG1, chosen by content.
LoadedImage read_image(const std::filesystem::path& path);

Image read_png(const std::filesystem::path& path, int* bit_depth = nullptr);
/// Values are clipped to [0, 1] and quantized to the given depth (8 or 16).
void write_png(const std::filesystem::path& path, const Image& img, int bit_depth = 16);

Image read_raw(const std::filesystem::path& path);
void write_raw(const std::filesystem::path& path, const Image& img);

/// Dispatches on extension: ".png" -> PNG at `png_bit_depth`, anything else -> PAMIMG1.
void write_image(const std::filesystem::path& path, const Image& img, int png_bit_depth = 16);

} // namespace pam
