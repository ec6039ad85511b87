#include "pamrecon/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "pamrecon/errors.hpp"

namespace pam {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f)
        throw FormatError("cannot open " + path.string());
    return f;
}

void put_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                static_cast<char>((v >> 16) & 0xff),
                                static_cast<char>((v >> 24) & 0xff)};
    out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4))
        throw FormatError("truncated raw image header");
    return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
           (std::uint32_t{b[3]} << 24);
}

void png_error_fn(png_structp, png_const_charp msg) { throw FormatError(std::string("png: ") + msg); }
void png_warning_fn(png_structp, png_const_charp) {}

} // namespace

Image read_png(const std::filesystem::path& path, int* bit_depth_out) {
    auto file = open_file(path, "rb");
    std::array<unsigned char, 8> sig{};
    if (std::fread(sig.data(), 1, sig.size(), file.get()) != sig.size() ||
        png_sig_cmp(sig.data(), 0, sig.size()) != 0)
        throw FormatError(path.string() + ": not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                             png_warning_fn);
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};

    png_init_io(png, file.get());
    png_set_sig_bytes(png, static_cast<int>(sig.size()));
    png_read_info(png, info);

    const auto width = png_get_image_width(png, info);
    const auto height = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (color == PNG_COLOR_TYPE_PALETTE)
        throw FormatError(path.string() + ": palette PNGs are not supported");
    if ((color & PNG_COLOR_MASK_COLOR) != 0)
        throw FormatError(path.string() + ": only single-channel PNGs are supported");
    if (depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
        depth = 8;
    }
    if ((color & PNG_COLOR_MASK_ALPHA) != 0)
        png_set_strip_alpha(png);
    if (depth == 16 && std::endian::native == std::endian::little)
        png_set_swap(png);
    png_read_update_info(png, info);

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<unsigned char> buffer(rowbytes * height);
    std::vector<png_bytep> rows(height);
    for (std::size_t y = 0; y < height; ++y)
        rows[y] = buffer.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);

    Image img(height, width);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            if (depth == 16) {
                std::uint16_t v;
                std::memcpy(&v, rows[y] + 2 * x, 2);
                img.at(y, x) = static_cast<float>(v / 65535.0);
            } else {
                img.at(y, x) = static_cast<float>(rows[y][x] / 255.0);
            }
        }
    if (bit_depth_out)
        *bit_depth_out = depth;
    return img;
}

void write_png(const std::filesystem::path& path, const Image& img, int bit_depth) {
    if (img.empty())
        throw InvalidInput("write_png: empty image");
    if (bit_depth != 8 && bit_depth != 16)
        throw InvalidInput("write_png: bit depth must be 8 or 16");
    auto file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                              png_warning_fn);
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};

    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
                 static_cast<png_uint_32>(img.height()), bit_depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const double scale = bit_depth == 16 ? 65535.0 : 255.0;
    const std::size_t bytes = static_cast<std::size_t>(bit_depth / 8);
    std::vector<unsigned char> row(img.width() * bytes);
    for (std::size_t y = 0; y < img.height(); ++y) {
        for (std::size_t x = 0; x < img.width(); ++x) {
            const double v = std::clamp(static_cast<double>(img.at(y, x)), 0.0, 1.0);
            const auto q = static_cast<std::uint32_t>(std::lround(v * scale));
            if (bytes == 2) {
                row[2 * x] = static_cast<unsigned char>(q >> 8); // PNG is big-endian
                row[2 * x + 1] = static_cast<unsigned char>(q & 0xff);
            } else {
                row[x] = static_cast<unsigned char>(q);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
}

Image read_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open " + path.string());
    char magic[7];
    if (!in.read(magic, 7) || std::memcmp(magic, kRawImageMagic, 7) != 0)
        throw FormatError(path.string() + ": bad PAMIMG1 magic");
    const std::uint32_t h = get_u32(in);
    const std::uint32_t w = get_u32(in);
    if (h == 0 || w == 0)
        throw FormatError(path.string() + ": zero image dimension");
    std::vector<float> data(std::size_t{h} * w);
    for (auto& v : data)
        v = std::bit_cast<float>(get_u32(in));
    return Image(h, w, std::move(data));
}

void write_raw(const std::filesystem::path& path, const Image& img) {
    if (img.empty())
        throw InvalidInput("write_raw: empty image");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot write " + path.string());
    out.write(kRawImageMagic, 7);
    put_u32(out, static_cast<std::uint32_t>(img.height()));
    put_u32(out, static_cast<std::uint32_t>(img.width()));
    for (float v : img.pixels())
        put_u32(out, std::bit_cast<std::uint32_t>(v));
    if (!out)
        throw FormatError("write failed: " + path.string());
}

LoadedImage read_image(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe)
        throw FormatError("cannot open " + path.string());
    char head[8] = {};
    probe.read(head, 8);
    if (probe.gcount() >= 7 && std::memcmp(head, kRawImageMagic, 7) == 0)
        return {read_raw(path), 32};
    int depth = 8;
    Image img = read_png(path, &depth);
    return {std::move(img), depth};
}

void write_image(const std::filesystem::path& path, const Image& img, int png_bit_depth) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png")
        write_png(path, img, png_bit_depth);
    else
        write_raw(path, img);
}

} // namespace pam
