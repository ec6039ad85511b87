#include "pamrecon/patchwork.hpp"

#include <algorithm>
#include <string>

#include "pamrecon/errors.hpp"

namespace pam {

PatchPlan plan_patches(std::size_t height, std::size_t width, std::size_t tile, std::size_t buffer) {
    if (tile == 0 || tile % 2 != 0)
        throw InvalidInput("tile size must be a positive even number, got " + std::to_string(tile));
    if (buffer == 0 || buffer > tile / 2)
        throw InvalidInput("buffer depth must be in [1, tile / 2], got " + std::to_string(buffer));
    if (height == 0 || width == 0 || height % tile != 0 || width % tile != 0)
        throw InvalidInput("patch plan needs dims that are multiples of " + std::to_string(tile) +
                           ", got " + std::to_string(height) + "x" + std::to_string(width) +
                           " (pad first)");
    PatchPlan plan;
    plan.height = height;
    plan.width = width;
    plan.tile = tile;
    plan.buffer = buffer;
    const std::size_t rows = height / tile;
    const std::size_t cols = width / tile;
    const std::size_t half = tile / 2;

    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            plan.pass1.push_back({r * tile, c * tile});

    for (std::size_t r = 0; r + 1 < rows; ++r) {
        const std::size_t seam = (r + 1) * tile;
        for (std::size_t c = 0; c < cols; ++c)
            plan.pass2_rows.push_back({{r * tile + half, c * tile}, {seam - buffer, c * tile, 2 * buffer, tile}});
    }
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c + 1 < cols; ++c) {
            const std::size_t seam = (c + 1) * tile;
            plan.pass2_cols.push_back({{r * tile, c * tile + half}, {r * tile, seam - buffer, tile, 2 * buffer}});
        }
    }
    for (std::size_t r = 0; r + 1 < rows; ++r) {
        for (std::size_t c = 0; c + 1 < cols; ++c) {
            const std::size_t sr = (r + 1) * tile;
            const std::size_t sc = (c + 1) * tile;
            plan.pass3.push_back({{r * tile + half, c * tile + half}, {sr - buffer, sc - buffer, 2 * buffer, 2 * buffer}});
        }
    }
    return plan;
}

std::vector<std::uint8_t> overwrite_mask(const PatchPlan& plan) {
    std::vector<std::uint8_t> mask(plan.height * plan.width, 0);
    auto mark = [&](const std::vector<PatchWrite>& writes) {
        for (const PatchWrite& w : writes)
            for (std::size_t y = w.region.top; y < w.region.top + w.region.height; ++y)
                for (std::size_t x = w.region.left; x < w.region.left + w.region.width; ++x)
                    mask[y * plan.width + x] = 1;
    };
    mark(plan.pass2_rows);
    mark(plan.pass2_cols);
    mark(plan.pass3);
    return mask;
}

namespace {

Image run_tile(const TileInference& infer, const Image& padded, const TileOrigin& o, std::size_t tile) {
    Image out = infer(crop(padded, {o.top, o.left, tile, tile}));
    if (out.height() != tile || out.width() != tile)
        throw ConfigError("tile inference returned " + std::to_string(out.height()) + "x" +
                          std::to_string(out.width()) + " for a " + std::to_string(tile) + "x" +
                          std::to_string(tile) + " tile");
    return out;
}

void paste(Image& canvas, const Image& patch, const TileOrigin& o, const CropRecord& region) {
    for (std::size_t y = region.top; y < region.top + region.height; ++y)
        for (std::size_t x = region.left; x < region.left + region.width; ++x)
            canvas.at(y, x) = patch.at(y - o.top, x - o.left);
}

} // namespace

Image patchwork_run(const TileInference& infer, const Image& padded, const PatchPlan& plan) {
    if (padded.height() != plan.height || padded.width() != plan.width)
        throw InvalidInput("image does not match the patch plan dims");
    Image canvas(plan.height, plan.width);
    for (const TileOrigin& o : plan.pass1)
        paste(canvas, run_tile(infer, padded, o, plan.tile), o, {o.top, o.left, plan.tile, plan.tile});
    // later passes read the original sparse image, never the canvas
    for (const auto* pass : {&plan.pass2_rows, &plan.pass2_cols, &plan.pass3})
        for (const PatchWrite& w : *pass)
            paste(canvas, run_tile(infer, padded, w.origin, plan.tile), w.origin, w.region);
    return canvas;
}

Image patchwork_reconstruct(const TileInference& infer, const Image& sparse, std::size_t tile,
                            std::size_t buffer) {
    if (sparse.empty())
        throw InvalidInput("patchwork_reconstruct: empty image");
    auto [padded, record] = pad_to_multiple(sparse, tile);
    const PatchPlan plan = plan_patches(padded.height(), padded.width(), tile, buffer);
    return crop(patchwork_run(infer, padded, plan), record);
}

TileInference model_tile_inference(nn::Model<float>& model) {
    return [&model](const Image& tile) {
        nn::Tensor4<float> x(1, static_cast<int>(tile.height()), static_cast<int>(tile.width()), 1);
        std::copy(tile.pixels().begin(), tile.pixels().end(), x.data());
        nn::Tensor4<float> y;
        try {
            y = model.forward(x, nn::Mode::infer);
        } catch (const ShapeError& e) {
            throw ConfigError(std::string("model cannot take this tile size: ") + e.what());
        }
        Image out(tile.height(), tile.width());
        std::copy(y.data(), y.data() + out.size(), out.pixels().begin());
        return out;
    };
}

} // namespace pam
