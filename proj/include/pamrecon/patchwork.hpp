#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "pamrecon/image.hpp"
#include "pamrecon/nn/model.hpp"

namespace pam {

/// Maps one tile x tile sparse patch to its reconstruction.
using TileInference = std::function<Image(const Image&)>;

struct TileOrigin {
    std::size_t top = 0;
    std::size_t left = 0;
    bool operator==(const TileOrigin&) const = default;
};

/// A re-inferred tile and the canvas region (absolute coordinates) it overwrites.
struct PatchWrite {
    TileOrigin origin;
    CropRecord region;
};

struct PatchPlan {
    std::size_t height = 0; // padded dims
    std::size_t width = 0;
    std::size_t tile = 128;
    std::size_t buffer = 20;
    std::vector<TileOrigin> pass1;
    std::vector<PatchWrite> pass2_rows; // tiles centered on horizontal seams
    std::vector<PatchWrite> pass2_cols; // tiles centered on vertical seams
    std::vector<PatchWrite> pass3;      // tiles centered on seam intersections
};

/// Dims must be positive multiples of `tile`; `tile` must be even and
/// 0 < buffer <= tile / 2.
PatchPlan plan_patches(std::size_t height, std::size_t width, std::size_t tile = 128,
                       std::size_t buffer = 20);

/// Row-major mask (height x width) of every pixel some pass-2/pass-3 write touches.
std::vector<std::uint8_t> overwrite_mask(const PatchPlan& plan);

/// Runs the three passes over an already padded sparse image.
Image patchwork_run(const TileInference& infer, const Image& padded, const PatchPlan& plan);

/// Pads `sparse` to a multiple of `tile`, runs the three passes and crops the
/// result back to the input size.
Image patchwork_reconstruct(const TileInference& infer, const Image& sparse, std::size_t tile = 128,
                            std::size_t buffer = 20);

/// Inference-mode forward pass of a single-channel model on one tile.
TileInference model_tile_inference(nn::Model<float>& model);

} // namespace pam
