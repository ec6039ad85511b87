#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pamrecon/errors.hpp"
#include "pamrecon/patchwork.hpp"

using namespace pam;

namespace {

Image identity(const Image& tile) { return tile; }

// Identity except that the tile's outer ring is forced to 1.
Image seam_writer(const Image& tile) {
    Image out = tile;
    const std::size_t n = tile.height();
    for (std::size_t i = 0; i < n; ++i) {
        out.at(0, i) = out.at(n - 1, i) = 1.0f;
        out.at(i, 0) = out.at(i, n - 1) = 1.0f;
    }
    return out;
}

Image random_unit_image(std::size_t h, std::size_t w, Rng& rng, double hi = 1.0) {
    Image img(h, w);
    for (float& v : img.pixels())
        v = static_cast<float>(rng.uniform(0.0, hi));
    return img;
}

bool near_interior_seam(std::size_t p, std::size_t extent, std::size_t tile, std::size_t buffer) {
    for (std::size_t s = tile; s < extent; s += tile)
        if (p + buffer >= s && p < s + buffer)
            return true;
    return false;
}

} // namespace

TEST(PatchPlan, GridCounts) {
    const PatchPlan a = plan_patches(384, 256);
    EXPECT_EQ(a.pass1.size(), 6u);
    const PatchPlan b = plan_patches(128, 128);
    EXPECT_EQ(b.pass1.size(), 1u);
    EXPECT_TRUE(b.pass2_rows.empty() && b.pass2_cols.empty() && b.pass3.empty());
    const PatchPlan c = plan_patches(256, 256);
    EXPECT_EQ(c.pass2_rows.size(), 2u);
    EXPECT_EQ(c.pass2_cols.size(), 2u);
    ASSERT_EQ(c.pass3.size(), 1u);
    EXPECT_EQ(c.pass3[0].origin, (TileOrigin{64, 64}));
    EXPECT_EQ(c.pass3[0].region.top, 108u);
    EXPECT_EQ(c.pass3[0].region.height, 40u);
}

TEST(PatchPlan, RejectsUnpaddedDims) {
    EXPECT_THROW(plan_patches(130, 128), InvalidInput);
    EXPECT_THROW(plan_patches(0, 128), InvalidInput);
    EXPECT_THROW(plan_patches(128, 128, 128, 65), InvalidInput);
}

TEST(PatchPlan, FirstPassPartitionsImage) {
    const PatchPlan p = plan_patches(384, 640);
    std::vector<int> hits(384 * 640, 0);
    for (const TileOrigin& o : p.pass1)
        for (std::size_t y = o.top; y < o.top + 128; ++y)
            for (std::size_t x = o.left; x < o.left + 128; ++x)
                ++hits[y * 640 + x];
    for (int h : hits)
        ASSERT_EQ(h, 1);
}

TEST(PatchPlan, LaterTilesStayInsideAndCenterOnSeams) {
    const PatchPlan p = plan_patches(512, 384);
    for (const auto* pass : {&p.pass2_rows, &p.pass2_cols, &p.pass3})
        for (const PatchWrite& w : *pass) {
            EXPECT_LE(w.origin.top + 128, 512u);
            EXPECT_LE(w.origin.left + 128, 384u);
            // the written region lies within the tile, around its center
            EXPECT_GE(w.region.top, w.origin.top);
            EXPECT_LE(w.region.top + w.region.height, w.origin.top + 128);
            EXPECT_GE(w.region.left, w.origin.left);
            EXPECT_LE(w.region.left + w.region.width, w.origin.left + 128);
        }
    for (const PatchWrite& w : p.pass2_rows)
        EXPECT_EQ((w.origin.top + 64) % 128, 0u);
    for (const PatchWrite& w : p.pass2_cols)
        EXPECT_EQ((w.origin.left + 64) % 128, 0u);
}

TEST(PatchPlan, OverwriteUnionIsSeamZone) {
    for (auto [h, w] : {std::pair{128u, 128u}, {256u, 384u}, {640u, 256u}}) {
        const PatchPlan p = plan_patches(h, w);
        const auto mask = overwrite_mask(p);
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const bool zone = near_interior_seam(y, h, 128, 20) || near_interior_seam(x, w, 128, 20);
                ASSERT_EQ(mask[y * w + x] != 0, zone) << y << "," << x;
            }
    }
}

TEST(Patchwork, IdentityModelIsBitExactForAnySize) {
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        const std::size_t h = 1 + rng.index(700);
        const std::size_t w = 1 + rng.index(700);
        const Image img = random_unit_image(h, w, rng);
        const Image out = patchwork_reconstruct(identity, img);
        ASSERT_EQ(out.height(), h);
        ASSERT_EQ(out.width(), w);
        ASSERT_TRUE(out == img) << h << "x" << w;
    }
}

TEST(Patchwork, ConstantModelGivesConstantOutput) {
    Rng rng(2);
    const Image img = random_unit_image(300, 200, rng);
    const Image out = patchwork_reconstruct([](const Image& t) { return Image(t.height(), t.width(), 0.5f); }, img);
    for (float v : out.pixels())
        ASSERT_EQ(v, 0.5f);
}

TEST(Patchwork, SeamWritingModelIsCleanedUp) {
    Rng rng(3);
    const Image padded = random_unit_image(384, 512, rng, 0.9);
    const PatchPlan plan = plan_patches(384, 512);
    PatchPlan first_only = plan;
    first_only.pass2_rows.clear();
    first_only.pass2_cols.clear();
    first_only.pass3.clear();
    const Image pass1 = patchwork_run(seam_writer, padded, first_only);
    const Image full = patchwork_run(seam_writer, padded, plan);

    auto is_seam = [](std::size_t p, std::size_t extent) {
        return p > 0 && p + 1 < extent && (p % 128 == 0 || p % 128 == 127);
    };
    std::size_t seam_pixels = 0, dirty_before = 0, dirty_after = 0;
    for (std::size_t y = 1; y + 1 < 384; ++y)
        for (std::size_t x = 1; x + 1 < 512; ++x) {
            if (!is_seam(y, 384) && !is_seam(x, 512))
                continue;
            ++seam_pixels;
            dirty_before += pass1.at(y, x) == 1.0f;
            dirty_after += full.at(y, x) == 1.0f;
        }
    EXPECT_GT(seam_pixels, 0u);
    EXPECT_EQ(dirty_before, seam_pixels);
    EXPECT_EQ(dirty_after, 0u);
}

TEST(Patchwork, PixelsAwayFromSeamsKeepFirstPassValues) {
    Rng rng(4);
    const Image padded = random_unit_image(256, 384, rng);
    auto model = [](const Image& t) {
        Image out = t;
        for (std::size_t y = 0; y < t.height(); ++y)
            for (std::size_t x = 0; x < t.width(); ++x)
                out.at(y, x) = 0.5f * t.at(y, x) + 0.001f * static_cast<float>(y + x);
        return out;
    };
    const PatchPlan plan = plan_patches(256, 384);
    PatchPlan first_only = plan;
    first_only.pass2_rows.clear();
    first_only.pass2_cols.clear();
    first_only.pass3.clear();
    const Image a = patchwork_run(model, padded, first_only);
    const Image b = patchwork_run(model, padded, plan);
    const auto mask = overwrite_mask(plan);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i])
            ASSERT_EQ(a.pixels()[i], b.pixels()[i]);
        else
            changed += a.pixels()[i] != b.pixels()[i];
    }
    EXPECT_GT(changed, 0u);
}

TEST(Patchwork, WrongTileOutputIsConfigError) {
    const Image img(200, 200, 0.1f);
    EXPECT_THROW(patchwork_reconstruct([](const Image&) { return Image(64, 64); }, img), ConfigError);
}

TEST(Patchwork, SingleTileMatchesDirectModelInference) {
    nn::ModelConfig cfg;
    cfg.depth = 3;
    cfg.base_filters = 4;
    nn::Model<float> model(cfg, 1);
    Rng rng(5);
    const Image img = random_unit_image(128, 128, rng);
    const Image via_patchwork = patchwork_reconstruct(model_tile_inference(model), img);
    nn::Tensor4<float> x(1, 128, 128, 1);
    std::copy(img.pixels().begin(), img.pixels().end(), x.data());
    const nn::Tensor4<float> y = model.forward(x, nn::Mode::infer);
    for (std::size_t i = 0; i < img.size(); ++i)
        ASSERT_EQ(via_patchwork.pixels()[i], y.data()[i]);
}

TEST(Patchwork, ModelThatCannotTakeTileIsConfigError) {
    nn::ModelConfig cfg;
    cfg.depth = 9; // needs multiples of 256
    cfg.base_filters = 4;
    nn::Model<float> model(cfg, 1);
    EXPECT_THROW(patchwork_reconstruct(model_tile_inference(model), Image(128, 128)), ConfigError);
}
