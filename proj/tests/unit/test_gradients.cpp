#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pamrecon/losses.hpp"
#include "pamrecon/nn/layers.hpp"
#include "pamrecon/nn/model.hpp"

using namespace pam;
using namespace pam::nn;

namespace {

constexpr double kTolerance = 1e-3;

oracle::GradReport check_layer(Layer<double>& layer, Tensor4<double> x, Mode mode, std::size_t param_limit = 0) {
    std::vector<Param<double>*> params;
    layer.collect(params);
    Rng rng(99);
    const Tensor4<double> probe = oracle::random_tensor(layer.forward(x, mode).shape(), rng);
    for (auto* p : params)
        std::fill(p->grad.begin(), p->grad.end(), 0.0);
    layer.forward(x, mode);
    const Tensor4<double> dx = layer.backward(probe);

    std::vector<oracle::Var> vars;
    oracle::add_vars(vars, "x", x, dx);
    std::vector<AlignedVector<double>> grads;
    for (auto* p : params)
        grads.push_back(p->grad);
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i]->trainable)
            oracle::add_vars(vars, params[i]->name, params[i]->value, grads[i], param_limit);
    return oracle::finite_difference_check(vars, [&] { return oracle::dot(probe, layer.forward(x, mode)); });
}

Tensor4<double> input(Shape s, std::uint64_t seed = 5) {
    Rng rng(seed);
    return oracle::random_tensor(s, rng);
}

} // namespace

TEST(Gradients, ConvStride1) {
    Rng rng(1);
    Conv2d<double> conv("c", 3, 3, 3, 4, 1, rng);
    const auto r = check_layer(conv, input({2, 7, 6, 3}), Mode::train);
    EXPECT_LT(r.max_rel, kTolerance) << r.worst;
}

TEST(Gradients, ConvStride2OddAndEvenSizes) {
    Rng rng(2);
    Conv2d<double> conv("c", 3, 3, 2, 3, 2, rng);
    for (Shape s : {Shape{2, 8, 8, 2}, Shape{1, 7, 5, 2}}) {
        const auto r = check_layer(conv, input(s), Mode::train);
        EXPECT_LT(r.max_rel, kTolerance) << to_string(s) << " " << r.worst;
    }
}

TEST(Gradients, ConvPointwise) {
    Rng rng(3);
    Conv2d<double> conv("c", 1, 1, 5, 2, 1, rng);
    const auto r = check_layer(conv, input({2, 4, 4, 5}), Mode::train);
    EXPECT_LT(r.max_rel, kTolerance) << r.worst;
}

TEST(Gradients, BatchNormTrainMode) {
    BatchNorm<double> bn("bn", 3, {});
    Rng rng(4);
    for (auto* p : {&bn.gamma(), &bn.beta()})
        for (double& v : p->value)
            v = rng.uniform(0.5, 1.5);
    const auto r = check_layer(bn, input({3, 4, 5, 3}), Mode::train);
    EXPECT_LT(r.max_rel, kTolerance) << r.worst;
}

TEST(Gradients, BatchNormInferMode) {
    BatchNorm<double> bn("bn", 2, {});
    bn.running_mean().value = {0.3, -0.2};
    bn.running_var().value = {0.5, 2.0};
    const auto r = check_layer(bn, input({2, 3, 3, 2}), Mode::infer);
    EXPECT_LT(r.max_rel, kTolerance) << r.worst;
}

TEST(Gradients, Elu) {
    Elu<double> elu;
    const auto r = check_layer(elu, input({2, 5, 5, 3}), Mode::train);
    EXPECT_LT(r.max_rel, kTolerance) << r.worst;
}

TEST(Gradients, Upsample) {
    Upsample2x<double> up;
    const auto r = check_layer(up, input({2, 3, 4, 2}), Mode::train);
    EXPECT_LT(r.max_rel, kTolerance) << r.worst;
}

TEST(Gradients, DenseBlock) {
    Rng rng(6);
    DenseBlock<double> block("d", 4, 4, {}, rng);
    const auto r = check_layer(block, input({2, 6, 6, 4}), Mode::train, 40);
    EXPECT_LT(r.max_rel, kTolerance) << r.worst;
}

TEST(Gradients, DownBlock) {
    Rng rng(7);
    auto down = make_down_block<double>("down", 3, {}, rng);
    const auto r = check_layer(*down, input({2, 8, 8, 3}), Mode::train, 40);
    EXPECT_LT(r.max_rel, kTolerance) << r.worst;
}

TEST(Gradients, UpBlockWithSkip) {
    Rng rng(8);
    auto level = make_conv_block<double>("lvl", 3, 5, 2, 1, {}, rng);
    UpBlock<double> up("up", 4, 3, std::move(level), {}, rng);
    Tensor4<double> x = input({2, 3, 3, 4}, 11);
    Tensor4<double> skip = input({2, 6, 6, 2}, 12);
    Rng prng(13);
    const Tensor4<double> probe = oracle::random_tensor(up.forward(x, skip, Mode::train).shape(), prng);
    std::vector<Param<double>*> params;
    up.collect(params);
    for (auto* p : params)
        std::fill(p->grad.begin(), p->grad.end(), 0.0);
    up.forward(x, skip, Mode::train);
    auto [dx, dskip] = up.backward(probe);
    std::vector<oracle::Var> vars;
    oracle::add_vars(vars, "x", x, dx);
    oracle::add_vars(vars, "skip", skip, dskip);
    std::vector<AlignedVector<double>> grads;
    for (auto* p : params)
        grads.push_back(p->grad);
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i]->trainable)
            oracle::add_vars(vars, params[i]->name, params[i]->value, grads[i], 30);
    const auto r = oracle::finite_difference_check(
        vars, [&] { return oracle::dot(probe, up.forward(x, skip, Mode::train)); });
    EXPECT_LT(r.max_rel, kTolerance) << r.worst;
}

namespace {

oracle::GradReport check_model(Architecture arch) {
    ModelConfig cfg;
    cfg.architecture = arch;
    cfg.depth = 3;
    cfg.base_filters = 4;
    Model<double> model(cfg, 21);
    Tensor4<double> x = input({2, 8, 8, 1}, 22);
    Rng rng(23);
    const Tensor4<double> probe = oracle::random_tensor({2, 8, 8, 1}, rng);
    model.zero_grad();
    model.forward(x, Mode::train);
    model.backward(probe);
    // reverse pass on the raw input is not exposed, so only parameters are probed
    std::vector<oracle::Var> vars;
    std::vector<AlignedVector<double>> grads;
    for (auto* p : model.parameters())
        grads.push_back(p->grad);
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (model.parameters()[i]->trainable)
            oracle::add_vars(vars, model.parameters()[i]->name, model.parameters()[i]->value, grads[i], 6);
    return oracle::finite_difference_check(vars, [&] { return oracle::dot(probe, model.forward(x, Mode::train)); });
}

} // namespace

TEST(Gradients, ComposedFdUnet) {
    const auto r = check_model(Architecture::fd_unet);
    EXPECT_GT(r.checked, 100u);
    EXPECT_LT(r.max_rel, kTolerance) << r.worst;
}

TEST(Gradients, ComposedUnet) {
    const auto r = check_model(Architecture::unet);
    EXPECT_LT(r.max_rel, kTolerance) << r.worst;
}

TEST(Gradients, MaeLoss) {
    Rng rng(31);
    const Tensor4<double> truth = oracle::random_tensor({2, 4, 4, 1}, rng, 0, 1);
    Tensor4<double> recon = oracle::random_tensor({2, 4, 4, 1}, rng, 0, 1);
    const auto lv = loss_mae(truth, recon);
    std::vector<oracle::Var> vars;
    oracle::add_vars(vars, "recon", recon, lv.grad);
    const auto r = oracle::finite_difference_check(vars, [&] { return loss_mae(truth, recon).value; });
    EXPECT_LT(r.max_rel, kTolerance) << r.worst;
}

TEST(Gradients, FourierLoss) {
    Rng rng(32);
    const Tensor4<double> truth = oracle::random_tensor({2, 6, 5, 1}, rng, 0, 1);
    Tensor4<double> recon = oracle::random_tensor({2, 6, 5, 1}, rng, 0, 1);
    const auto lv = loss_fmae(truth, recon);
    std::vector<oracle::Var> vars;
    oracle::add_vars(vars, "recon", recon, lv.grad);
    const auto r = oracle::finite_difference_check(vars, [&] { return loss_fmae(truth, recon).value; });
    EXPECT_LT(r.max_rel, kTolerance) << r.worst;
}

TEST(Gradients, TotalLoss) {
    Rng rng(33);
    const Tensor4<double> truth = oracle::random_tensor({1, 8, 8, 1}, rng, 0, 1);
    Tensor4<double> recon = oracle::random_tensor({1, 8, 8, 1}, rng, 0, 1);
    const auto lv = loss_total(truth, recon, 1.0, 0.01);
    std::vector<oracle::Var> vars;
    oracle::add_vars(vars, "recon", recon, lv.grad);
    const auto r = oracle::finite_difference_check(vars, [&] { return loss_total(truth, recon, 1.0, 0.01).value; });
    EXPECT_LT(r.max_rel, kTolerance) << r.worst;
}
