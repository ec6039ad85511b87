#pragma once

// Independent reference implementations used to check the library.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pamrecon/image.hpp"
#include "pamrecon/nn/tensor.hpp"
#include "pamrecon/rng.hpp"

namespace oracle {

double mse(const pam::Image& a, const pam::Image& b);
double mae(const pam::Image& a, const pam::Image& b);
double psnr(const pam::Image& a, const pam::Image& b);
/// Direct 2-D Gaussian window at every valid placement, centered moments.
double ssim(const pam::Image& a, const pam::Image& b);

/// Sort-based percentile with linear interpolation.
double percentile(std::vector<float> values, double p);

/// O(N^2) unnormalized forward DFT of a row-major h x w plane.
std::vector<std::complex<double>> dft2(const std::vector<double>& x, std::size_t h, std::size_t w);

/// Mean over batch of the per-plane mean absolute magnitude-spectrum difference.
double fmae(const pam::nn::Tensor4<double>& truth, const pam::nn::Tensor4<double>& recon);

pam::Image random_image(std::size_t h, std::size_t w, pam::Rng& rng);
pam::nn::Tensor4<double> random_tensor(const pam::nn::Shape& s, pam::Rng& rng, double lo = -1.0, double hi = 1.0);

double dot(const pam::nn::Tensor4<double>& a, const pam::nn::Tensor4<double>& b);

/// One scalar whose analytic derivative is known.
struct Var {
    std::string name;
    double* value;
    double analytic;
};

struct GradReport {
    double max_rel = 0.0;
    std::string worst;
    std::size_t checked = 0;
};

/// Numerical derivative of `loss` with respect to every var (Ridders'
/// extrapolation of central differences from an initial step), compared with
/// the analytic values: |a - n| / max(|a|, |n|, floor).
GradReport finite_difference_check(std::vector<Var>& vars, const std::function<double()>& loss,
                                   double step = 1e-4, double floor = 1e-6);

/// Every element of a tensor, as vars with the matching analytic gradient.
void add_vars(std::vector<Var>& vars, const std::string& name, pam::nn::Tensor4<double>& value,
              const pam::nn::Tensor4<double>& grad);

/// At most `limit` evenly spaced elements (all when limit == 0).
void add_vars(std::vector<Var>& vars, const std::string& name, pam::nn::AlignedVector<double>& value,
              const pam::nn::AlignedVector<double>& grad, std::size_t limit = 0);

} // namespace oracle
