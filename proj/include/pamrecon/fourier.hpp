#pragma once

#include <complex>
#include <span>
#include <vector>

namespace pam {

/// Unnormalized 2-D DFT, X[u,v] = sum x[y,x] exp(-2 pi i (u y / h + v x / w)).
std::vector<std::complex<double>> dft2(std::span<const double> real, int h, int w);

/// Unnormalized inverse transform (positive exponent, no 1/N factor).
std::vector<std::complex<double>> idft2(std::span<const std::complex<double>> spectrum, int h, int w);

} // namespace pam
