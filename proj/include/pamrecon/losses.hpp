#pragma once

#include "pamrecon/nn/tensor.hpp"

namespace pam {

/// Scalar loss plus its gradient with respect to the reconstruction.
template <typename T>
struct LossValue {
    double value = 0.0;
    nn::Tensor4<T> grad;
};

/// Mean absolute error over all elements; subgradient 0 at ties.
template <typename T>
LossValue<T> loss_mae(const nn::Tensor4<T>& truth, const nn::Tensor4<T>& recon);

/// Fourier-magnitude MAE. Each (sample, channel) plane gets an unnormalized
/// 2-D DFT; the plane loss is mean_k | |F(truth)_k| - |F(recon)_k| | over its
/// h*w frequencies and the result is averaged over planes. Where |F(recon)_k|
/// is 0 that frequency contributes no gradient.
template <typename T>
LossValue<T> loss_fmae(const nn::Tensor4<T>& truth, const nn::Tensor4<T>& recon);

/// lambda1 * MAE + lambda2 * FMAE; the Fourier term is skipped when lambda2 == 0.
template <typename T>
LossValue<T> loss_total(const nn::Tensor4<T>& truth, const nn::Tensor4<T>& recon,
                        double lambda1 = 1.0, double lambda2 = 0.01);

} // namespace pam
