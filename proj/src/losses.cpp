#include "pamrecon/losses.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "pamrecon/errors.hpp"
#include "pamrecon/fourier.hpp"

namespace pam {

using nn::Tensor4;

namespace {

template <typename T>
void require_same(const Tensor4<T>& a, const Tensor4<T>& b, const char* what) {
    if (!(a.shape() == b.shape()))
        throw ShapeError(std::string(what) + ": " + nn::to_string(a.shape()) + " vs " +
                         nn::to_string(b.shape()));
}

} // namespace

template <typename T>
LossValue<T> loss_mae(const Tensor4<T>& truth, const Tensor4<T>& recon) {
    require_same(truth, recon, "loss_mae");
    LossValue<T> out{0.0, Tensor4<T>(recon.shape())};
    const double n = static_cast<double>(recon.size());
    const T* t = truth.data();
    const T* r = recon.data();
    T* g = out.grad.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < recon.size(); ++i) {
        const double d = static_cast<double>(r[i]) - static_cast<double>(t[i]);
        acc += std::abs(d);
        g[i] = static_cast<T>(d > 0.0 ? 1.0 / n : (d < 0.0 ? -1.0 / n : 0.0));
    }
    out.value = acc / n;
    return out;
}

template <typename T>
LossValue<T> loss_fmae(const Tensor4<T>& truth, const Tensor4<T>& recon) {
    require_same(truth, recon, "loss_fmae");
    const nn::Shape s = recon.shape();
    LossValue<T> out{0.0, Tensor4<T>(s)};
    const std::size_t plane = static_cast<std::size_t>(s.h) * static_cast<std::size_t>(s.w);
    const double planes = static_cast<double>(s.n) * s.c;
    std::vector<double> a(plane), b(plane);
    std::vector<std::complex<double>> weights(plane);
    double total = 0.0;
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            for (int y = 0; y < s.h; ++y)
                for (int x = 0; x < s.w; ++x) {
                    const auto i = static_cast<std::size_t>(y) * s.w + x;
                    a[i] = truth.at(n, y, x, c);
                    b[i] = recon.at(n, y, x, c);
                }
            const auto ft = dft2(a, s.h, s.w);
            const auto fr = dft2(b, s.h, s.w);
            double acc = 0.0;
            for (std::size_t k = 0; k < plane; ++k) {
                const double mr = std::abs(fr[k]);
                const double d = mr - std::abs(ft[k]);
                acc += std::abs(d);
                const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                weights[k] = mr > 0.0 ? sign * fr[k] / mr : std::complex<double>(0.0, 0.0);
            }
            total += acc / static_cast<double>(plane);
            // d|Z_k|/dr_n summed against the signs is Re(IDFT(W))_n
            const auto back = idft2(weights, s.h, s.w);
            const double scale = 1.0 / (static_cast<double>(plane) * planes);
            for (int y = 0; y < s.h; ++y)
                for (int x = 0; x < s.w; ++x)
                    out.grad.at(n, y, x, c) = static_cast<T>(
                        back[static_cast<std::size_t>(y) * s.w + x].real() * scale);
        }
    out.value = total / planes;
    return out;
}

template <typename T>
LossValue<T> loss_total(const Tensor4<T>& truth, const Tensor4<T>& recon, double lambda1,
                        double lambda2) {
    if (lambda1 < 0.0 || lambda2 < 0.0)
        throw InvalidInput("loss weights must be >= 0");
    LossValue<T> mae = loss_mae(truth, recon);
    LossValue<T> out{lambda1 * mae.value, Tensor4<T>(recon.shape())};
    T* g = out.grad.data();
    for (std::size_t i = 0; i < recon.size(); ++i)
        g[i] = static_cast<T>(lambda1 * mae.grad.data()[i]);
    if (lambda2 == 0.0)
        return out;
    LossValue<T> fmae = loss_fmae(truth, recon);
    out.value += lambda2 * fmae.value;
    for (std::size_t i = 0; i < recon.size(); ++i)
        g[i] = static_cast<T>(g[i] + lambda2 * fmae.grad.data()[i]);
    return out;
}

template LossValue<float> loss_mae(const Tensor4<float>&, const Tensor4<float>&);
template LossValue<double> loss_mae(const Tensor4<double>&, const Tensor4<double>&);
template LossValue<float> loss_fmae(const Tensor4<float>&, const Tensor4<float>&);
template LossValue<double> loss_fmae(const Tensor4<double>&, const Tensor4<double>&);
template LossValue<float> loss_total(const Tensor4<float>&, const Tensor4<float>&, double, double);
template LossValue<double> loss_total(const Tensor4<double>&, const Tensor4<double>&, double, double);

} // namespace pam
