#include "pamrecon/fourier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <tuple>

#include "pamrecon/errors.hpp"

namespace pam {

namespace {

// Planned transform with its own aligned buffers. FFTW_ESTIMATE keeps plan
// selection independent of timing, so results are reproducible.
class PlannedDft {
public:
    PlannedDft(int h, int w, int sign)
        : size_(static_cast<std::size_t>(h) * static_cast<std::size_t>(w)),
          in_(fftw_alloc_complex(size_)), out_(fftw_alloc_complex(size_)),
          plan_(fftw_plan_dft_2d(h, w, in_, out_, sign, FFTW_ESTIMATE)) {}
    ~PlannedDft() {
        fftw_destroy_plan(plan_);
        fftw_free(in_);
        fftw_free(out_);
    }
    PlannedDft(const PlannedDft&) = delete;
    PlannedDft& operator=(const PlannedDft&) = delete;

    std::complex<double>* input() { return reinterpret_cast<std::complex<double>*>(in_); }
    std::vector<std::complex<double>> run() {
        fftw_execute(plan_);
        const auto* o = reinterpret_cast<const std::complex<double>*>(out_);
        return {o, o + size_};
    }

private:
    std::size_t size_;
    fftw_complex* in_;
    fftw_complex* out_;
    fftw_plan plan_;
};

PlannedDft& plan_for(int h, int w, int sign) {
    thread_local std::map<std::tuple<int, int, int>, std::unique_ptr<PlannedDft>> cache;
    auto& slot = cache[{h, w, sign}];
    if (!slot)
        slot = std::make_unique<PlannedDft>(h, w, sign);
    return *slot;
}

void check_dims(std::size_t n, int h, int w) {
    if (h < 1 || w < 1 || n != static_cast<std::size_t>(h) * static_cast<std::size_t>(w))
        throw InvalidInput("dft2: data length does not match dims");
}

} // namespace

std::vector<std::complex<double>> dft2(std::span<const double> real, int h, int w) {
    check_dims(real.size(), h, w);
    PlannedDft& p = plan_for(h, w, FFTW_FORWARD);
    std::transform(real.begin(), real.end(), p.input(),
                   [](double v) { return std::complex<double>(v, 0.0); });
    return p.run();
}

std::vector<std::complex<double>> idft2(std::span<const std::complex<double>> spectrum, int h, int w) {
    check_dims(spectrum.size(), h, w);
    PlannedDft& p = plan_for(h, w, FFTW_BACKWARD);
    std::copy(spectrum.begin(), spectrum.end(), p.input());
    return p.run();
}

} // namespace pam
