#include "pamrecon/nn/tensor.hpp"

#include <algorithm>

#include "pamrecon/errors.hpp"

namespace pam::nn {

std::string to_string(const Shape& s) {
    return "(" + std::to_string(s.n) + "," + std::to_string(s.h) + "," + std::to_string(s.w) +
           "," + std::to_string(s.c) + ")";
}

template <typename T>
Tensor4<T>::Tensor4(Shape shape, T fill) : shape_(shape) {
    if (shape.n < 1 || shape.h < 1 || shape.w < 1 || shape.c < 1)
        throw ShapeError("tensor dims must be >= 1, got " + to_string(shape));
    data_.assign(shape.count(), fill);
}

template <typename T>
void Tensor4<T>::fill(T value) {
    std::fill(data_.begin(), data_.end(), value);
}

namespace {

void require_same_grid(const Shape& a, const Shape& b, const char* what) {
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        throw ShapeError(std::string(what) + ": " + to_string(a) + " vs " + to_string(b));
}

} // namespace

template <typename T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b) {
    require_same_grid(a.shape(), b.shape(), "concat_channels");
    const int ca = a.channels();
    const int cb = b.channels();
    Tensor4<T> out(a.batch(), a.height(), a.width(), ca + cb);
    const std::size_t pixels = static_cast<std::size_t>(a.batch()) * a.height() * a.width();
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    for (std::size_t p = 0; p < pixels; ++p) {
        po = std::copy_n(pa, ca, po);
        po = std::copy_n(pb, cb, po);
        pa += ca;
        pb += cb;
    }
    return out;
}

template <typename T>
Tensor4<T> slice_channels(const Tensor4<T>& x, int begin, int count) {
    if (begin < 0 || count < 1 || begin + count > x.channels())
        throw ShapeError("slice_channels: range outside " + to_string(x.shape()));
    Tensor4<T> out(x.batch(), x.height(), x.width(), count);
    const std::size_t pixels = static_cast<std::size_t>(x.batch()) * x.height() * x.width();
    const int c = x.channels();
    for (std::size_t p = 0; p < pixels; ++p)
        std::copy_n(x.data() + p * c + begin, count, out.data() + p * count);
    return out;
}

template <typename T>
void add_into_channels(Tensor4<T>& dst, const Tensor4<T>& src, int begin) {
    require_same_grid(dst.shape(), src.shape(), "add_into_channels");
    if (begin < 0 || begin + src.channels() > dst.channels())
        throw ShapeError("add_into_channels: range outside " + to_string(dst.shape()));
    const std::size_t pixels = static_cast<std::size_t>(dst.batch()) * dst.height() * dst.width();
    const int cd = dst.channels();
    const int cs = src.channels();
    for (std::size_t p = 0; p < pixels; ++p) {
        T* d = dst.data() + p * cd + begin;
        const T* s = src.data() + p * cs;
        for (int k = 0; k < cs; ++k)
            d[k] += s[k];
    }
}

template <typename T>
void add_into(Tensor4<T>& dst, const Tensor4<T>& src) {
    if (!(dst.shape() == src.shape()))
        throw ShapeError("add_into: " + to_string(dst.shape()) + " vs " + to_string(src.shape()));
    T* d = dst.data();
    const T* s = src.data();
    for (std::size_t i = 0; i < dst.size(); ++i)
        d[i] += s[i];
}

#define PAM_INSTANTIATE(T)                                                       \
    template class Tensor4<T>;                                                   \
    template Tensor4<T> concat_channels(const Tensor4<T>&, const Tensor4<T>&);   \
    template Tensor4<T> slice_channels(const Tensor4<T>&, int, int);             \
    template void add_into_channels(Tensor4<T>&, const Tensor4<T>&, int);        \
    template void add_into(Tensor4<T>&, const Tensor4<T>&);

PAM_INSTANTIATE(float)
PAM_INSTANTIATE(double)
#undef PAM_INSTANTIATE

} // namespace pam::nn
