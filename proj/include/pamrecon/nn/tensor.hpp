#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pam::nn {

/// Storage with a fixed (cache-line) alignment, so vectorized kernels split
/// their work identically on every run.
template <typename T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

/// (batch, height, width, channels), channels fastest.
struct Shape {
    int n = 0;
    int h = 0;
    int w = 0;
    int c = 0;

    std::size_t count() const {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(h) *
               static_cast<std::size_t>(w) * static_cast<std::size_t>(c);
    }
    bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

template <typename T>
class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(Shape shape, T fill = T(0));
    Tensor4(int n, int h, int w, int c, T fill = T(0)) : Tensor4(Shape{n, h, w, c}, fill) {}

    const Shape& shape() const { return shape_; }
    int batch() const { return shape_.n; }
    int height() const { return shape_.h; }
    int width() const { return shape_.w; }
    int channels() const { return shape_.c; }
    std::size_t size() const { return data_.size(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    std::size_t offset(int n, int y, int x, int c) const {
        return ((static_cast<std::size_t>(n) * shape_.h + y) * shape_.w + x) * shape_.c + c;
    }
    T& at(int n, int y, int x, int c) { return data_[offset(n, y, x, c)]; }
    T at(int n, int y, int x, int c) const { return data_[offset(n, y, x, c)]; }

    void fill(T value);
    bool operator==(const Tensor4&) const = default;

private:
    Shape shape_;
    AlignedVector<T> data_;
};

/// Concatenates along channels; batch and spatial dims must agree.
template <typename T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b);

/// Channels [begin, begin + count).
template <typename T>
Tensor4<T> slice_channels(const Tensor4<T>& x, int begin, int count);

/// Adds `src` into channels [begin, begin + src.channels()) of `dst`.
template <typename T>
void add_into_channels(Tensor4<T>& dst, const Tensor4<T>& src, int begin);

template <typename T>
void add_into(Tensor4<T>& dst, const Tensor4<T>& src);

} // namespace pam::nn
