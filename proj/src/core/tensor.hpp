#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace mamsr {

// Dense 4-D array, layout (batch N, channels C, height H, width W), row-major.
template <typename T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), v(std::size_t(std::int64_t(n_) * c_ * h_ * w_), T(0)) {
        check_arg(n_ >= 0 && c_ >= 0 && h_ >= 0 && w_ >= 0, "tensor dims must be non-negative");
    }

    std::int64_t size() const { return std::int64_t(n) * c * h * w; }
    std::int64_t plane_size() const { return std::int64_t(h) * w; }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    T* plane(int in, int ic) { return v.data() + (std::int64_t(in) * c + ic) * plane_size(); }
    const T* plane(int in, int ic) const { return v.data() + (std::int64_t(in) * c + ic) * plane_size(); }

    T& at(int in, int ic, int iy, int ix) { return plane(in, ic)[std::int64_t(iy) * w + ix]; }
    const T& at(int in, int ic, int iy, int ix) const { return plane(in, ic)[std::int64_t(iy) * w + ix]; }

    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }

    std::string shape_str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
               std::to_string(w) + ")";
    }

    bool all_finite() const {
        for (const T& x : v)
            if (!std::isfinite(double(x))) return false;
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(n, c, h, w);
        for (std::int64_t i = 0; i < size(); ++i) out.v[std::size_t(i)] = U(v[std::size_t(i)]);
        return out;
    }
};

template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) {
    check_shape(a.same_shape(b), "tensor add: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    Tensor<T> out = a;
    for (std::int64_t i = 0; i < out.size(); ++i) out.v[std::size_t(i)] += b.v[std::size_t(i)];
    return out;
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
    check_shape(dst.same_shape(src), "tensor add: shape mismatch");
    for (std::int64_t i = 0; i < dst.size(); ++i) dst.v[std::size_t(i)] += src.v[std::size_t(i)];
}

} // namespace mamsr
