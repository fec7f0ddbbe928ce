#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <type_traits>
#include <vector>

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "core/tensor.hpp"

// Differentiable primitives. Forward functions are pure; every *_backward
// ACCUMULATES (+=) into the gradient buffers it is given, so callers can sum
// contributions from several consumers of one value.

namespace mamsr {

// Parameter blob with an arbitrary-rank shape. Activations stay 4-D Tensors;
// parameters carry their natural rank for counting and serialization.
template <typename T>
struct PTensor {
    std::vector<int> shape;
    std::vector<T> v;

    PTensor() = default;
    explicit PTensor(std::vector<int> s) : shape(std::move(s)) {
        v.assign(std::size_t(numel_of(shape)), T(0));
    }

    static std::int64_t numel_of(const std::vector<int>& s) {
        std::int64_t p = 1;
        for (int d : s) p *= d;
        return p;
    }

    // 0 for a default-constructed (absent) blob
    std::int64_t numel() const { return shape.empty() ? 0 : numel_of(shape); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    template <typename U>
    PTensor<U> cast() const {
        PTensor<U> out(shape);
        for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = U(v[i]);
        return out;
    }
};

// w: (C_out, C_in, kH, kW), b: (C_out)
template <typename T>
struct ConvParams {
    PTensor<T> w;
    PTensor<T> b;

    ConvParams() = default;
    ConvParams(int co, int ci, int kh, int kw) : w({co, ci, kh, kw}), b({co}) {}

    int out_channels() const { return w.shape[0]; }
    int in_channels() const { return w.shape[1]; }
    int kh() const { return w.shape[2]; }
    int kw() const { return w.shape[3]; }
};

// w: (rows, cols), b: (rows)
template <typename T>
struct DenseParams {
    PTensor<T> w;
    PTensor<T> b;

    DenseParams() = default;
    DenseParams(int rows, int cols) : w({rows, cols}), b({rows}) {}

    int rows() const { return w.shape[0]; }
    int cols() const { return w.shape[1]; }
};

// w: (C, kH, kW), b: (C); one independent kernel per channel
template <typename T>
struct DepthwiseParams {
    PTensor<T> w;
    PTensor<T> b;

    DepthwiseParams() = default;
    DepthwiseParams(int c, int kh, int kw) : w({c, kh, kw}), b({c}) {}

    int channels() const { return w.shape[0]; }
    int kh() const { return w.shape[1]; }
    int kw() const { return w.shape[2]; }
};

namespace detail {

template <typename T>
std::vector<T> pad_nchw(const Tensor<T>& x, int pad_y, int pad_x) {
    const int ph = x.h + 2 * pad_y, pw = x.w + 2 * pad_x;
    std::vector<T> out(std::size_t(std::int64_t(x.n) * x.c * ph * pw), T(0));
    for (int in = 0; in < x.n; ++in) {
        for (int ic = 0; ic < x.c; ++ic) {
            const T* src = x.plane(in, ic);
            T* dst = out.data() + (std::int64_t(in) * x.c + ic) * ph * pw;
            for (int y = 0; y < x.h; ++y) {
                std::copy_n(src + std::int64_t(y) * x.w, x.w, dst + std::int64_t(y + pad_y) * pw + pad_x);
            }
        }
    }
    return out;
}

template <typename T>
std::vector<T> pad_nchw(const Tensor<T>& x, int pad) {
    return pad_nchw(x, pad, pad);
}

// out_row[x] (+)= sum of the nine 3x3 taps; the fixed tap unroll keeps the
// inner loop contiguous so it vectorizes.
template <typename T, bool Accumulate>
inline void conv3x3_rows(const T* base, int pw, const T* w9, T* out, int oh, int ow, T init) {
    const T w00 = w9[0], w01 = w9[1], w02 = w9[2];
    const T w10 = w9[3], w11 = w9[4], w12 = w9[5];
    const T w20 = w9[6], w21 = w9[7], w22 = w9[8];
    for (int y = 0; y < oh; ++y) {
        const T* r0 = base + std::int64_t(y) * pw;
        const T* r1 = r0 + pw;
        const T* r2 = r1 + pw;
        T* o = out + std::int64_t(y) * ow;
        for (int x = 0; x < ow; ++x) {
            T acc = Accumulate ? o[x] : init;
            acc += w00 * r0[x] + w01 * r0[x + 1] + w02 * r0[x + 2];
            acc += w10 * r1[x] + w11 * r1[x + 1] + w12 * r1[x + 2];
            acc += w20 * r2[x] + w21 * r2[x + 1] + w22 * r2[x + 2];
            o[x] = acc;
        }
    }
}

// generic tap loop for kernels other than 3x3
template <typename T, bool Accumulate>
inline void conv_taps_rows(const T* base, int pw, const T* wk, int kh, int kw, T* out, int oh, int ow,
                           T init) {
    if (!Accumulate) {
        for (std::int64_t i = 0; i < std::int64_t(oh) * ow; ++i) out[i] = init;
    }
    for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
            const T w = wk[std::int64_t(ky) * kw + kx];
            for (int y = 0; y < oh; ++y) {
                const T* src = base + std::int64_t(y + ky) * pw + kx;
                T* o = out + std::int64_t(y) * ow;
                for (int x = 0; x < ow; ++x) o[x] += w * src[x];
            }
        }
    }
}

// blocked dot product with a fixed accumulation order (vectorizes without
// reassociation flags, deterministic for any worker count)
template <typename T>
inline T row_dot(const T* a, const T* b, int n) {
    constexpr int W = 16;
    T acc[W] = {};
    int x = 0;
    for (; x + W <= n; x += W) {
        for (int j = 0; j < W; ++j) acc[j] += a[x + j] * b[x + j];
    }
    for (; x < n; ++x) acc[x % W] += a[x] * b[x];
    T s = T(0);
    for (int j = 0; j < W; ++j) s += acc[j];
    return s;
}

// all nine 3x3 weight-gradient sums for one (out-channel, in-channel) pair in
// a single pass: the grad row is loaded once per row and shared by the taps
template <typename T>
inline void conv3x3_weight_grad_rows(const T* g, int ow, const T* base, int pw, int oh, T* gw9) {
    constexpr int W = 16;
    T acc[9][W] = {};
    for (int y = 0; y < oh; ++y) {
        const T* grow = g + std::int64_t(y) * ow;
        const T* r0 = base + std::int64_t(y) * pw;
        const T* r1 = r0 + pw;
        const T* r2 = r1 + pw;
        int x = 0;
        for (; x + W <= ow; x += W) {
            for (int j = 0; j < W; ++j) {
                const T gv = grow[x + j];
                acc[0][j] += gv * r0[x + j];
                acc[1][j] += gv * r0[x + j + 1];
                acc[2][j] += gv * r0[x + j + 2];
                acc[3][j] += gv * r1[x + j];
                acc[4][j] += gv * r1[x + j + 1];
                acc[5][j] += gv * r1[x + j + 2];
                acc[6][j] += gv * r2[x + j];
                acc[7][j] += gv * r2[x + j + 1];
                acc[8][j] += gv * r2[x + j + 2];
            }
        }
        for (; x < ow; ++x) {
            const T gv = grow[x];
            const int j = x % W;
            acc[0][j] += gv * r0[x];
            acc[1][j] += gv * r0[x + 1];
            acc[2][j] += gv * r0[x + 2];
            acc[3][j] += gv * r1[x];
            acc[4][j] += gv * r1[x + 1];
            acc[5][j] += gv * r1[x + 2];
            acc[6][j] += gv * r2[x];
            acc[7][j] += gv * r2[x + 1];
            acc[8][j] += gv * r2[x + 2];
        }
    }
    for (int k = 0; k < 9; ++k) {
        T s = T(0);
        for (int j = 0; j < W; ++j) s += acc[k][j];
        gw9[k] += s;
    }
}

template <typename T>
inline void flip_3x3(const T* w9, T* out) {
    for (int i = 0; i < 9; ++i) out[i] = w9[8 - i];
}

} // namespace detail

// ---------------------------------------------------------------------------
// convolution

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const ConvParams<T>& p, int pad) {
    const int co = p.out_channels(), ci = p.in_channels(), kh = p.kh(), kw = p.kw();
    check_arg(pad >= 0, "conv2d: pad must be >= 0");
    check_shape(ci == x.c, "conv2d: input has " + std::to_string(x.c) + " channels, kernel expects " +
                               std::to_string(ci));
    const int oh = x.h + 2 * pad - kh + 1;
    const int ow = x.w + 2 * pad - kw + 1;
    check_shape(oh >= 1 && ow >= 1, "conv2d: empty spatial output");

    Tensor<T> out(x.n, co, oh, ow);
    const int pw = x.w + 2 * pad;
    const std::vector<T> padded = detail::pad_nchw(x, pad);
    const std::int64_t in_plane = std::int64_t(x.h + 2 * pad) * pw;

    parallel_for_each(std::int64_t(x.n) * co, [&](std::int64_t t) {
        const int in = int(t / co);
        const int oc = int(t % co);
        T* outp = out.plane(in, oc);
        const T bias = p.b.v[std::size_t(oc)];
        for (int icn = 0; icn < ci; ++icn) {
            const T* base = padded.data() + (std::int64_t(in) * ci + icn) * in_plane;
            const T* wk = p.w.data() + (std::int64_t(oc) * ci + icn) * kh * kw;
            if (kh == 3 && kw == 3) {
                if (icn == 0)
                    detail::conv3x3_rows<T, false>(base, pw, wk, outp, oh, ow, bias);
                else
                    detail::conv3x3_rows<T, true>(base, pw, wk, outp, oh, ow, T(0));
            } else {
                if (icn == 0)
                    detail::conv_taps_rows<T, false>(base, pw, wk, kh, kw, outp, oh, ow, bias);
                else
                    detail::conv_taps_rows<T, true>(base, pw, wk, kh, kw, outp, oh, ow, T(0));
            }
        }
    });
    return out;
}

// Accumulates into *gx (shape of x) and *gp (shapes of p); either may be null.
template <typename T>
void conv2d_backward(const Tensor<T>& x, const ConvParams<T>& p, int pad, const Tensor<T>& grad_out,
                     Tensor<std::type_identity_t<T>>* gx, ConvParams<std::type_identity_t<T>>* gp) {
    const int co = p.out_channels(), ci = p.in_channels(), kh = p.kh(), kw = p.kw();
    const int oh = x.h + 2 * pad - kh + 1;
    const int ow = x.w + 2 * pad - kw + 1;
    check_shape(grad_out.n == x.n && grad_out.c == co && grad_out.h == oh && grad_out.w == ow,
                "conv2d_backward: grad_out shape " + grad_out.shape_str() + " does not match forward output");
    if (gx) check_shape(gx->same_shape(x), "conv2d_backward: gx shape mismatch");

    const int pw = x.w + 2 * pad;
    const std::int64_t in_plane = std::int64_t(x.h + 2 * pad) * pw;
    std::vector<T> padded;
    if (gp) padded = detail::pad_nchw(x, pad);

    if (gp) {
        // bias: plain sums per output channel
        for (int oc = 0; oc < co; ++oc) {
            T s = T(0);
            for (int in = 0; in < x.n; ++in) {
                const T* g = grad_out.plane(in, oc);
                for (std::int64_t i = 0; i < std::int64_t(oh) * ow; ++i) s += g[i];
            }
            gp->b.v[std::size_t(oc)] += s;
        }
        // weights: fused nine-tap reduction against the padded input
        parallel_for_each(co, [&](std::int64_t oc) {
            for (int icn = 0; icn < ci; ++icn) {
                T* gw = gp->w.data() + (std::int64_t(oc) * ci + icn) * kh * kw;
                if (kh == 3 && kw == 3) {
                    for (int in = 0; in < x.n; ++in) {
                        detail::conv3x3_weight_grad_rows(grad_out.plane(in, int(oc)), ow,
                                                         padded.data() + (std::int64_t(in) * ci + icn) * in_plane,
                                                         pw, oh, gw);
                    }
                    continue;
                }
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        T s = T(0);
                        for (int in = 0; in < x.n; ++in) {
                            const T* g = grad_out.plane(in, int(oc));
                            const T* base = padded.data() + (std::int64_t(in) * ci + icn) * in_plane;
                            for (int y = 0; y < oh; ++y) {
                                s += detail::row_dot(g + std::int64_t(y) * ow,
                                                     base + std::int64_t(y + ky) * pw + kx, ow);
                            }
                        }
                        gw[std::int64_t(ky) * kw + kx] += s;
                    }
                }
            }
        });
    }

    if (gx) {
        // grad wrt input = full correlation of grad_out with the flipped kernel
        const int gpad_h = kh - 1 - pad;
        const int gpad_w = kw - 1 - pad;
        check_arg(gpad_h >= 0 && gpad_w >= 0, "conv2d_backward: pad larger than kernel-1 unsupported");
        const int gpw = ow + 2 * gpad_w;
        const std::vector<T> gpadded = detail::pad_nchw(grad_out, gpad_h, gpad_w);
        const std::int64_t g_plane = std::int64_t(oh + 2 * gpad_h) * gpw;

        parallel_for_each(std::int64_t(x.n) * ci, [&](std::int64_t t) {
            const int in = int(t / ci);
            const int icn = int(t % ci);
            T* gxp = gx->plane(in, icn);
            for (int oc = 0; oc < co; ++oc) {
                const T* base = gpadded.data() + (std::int64_t(in) * co + oc) * g_plane;
                const T* wk = p.w.data() + (std::int64_t(oc) * ci + icn) * kh * kw;
                if (kh == 3 && kw == 3) {
                    T wf[9];
                    detail::flip_3x3(wk, wf);
                    detail::conv3x3_rows<T, true>(base, gpw, wf, gxp, x.h, x.w, T(0));
                } else {
                    std::vector<T> wf(std::size_t(kh) * kw);
                    for (int i = 0; i < kh * kw; ++i) wf[std::size_t(i)] = wk[kh * kw - 1 - i];
                    detail::conv_taps_rows<T, true>(base, gpw, wf.data(), kh, kw, gxp, x.h, x.w, T(0));
                }
            }
        });
    }
}

// ---------------------------------------------------------------------------
// depth-wise convolution (pad 1, stride 1, one kernel per channel)

template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& x, const DepthwiseParams<T>& p) {
    const int kh = p.kh(), kw = p.kw();
    check_shape(p.channels() == x.c, "depthwise_conv2d: kernel count " + std::to_string(p.channels()) +
                                         " != input channels " + std::to_string(x.c));
    check_arg(kh == 3 && kw == 3, "depthwise_conv2d: 3x3 kernels only");
    Tensor<T> out(x.n, x.c, x.h, x.w);
    const int pw = x.w + 2;
    const std::vector<T> padded = detail::pad_nchw(x, 1);
    const std::int64_t in_plane = std::int64_t(x.h + 2) * pw;

    parallel_for_each(std::int64_t(x.n) * x.c, [&](std::int64_t t) {
        const int in = int(t / x.c);
        const int icn = int(t % x.c);
        const T* base = padded.data() + (std::int64_t(in) * x.c + icn) * in_plane;
        detail::conv3x3_rows<T, false>(base, pw, p.w.data() + std::int64_t(icn) * 9, out.plane(in, icn),
                                       x.h, x.w, p.b.v[std::size_t(icn)]);
    });
    return out;
}

template <typename T>
void depthwise_conv2d_backward(const Tensor<T>& x, const DepthwiseParams<T>& p, const Tensor<T>& grad_out,
                               Tensor<std::type_identity_t<T>>* gx, DepthwiseParams<std::type_identity_t<T>>* gp) {
    check_shape(grad_out.same_shape(x), "depthwise_conv2d_backward: grad_out shape mismatch");
    const int pw = x.w + 2;
    const std::int64_t in_plane = std::int64_t(x.h + 2) * pw;

    if (gp) {
        const std::vector<T> padded = detail::pad_nchw(x, 1);
        parallel_for_each(x.c, [&](std::int64_t icn) {
            T* gw = gp->w.data() + icn * 9;
            T gb = T(0);
            for (int in = 0; in < x.n; ++in) {
                const T* g = grad_out.plane(in, int(icn));
                const T* base = padded.data() + (std::int64_t(in) * x.c + icn) * in_plane;
                for (std::int64_t i = 0; i < std::int64_t(x.h) * x.w; ++i) gb += g[i];
                detail::conv3x3_weight_grad_rows(g, x.w, base, pw, x.h, gw);
            }
            gp->b.v[std::size_t(icn)] += gb;
        });
    }

    if (gx) {
        check_shape(gx->same_shape(x), "depthwise_conv2d_backward: gx shape mismatch");
        const std::vector<T> gpadded = detail::pad_nchw(grad_out, 1);
        parallel_for_each(std::int64_t(x.n) * x.c, [&](std::int64_t t) {
            const int in = int(t / x.c);
            const int icn = int(t % x.c);
            T wf[9];
            detail::flip_3x3(p.w.data() + std::int64_t(icn) * 9, wf);
            const T* base = gpadded.data() + (std::int64_t(in) * x.c + icn) * in_plane;
            detail::conv3x3_rows<T, true>(base, pw, wf, gx->plane(in, icn), x.h, x.w, T(0));
        });
    }
}

// ---------------------------------------------------------------------------
// fully connected (inputs/outputs are (N, C, 1, 1) tensors)

template <typename T>
Tensor<T> dense(const Tensor<T>& x, const DenseParams<T>& p) {
    check_shape(x.h == 1 && x.w == 1, "dense: expected (N,C,1,1) input");
    check_shape(x.c == p.cols(), "dense: input length " + std::to_string(x.c) + " != cols " +
                                     std::to_string(p.cols()));
    Tensor<T> out(x.n, p.rows(), 1, 1);
    for (int in = 0; in < x.n; ++in) {
        const T* xv = x.data() + std::int64_t(in) * x.c;
        T* ov = out.data() + std::int64_t(in) * p.rows();
        for (int r = 0; r < p.rows(); ++r) {
            const T* wr = p.w.data() + std::int64_t(r) * p.cols();
            T s = p.b.v[std::size_t(r)];
            for (int c = 0; c < p.cols(); ++c) s += wr[c] * xv[c];
            ov[r] = s;
        }
    }
    return out;
}

template <typename T>
void dense_backward(const Tensor<T>& x, const DenseParams<T>& p, const Tensor<T>& grad_out,
                    Tensor<std::type_identity_t<T>>* gx, DenseParams<std::type_identity_t<T>>* gp) {
    check_shape(grad_out.n == x.n && grad_out.c == p.rows() && grad_out.h == 1 && grad_out.w == 1,
                "dense_backward: grad_out shape mismatch");
    for (int in = 0; in < x.n; ++in) {
        const T* xv = x.data() + std::int64_t(in) * x.c;
        const T* gv = grad_out.data() + std::int64_t(in) * p.rows();
        for (int r = 0; r < p.rows(); ++r) {
            const T g = gv[r];
            if (gp) {
                gp->b.v[std::size_t(r)] += g;
                T* gwr = gp->w.data() + std::int64_t(r) * p.cols();
                for (int c = 0; c < p.cols(); ++c) gwr[c] += g * xv[c];
            }
            if (gx) {
                const T* wr = p.w.data() + std::int64_t(r) * p.cols();
                T* gxv = gx->data() + std::int64_t(in) * x.c;
                for (int c = 0; c < p.cols(); ++c) gxv[c] += g * wr[c];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// activations

enum class Act { relu, sigmoid };

template <typename T>
inline T sigmoid_scalar(T x) {
    if (x >= T(0)) {
        const T e = std::exp(-x);
        return T(1) / (T(1) + e);
    }
    const T e = std::exp(x);
    return e / (T(1) + e);
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> out = x;
    for (auto& v : out.v) v = v > T(0) ? v : T(0);
    return out;
}

// gx += gy where x > 0; subgradient at 0 is 0
template <typename T>
void relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out, Tensor<T>* gx) {
    check_shape(grad_out.same_shape(x), "relu_backward: shape mismatch");
    for (std::int64_t i = 0; i < x.size(); ++i) {
        if (x.v[std::size_t(i)] > T(0)) gx->v[std::size_t(i)] += grad_out.v[std::size_t(i)];
    }
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    Tensor<T> out = x;
    for (auto& v : out.v) v = sigmoid_scalar(v);
    return out;
}

// takes the forward OUTPUT y: d/dx = y(1-y)
template <typename T>
void sigmoid_backward(const Tensor<T>& y, const Tensor<T>& grad_out, Tensor<T>* gx) {
    check_shape(grad_out.same_shape(y), "sigmoid_backward: shape mismatch");
    for (std::int64_t i = 0; i < y.size(); ++i) {
        const T yv = y.v[std::size_t(i)];
        gx->v[std::size_t(i)] += grad_out.v[std::size_t(i)] * yv * (T(1) - yv);
    }
}

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Act kind) {
    return kind == Act::relu ? relu(x) : sigmoid(x);
}

// ---------------------------------------------------------------------------
// global pooling statistics and channel standardization

enum class PoolStat { max, avg, var, stdvar, power };

inline const char* pool_stat_name(PoolStat s) {
    switch (s) {
    case PoolStat::max: return "max";
    case PoolStat::avg: return "avg";
    case PoolStat::var: return "var";
    case PoolStat::stdvar: return "stdvar";
    case PoolStat::power: return "power";
    }
    return "?";
}

inline bool pool_stat_from_name(const std::string& name, PoolStat* out) {
    if (name == "max") *out = PoolStat::max;
    else if (name == "avg") *out = PoolStat::avg;
    else if (name == "var") *out = PoolStat::var;
    else if (name == "stdvar") *out = PoolStat::stdvar;
    else if (name == "power") *out = PoolStat::power;
    else return false;
    return true;
}

// per-item z-scores across the C channel statistics; population std, eps
// added to the std. Input must be (N, C, 1, 1).
template <typename T>
Tensor<T> standardize_channels(const Tensor<T>& v, T eps) {
    check_shape(v.h == 1 && v.w == 1, "standardize_channels: expected (N,C,1,1)");
    check_arg(v.c >= 1, "standardize_channels: need at least one channel");
    check_arg(eps > T(0), "standardize_channels: eps must be positive");
    Tensor<T> out(v.n, v.c, 1, 1);
    for (int in = 0; in < v.n; ++in) {
        const T* src = v.data() + std::int64_t(in) * v.c;
        T* dst = out.data() + std::int64_t(in) * v.c;
        T mean = T(0);
        for (int c = 0; c < v.c; ++c) mean += src[c];
        mean /= T(v.c);
        T var = T(0);
        for (int c = 0; c < v.c; ++c) {
            const T d = src[c] - mean;
            var += d * d;
        }
        var /= T(v.c);
        const T denom = std::sqrt(var) + eps;
        for (int c = 0; c < v.c; ++c) dst[c] = (src[c] - mean) / denom;
    }
    return out;
}

template <typename T>
void standardize_channels_backward(const Tensor<T>& v, T eps, const Tensor<T>& grad_out, Tensor<T>* gv) {
    check_shape(grad_out.same_shape(v), "standardize_channels_backward: shape mismatch");
    const int C = v.c;
    for (int in = 0; in < v.n; ++in) {
        const T* src = v.data() + std::int64_t(in) * C;
        const T* g = grad_out.data() + std::int64_t(in) * C;
        T* dst = gv->data() + std::int64_t(in) * C;
        T mean = T(0), gmean = T(0);
        for (int c = 0; c < C; ++c) {
            mean += src[c];
            gmean += g[c];
        }
        mean /= T(C);
        gmean /= T(C);
        T var = T(0), proj = T(0);
        for (int c = 0; c < C; ++c) {
            const T d = src[c] - mean;
            var += d * d;
            proj += g[c] * d;
        }
        var /= T(C);
        const T sd = std::sqrt(var);
        const T denom = sd + eps;
        const T inv = T(1) / denom;
        // d sd / d v_k = (v_k - mean) / (C * sd); zero at the sd == 0 kink
        const T k = sd > T(0) ? proj / (T(C) * sd * denom * denom) : T(0);
        for (int c = 0; c < C; ++c) {
            dst[c] += (g[c] - gmean) * inv - (src[c] - mean) * k;
        }
    }
}

// Channel statistics over the spatial extent. Returns (N, C, 1, 1).
// var is the population variance (divisor H*W); stdvar is var followed by
// standardize_channels; power is the mean of squared responses.
template <typename T>
Tensor<T> global_pool(const Tensor<T>& x, PoolStat stat, T eps = T(1e-5)) {
    check_arg(x.h >= 1 && x.w >= 1, "global_pool: empty spatial extent");
    Tensor<T> out(x.n, x.c, 1, 1);
    const std::int64_t hw = x.plane_size();
    for (int in = 0; in < x.n; ++in) {
        for (int ic = 0; ic < x.c; ++ic) {
            const T* p = x.plane(in, ic);
            T r = T(0);
            switch (stat) {
            case PoolStat::max: {
                r = p[0];
                for (std::int64_t i = 1; i < hw; ++i)
                    if (p[i] > r) r = p[i];
                break;
            }
            case PoolStat::avg: {
                for (std::int64_t i = 0; i < hw; ++i) r += p[i];
                r /= T(hw);
                break;
            }
            case PoolStat::var:
            case PoolStat::stdvar: {
                T mean = T(0);
                for (std::int64_t i = 0; i < hw; ++i) mean += p[i];
                mean /= T(hw);
                for (std::int64_t i = 0; i < hw; ++i) {
                    const T d = p[i] - mean;
                    r += d * d;
                }
                r /= T(hw);
                break;
            }
            case PoolStat::power: {
                for (std::int64_t i = 0; i < hw; ++i) r += p[i] * p[i];
                r /= T(hw);
                break;
            }
            }
            out.data()[std::int64_t(in) * x.c + ic] = r;
        }
    }
    if (stat == PoolStat::stdvar) return standardize_channels(out, eps);
    return out;
}

template <typename T>
void global_pool_backward(const Tensor<T>& x, PoolStat stat, T eps, const Tensor<T>& grad_stat,
                          Tensor<T>* gx) {
    check_shape(grad_stat.n == x.n && grad_stat.c == x.c && grad_stat.h == 1 && grad_stat.w == 1,
                "global_pool_backward: grad shape mismatch");
    const std::int64_t hw = x.plane_size();
    const T inv_hw = T(1) / T(hw);

    Tensor<T> gvec = grad_stat;
    if (stat == PoolStat::stdvar) {
        // chain through the standardization of the raw variance vector
        Tensor<T> raw = global_pool(x, PoolStat::var);
        Tensor<T> graw(x.n, x.c, 1, 1);
        standardize_channels_backward(raw, eps, grad_stat, &graw);
        gvec = graw;
    }

    for (int in = 0; in < x.n; ++in) {
        for (int ic = 0; ic < x.c; ++ic) {
            const T g = gvec.data()[std::int64_t(in) * x.c + ic];
            const T* p = x.plane(in, ic);
            T* gp = gx->plane(in, ic);
            switch (stat) {
            case PoolStat::max: {
                std::int64_t arg = 0;
                T best = p[0];
                for (std::int64_t i = 1; i < hw; ++i) {
                    if (p[i] > best) {
                        best = p[i];
                        arg = i;
                    }
                }
                gp[arg] += g;
                break;
            }
            case PoolStat::avg: {
                const T s = g * inv_hw;
                for (std::int64_t i = 0; i < hw; ++i) gp[i] += s;
                break;
            }
            case PoolStat::var:
            case PoolStat::stdvar: {
                T mean = T(0);
                for (std::int64_t i = 0; i < hw; ++i) mean += p[i];
                mean /= T(hw);
                const T s = T(2) * g * inv_hw;
                for (std::int64_t i = 0; i < hw; ++i) gp[i] += s * (p[i] - mean);
                break;
            }
            case PoolStat::power: {
                const T s = T(2) * g * inv_hw;
                for (std::int64_t i = 0; i < hw; ++i) gp[i] += s * p[i];
                break;
            }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// sub-pixel rearrangement

// (N, C, H, W) -> (N, C/r^2, rH, rW); out(n, c, r*i+di, r*j+dj) =
// x(n, c*r^2 + di*r + dj, i, j) — the sub-pixel index varies row-major.
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r) {
    check_arg(r >= 1, "pixel_shuffle: factor must be >= 1");
    check_shape(x.c % (r * r) == 0, "pixel_shuffle: channels " + std::to_string(x.c) +
                                        " not divisible by r^2 = " + std::to_string(r * r));
    const int oc = x.c / (r * r);
    Tensor<T> out(x.n, oc, x.h * r, x.w * r);
    for (int in = 0; in < x.n; ++in) {
        for (int c = 0; c < oc; ++c) {
            T* op = out.plane(in, c);
            for (int di = 0; di < r; ++di) {
                for (int dj = 0; dj < r; ++dj) {
                    const T* sp = x.plane(in, c * r * r + di * r + dj);
                    for (int y = 0; y < x.h; ++y) {
                        const T* src = sp + std::int64_t(y) * x.w;
                        T* dst = op + (std::int64_t(y) * r + di) * out.w + dj;
                        for (int xx = 0; xx < x.w; ++xx) dst[std::int64_t(xx) * r] = src[xx];
                    }
                }
            }
        }
    }
    return out;
}

// exact inverse of pixel_shuffle
template <typename T>
Tensor<T> space_to_depth(const Tensor<T>& x, int r) {
    check_arg(r >= 1, "space_to_depth: factor must be >= 1");
    check_shape(x.h % r == 0 && x.w % r == 0, "space_to_depth: spatial dims not divisible by r");
    const int oh = x.h / r, ow = x.w / r;
    Tensor<T> out(x.n, x.c * r * r, oh, ow);
    for (int in = 0; in < x.n; ++in) {
        for (int c = 0; c < x.c; ++c) {
            const T* sp = x.plane(in, c);
            for (int di = 0; di < r; ++di) {
                for (int dj = 0; dj < r; ++dj) {
                    T* op = out.plane(in, c * r * r + di * r + dj);
                    for (int y = 0; y < oh; ++y) {
                        const T* src = sp + (std::int64_t(y) * r + di) * x.w + dj;
                        T* dst = op + std::int64_t(y) * ow;
                        for (int xx = 0; xx < ow; ++xx) dst[xx] = src[std::int64_t(xx) * r];
                    }
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// broadcast helpers for per-channel scalar maps

// dst[n,c,:,:] += vec[n,c]; the nearest-neighbor resize of a 1x1 map
template <typename T>
void broadcast_add_channel(Tensor<T>& dst, const Tensor<T>& vec) {
    check_shape(vec.n == dst.n && vec.c == dst.c && vec.h == 1 && vec.w == 1,
                "broadcast_add_channel: vec must be (N,C,1,1)");
    const std::int64_t hw = dst.plane_size();
    for (int in = 0; in < dst.n; ++in) {
        for (int ic = 0; ic < dst.c; ++ic) {
            const T s = vec.data()[std::int64_t(in) * dst.c + ic];
            T* p = dst.plane(in, ic);
            for (std::int64_t i = 0; i < hw; ++i) p[i] += s;
        }
    }
}

// (N,C,H,W) -> (N,C,1,1) spatial sums: adjoint of broadcast_add_channel
template <typename T>
Tensor<T> reduce_spatial_sum(const Tensor<T>& x) {
    Tensor<T> out(x.n, x.c, 1, 1);
    const std::int64_t hw = x.plane_size();
    for (int in = 0; in < x.n; ++in) {
        for (int ic = 0; ic < x.c; ++ic) {
            const T* p = x.plane(in, ic);
            T s = T(0);
            for (std::int64_t i = 0; i < hw; ++i) s += p[i];
            out.data()[std::int64_t(in) * x.c + ic] = s;
        }
    }
    return out;
}

} // namespace mamsr
