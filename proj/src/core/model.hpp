#pragma once

#include <array>
#include <type_traits>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "core/ops.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace mamsr {

struct NetworkConfig {
    int blocks = 16;   // R
    int channels = 64; // C
    int scale = 2;
    bool csi = true;
    bool icd = true;
    bool csd = true;
    PoolStat csi_stat = PoolStat::stdvar;
    PoolStat icd_stat = PoolStat::stdvar;
    int reduction = 16;
    float eps = 1e-5f;

    void validate() const {
        check_arg(blocks >= 1, "config: blocks must be >= 1");
        check_arg(channels >= 1, "config: channels must be >= 1");
        check_arg(scale == 2 || scale == 3 || scale == 4, "config: scale must be 2, 3 or 4");
        check_arg(reduction >= 1, "config: reduction must be >= 1");
        check_arg(eps > 0.f, "config: eps must be positive");
        if (icd) {
            check_arg(channels % reduction == 0,
                      "config: channels (" + std::to_string(channels) + ") must be divisible by reduction (" +
                          std::to_string(reduction) + ") when the ICD path is enabled");
        }
    }

    std::string paths_str() const {
        std::string s;
        if (csi) s += "csi";
        if (icd) s += s.empty() ? "icd" : ",icd";
        if (csd) s += s.empty() ? "csd" : ",csd";
        return s.empty() ? "none" : s;
    }

    // sub-pixel stages: x2 -> {2}, x3 -> {3}, x4 -> {2,2}
    std::vector<int> up_factors() const {
        if (scale == 4) return {2, 2};
        return {scale};
    }
};

template <typename T>
struct BlockParams {
    ConvParams<T> conv1;
    ConvParams<T> conv2;
    DenseParams<T> icd_fc1; // empty unless ICD enabled
    DenseParams<T> icd_fc2;
    DepthwiseParams<T> csd; // empty unless CSD enabled
};

template <typename T>
struct ModelParams {
    ConvParams<T> head;
    std::vector<BlockParams<T>> blocks;
    ConvParams<T> feat;
    std::vector<ConvParams<T>> up;
    ConvParams<T> recon;
};

// Enumerates every parameter tensor in checkpoint order. The visitor receives
// (name, shape, values); shapes/order here are the single source of truth for
// counting, Adam state layout and serialization.
template <typename T, typename F>
void visit_params(ModelParams<T>& p, F&& fn) {
    auto conv = [&](const std::string& name, ConvParams<T>& cp) {
        fn(name + ".weight", cp.w.shape, cp.w.v);
        fn(name + ".bias", cp.b.shape, cp.b.v);
    };
    auto dense_p = [&](const std::string& name, DenseParams<T>& dp) {
        fn(name + ".weight", dp.w.shape, dp.w.v);
        fn(name + ".bias", dp.b.shape, dp.b.v);
    };
    conv("head", p.head);
    for (std::size_t r = 0; r < p.blocks.size(); ++r) {
        const std::string base = "block" + std::to_string(r);
        conv(base + ".conv1", p.blocks[r].conv1);
        conv(base + ".conv2", p.blocks[r].conv2);
        if (p.blocks[r].icd_fc1.w.numel() > 0) {
            dense_p(base + ".icd_fc1", p.blocks[r].icd_fc1);
            dense_p(base + ".icd_fc2", p.blocks[r].icd_fc2);
        }
        if (p.blocks[r].csd.w.numel() > 0) {
            fn(base + ".csd.weight", p.blocks[r].csd.w.shape, p.blocks[r].csd.w.v);
            fn(base + ".csd.bias", p.blocks[r].csd.b.shape, p.blocks[r].csd.b.v);
        }
    }
    conv("feat", p.feat);
    for (std::size_t s = 0; s < p.up.size(); ++s) {
        conv("up" + std::to_string(s), p.up[s]);
    }
    conv("recon", p.recon);
}

template <typename T, typename F>
void visit_params(const ModelParams<T>& p, F&& fn) {
    visit_params(const_cast<ModelParams<T>&>(p),
                 [&](const std::string& name, const std::vector<int>& shape, std::vector<T>& vals) {
                     fn(name, shape, const_cast<const std::vector<T>&>(vals));
                 });
}

// zero-valued parameter set with the shapes the config dictates
template <typename T>
ModelParams<T> alloc_params(const NetworkConfig& cfg) {
    cfg.validate();
    const int C = cfg.channels;
    ModelParams<T> p;
    p.head = ConvParams<T>(C, 3, 3, 3);
    p.blocks.resize(std::size_t(cfg.blocks));
    for (auto& b : p.blocks) {
        b.conv1 = ConvParams<T>(C, C, 3, 3);
        b.conv2 = ConvParams<T>(C, C, 3, 3);
        if (cfg.icd) {
            b.icd_fc1 = DenseParams<T>(C / cfg.reduction, C);
            b.icd_fc2 = DenseParams<T>(C, C / cfg.reduction);
        }
        if (cfg.csd) {
            b.csd = DepthwiseParams<T>(C, 3, 3);
        }
    }
    p.feat = ConvParams<T>(C, C, 3, 3);
    for (int f : cfg.up_factors()) {
        p.up.push_back(ConvParams<T>(C * f * f, C, 3, 3));
    }
    p.recon = ConvParams<T>(3, C, 3, 3);
    return p;
}

struct ParamSpec {
    std::string name;
    std::vector<int> shape;
    std::int64_t numel;
};

inline std::vector<ParamSpec> param_schema(const NetworkConfig& cfg) {
    ModelParams<float> p = alloc_params<float>(cfg);
    std::vector<ParamSpec> specs;
    visit_params(p, [&](const std::string& name, const std::vector<int>& shape, std::vector<float>& vals) {
        specs.push_back({name, shape, std::int64_t(vals.size())});
    });
    return specs;
}

inline std::int64_t count_params(const NetworkConfig& cfg) {
    std::int64_t total = 0;
    for (const auto& s : param_schema(cfg)) total += s.numel;
    return total;
}

// Percent parameter increase over the path-free baseline, accounted per path:
// each parameterized path's share is rounded to two decimals and the shares
// are summed (the CSI path is parameter-free and contributes 0.00).
inline double param_increase_percent(const NetworkConfig& cfg) {
    NetworkConfig base = cfg;
    base.csi = base.icd = base.csd = false;
    const double base_count = double(count_params(base));
    auto share = [&](bool on, bool NetworkConfig::* flag) {
        if (!on) return 0.0;
        NetworkConfig one = base;
        one.*flag = true;
        const double pct = 100.0 * (double(count_params(one)) - base_count) / base_count;
        return std::round(pct * 100.0) / 100.0;
    };
    return share(cfg.icd, &NetworkConfig::icd) + share(cfg.csd, &NetworkConfig::csd);
}

// He-style init: weights ~ N(0, sqrt(2 / fan_in)), fan_in = product of the
// non-leading dims; biases zero. Deterministic given the seed.
template <typename T>
ModelParams<T> init_params(const NetworkConfig& cfg, std::uint64_t seed) {
    ModelParams<T> p = alloc_params<T>(cfg);
    Rng root(seed);
    std::uint64_t stream = 0;
    visit_params(p, [&](const std::string&, const std::vector<int>& shape, std::vector<T>& vals) {
        Rng rng = root.fork(stream++);
        if (shape.size() < 2) return; // bias: stays zero
        std::int64_t fan_in = 1;
        for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
        const double sd = std::sqrt(2.0 / double(fan_in));
        for (auto& v : vals) v = T(rng.gaussian() * sd);
    });
    return p;
}

// A runnable model: architecture, the RGB mean its inputs are normalized
// with (a training-set statistic, carried in checkpoints), and parameters.
template <typename T>
struct Model {
    NetworkConfig cfg;
    std::array<float, 3> rgb_mean{0.5f, 0.5f, 0.5f};
    ModelParams<T> params;
};

// per-block maps captured for inspection (batch item 0)
template <typename T>
struct ModulationMaps {
    Tensor<T> csi;  // (1, C, 1, 1); empty when the path is off
    Tensor<T> icd;  // (1, C, 1, 1)
    Tensor<T> csd;  // (1, C, H, W)
    Tensor<T> gate; // (1, C, H, W); empty when all paths are off
};

template <typename T>
struct MambCache {
    Tensor<T> pre1;   // conv1 output
    Tensor<T> act1;   // relu(pre1)
    Tensor<T> x;      // conv2 output (the residual features being modulated)
    Tensor<T> gate;   // sigmoid of the summed maps; empty when all paths off
    Tensor<T> csi_map;
    Tensor<T> icd_in, icd_h1, icd_h1r, icd_map;
    Tensor<T> csd_map;
};

// One multi-path adaptive modulation block:
//   x = conv2(relu(conv1(f)));  out = f + sigmoid(csi ⊕ icd ⊕ csd) ⊗ x
// Disabled paths contribute nothing to the sum; with every path disabled the
// block reduces to a plain residual block (out = f + x).
template <typename T>
Tensor<T> mamb_forward(const Tensor<T>& f_in, const BlockParams<T>& bp, const NetworkConfig& cfg,
                       MambCache<T>* cache, ModulationMaps<T>* capture = nullptr) {
    check_shape(f_in.c == cfg.channels, "mamb: input channels " + std::to_string(f_in.c) + " != C = " +
                                            std::to_string(cfg.channels));
    MambCache<T> local;
    MambCache<T>& cc = cache ? *cache : local;
    const T eps = T(cfg.eps);

    cc.pre1 = conv2d(f_in, bp.conv1, 1);
    cc.act1 = relu(cc.pre1);
    cc.x = conv2d(cc.act1, bp.conv2, 1);

    const bool any_path = cfg.csi || cfg.icd || cfg.csd;
    Tensor<T> out = f_in;
    if (!any_path) {
        add_into(out, cc.x);
        if (capture) *capture = ModulationMaps<T>{};
        return out;
    }

    Tensor<T> gate_pre(cc.x.n, cc.x.c, cc.x.h, cc.x.w);
    if (cfg.csd) {
        cc.csd_map = depthwise_conv2d(cc.x, bp.csd);
        add_into(gate_pre, cc.csd_map);
    }
    if (cfg.csi) {
        cc.csi_map = global_pool(cc.x, cfg.csi_stat, eps);
        broadcast_add_channel(gate_pre, cc.csi_map);
    }
    if (cfg.icd) {
        cc.icd_in = global_pool(cc.x, cfg.icd_stat, eps);
        cc.icd_h1 = dense(cc.icd_in, bp.icd_fc1);
        cc.icd_h1r = relu(cc.icd_h1);
        cc.icd_map = dense(cc.icd_h1r, bp.icd_fc2);
        broadcast_add_channel(gate_pre, cc.icd_map);
    }
    cc.gate = sigmoid(gate_pre);

    for (std::int64_t i = 0; i < out.size(); ++i) {
        out.v[std::size_t(i)] += cc.gate.v[std::size_t(i)] * cc.x.v[std::size_t(i)];
    }

    if (capture) {
        auto slice0 = [](const Tensor<T>& t) {
            if (t.size() == 0) return Tensor<T>{};
            Tensor<T> s(1, t.c, t.h, t.w);
            std::copy_n(t.plane(0, 0), s.size(), s.data());
            return s;
        };
        capture->csi = slice0(cc.csi_map);
        capture->icd = slice0(cc.icd_map);
        capture->csd = slice0(cc.csd_map);
        capture->gate = slice0(cc.gate);
    }
    return out;
}

// Accumulates into gin (grad wrt f_in) and gbp (grads of the block params).
template <typename T>
void mamb_backward(const Tensor<T>& f_in, const BlockParams<T>& bp, const NetworkConfig& cfg,
                   const MambCache<T>& cc, const Tensor<T>& grad_out, Tensor<T>& gin,
                   BlockParams<T>& gbp) {
    const T eps = T(cfg.eps);
    add_into(gin, grad_out); // residual branch

    const bool any_path = cfg.csi || cfg.icd || cfg.csd;
    Tensor<T> gx(cc.x.n, cc.x.c, cc.x.h, cc.x.w);
    if (any_path) {
        // out = f + g ⊗ x with g = sigmoid(s): d/dg = grad⊗x, d/dx = grad⊗g
        Tensor<T> g_pre(cc.x.n, cc.x.c, cc.x.h, cc.x.w);
        for (std::int64_t i = 0; i < gx.size(); ++i) {
            const T go = grad_out.v[std::size_t(i)];
            const T g = cc.gate.v[std::size_t(i)];
            gx.v[std::size_t(i)] = go * g;
            g_pre.v[std::size_t(i)] = go * cc.x.v[std::size_t(i)] * g * (T(1) - g);
        }
        if (cfg.csd) {
            depthwise_conv2d_backward(cc.x, bp.csd, g_pre, &gx, &gbp.csd);
        }
        if (cfg.csi) {
            Tensor<T> gvec = reduce_spatial_sum(g_pre);
            global_pool_backward(cc.x, cfg.csi_stat, eps, gvec, &gx);
        }
        if (cfg.icd) {
            Tensor<T> gmap = reduce_spatial_sum(g_pre);
            Tensor<T> gh1r(cc.icd_h1r.n, cc.icd_h1r.c, 1, 1);
            dense_backward(cc.icd_h1r, bp.icd_fc2, gmap, &gh1r, &gbp.icd_fc2);
            Tensor<T> gh1(cc.icd_h1.n, cc.icd_h1.c, 1, 1);
            relu_backward(cc.icd_h1, gh1r, &gh1);
            Tensor<T> gin_vec(cc.icd_in.n, cc.icd_in.c, 1, 1);
            dense_backward(cc.icd_in, bp.icd_fc1, gh1, &gin_vec, &gbp.icd_fc1);
            global_pool_backward(cc.x, cfg.icd_stat, eps, gin_vec, &gx);
        }
    } else {
        gx = grad_out;
    }

    Tensor<T> gact1(cc.act1.n, cc.act1.c, cc.act1.h, cc.act1.w);
    conv2d_backward(cc.act1, bp.conv2, 1, gx, &gact1, &gbp.conv2);
    Tensor<T> gpre1(cc.pre1.n, cc.pre1.c, cc.pre1.h, cc.pre1.w);
    relu_backward(cc.pre1, gact1, &gpre1);
    conv2d_backward(f_in, bp.conv1, 1, gpre1, &gin, &gbp.conv1);
}

template <typename T>
struct NetworkCache {
    Tensor<T> input;
    Tensor<T> f0;
    std::vector<Tensor<T>> block_out; // block r output, r = 0..R-1
    std::vector<MambCache<T>> block_cache;
    Tensor<T> feat_out; // conv after the block stack
    Tensor<T> skip_sum; // f0 + feat_out
    std::vector<Tensor<T>> up_in; // input of each upscale conv
    Tensor<T> recon_in; // after the last shuffle
};

// Full pipeline: head conv -> R MAMBs -> feat conv -> global skip ->
// sub-pixel upscaling -> reconstruction conv. Input is mean-subtracted RGB.
template <typename T>
Tensor<T> network_forward(const Tensor<T>& img_lr, const ModelParams<T>& params, const NetworkConfig& cfg,
                          NetworkCache<std::type_identity_t<T>>* cache = nullptr, int capture_block = -1,
                          ModulationMaps<std::type_identity_t<T>>* capture = nullptr) {
    check_shape(img_lr.c == 3, "network_forward: input must have 3 channels, got " + std::to_string(img_lr.c));
    NetworkCache<T> local;
    NetworkCache<T>& nc = cache ? *cache : local;
    const bool keep = cache != nullptr;

    Tensor<T> f0 = conv2d(img_lr, params.head, 1);
    if (keep) {
        nc.input = img_lr;
        nc.f0 = f0;
        nc.block_out.resize(std::size_t(cfg.blocks));
        nc.block_cache.resize(std::size_t(cfg.blocks));
    }

    Tensor<T> cur = f0;
    for (int r = 0; r < cfg.blocks; ++r) {
        MambCache<T> tmp;
        MambCache<T>* bc = keep ? &nc.block_cache[std::size_t(r)] : &tmp;
        ModulationMaps<T>* cap = (capture && r == capture_block) ? capture : nullptr;
        cur = mamb_forward(cur, params.blocks[std::size_t(r)], cfg, bc, cap);
        if (keep) nc.block_out[std::size_t(r)] = cur;
    }

    Tensor<T> feat_out = conv2d(cur, params.feat, 1);
    Tensor<T> skip = f0 + feat_out;
    if (keep) {
        nc.feat_out = feat_out;
        nc.skip_sum = skip;
    }

    Tensor<T> u = skip;
    const auto factors = cfg.up_factors();
    for (std::size_t s = 0; s < factors.size(); ++s) {
        if (keep) nc.up_in.push_back(u);
        u = pixel_shuffle(conv2d(u, params.up[s], 1), factors[s]);
    }
    if (keep) nc.recon_in = u;
    return conv2d(u, params.recon, 1);
}

// Accumulates parameter gradients into gparams; when grad_input is non-null
// it is filled (accumulated) with the gradient wrt the network input.
template <typename T>
void network_backward(const ModelParams<T>& params, const NetworkConfig& cfg, const NetworkCache<T>& nc,
                      const Tensor<T>& grad_out, ModelParams<T>& gparams,
                      Tensor<std::type_identity_t<T>>* grad_input = nullptr) {
    // reconstruction conv
    Tensor<T> g_recon_in(nc.recon_in.n, nc.recon_in.c, nc.recon_in.h, nc.recon_in.w);
    conv2d_backward(nc.recon_in, params.recon, 1, grad_out, &g_recon_in, &gparams.recon);

    // upscale stages in reverse: shuffle adjoint then conv backward
    const auto factors = cfg.up_factors();
    Tensor<T> g = g_recon_in;
    for (std::size_t i = factors.size(); i-- > 0;) {
        Tensor<T> g_conv_out = space_to_depth(g, factors[i]);
        const Tensor<T>& up_in = nc.up_in[i];
        Tensor<T> g_up_in(up_in.n, up_in.c, up_in.h, up_in.w);
        conv2d_backward(up_in, params.up[i], 1, g_conv_out, &g_up_in, &gparams.up[i]);
        g = g_up_in;
    }

    // g is now the gradient at skip_sum = f0 + feat_out
    Tensor<T> g_f0 = g;
    Tensor<T> g_cur(nc.block_out.back().n, nc.block_out.back().c, nc.block_out.back().h,
                    nc.block_out.back().w);
    conv2d_backward(nc.block_out.back(), params.feat, 1, g, &g_cur, &gparams.feat);

    for (int r = cfg.blocks - 1; r >= 0; --r) {
        const Tensor<T>& f_in = r == 0 ? nc.f0 : nc.block_out[std::size_t(r - 1)];
        Tensor<T> g_prev(f_in.n, f_in.c, f_in.h, f_in.w);
        mamb_backward(f_in, params.blocks[std::size_t(r)], cfg, nc.block_cache[std::size_t(r)], g_cur,
                      g_prev, gparams.blocks[std::size_t(r)]);
        g_cur = g_prev;
    }
    add_into(g_f0, g_cur);

    conv2d_backward(nc.input, params.head, 1, g_f0, grad_input, &gparams.head);
}

} // namespace mamsr
