#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "core/model.hpp"

namespace mamsr {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First/second moments laid out flat in visit_params order.
template <typename T>
struct AdamState {
    std::vector<T> m, v;
    std::int64_t t = 0;

    static AdamState zeros(const NetworkConfig& cfg) {
        AdamState s;
        const auto n = std::size_t(count_params(cfg));
        s.m.assign(n, T(0));
        s.v.assign(n, T(0));
        return s;
    }
};

// lr0 * 0.5^floor(iter / halve_every)
inline double lr_at(std::int64_t iter, double lr0, std::int64_t halve_every) {
    return lr0 * std::pow(0.5, double(iter / halve_every));
}

// Standard bias-corrected Adam update. Throws on non-finite gradients so the
// caller can halt training with diagnostics.
template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state, double lr,
               const AdamConfig& ac = {}) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(ac.beta1, double(state.t));
    const double bc2 = 1.0 - std::pow(ac.beta2, double(state.t));

    // walk both parameter sets in lockstep via flat offsets
    std::vector<const std::vector<T>*> gtensors;
    visit_params(grads, [&](const std::string&, const std::vector<int>&, const std::vector<T>& vals) {
        gtensors.push_back(&vals);
    });

    std::size_t ti = 0;
    std::size_t off = 0;
    visit_params(params, [&](const std::string& name, const std::vector<int>&, std::vector<T>& vals) {
        const std::vector<T>& g = *gtensors[ti++];
        check_shape(g.size() == vals.size(), "adam_step: gradient layout mismatch at " + name);
        T* m = state.m.data() + off;
        T* v = state.v.data() + off;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double gi = double(g[i]);
            if (!std::isfinite(gi)) {
                fail(ErrorCode::numeric, "adam_step: non-finite gradient in " + name);
            }
            const double mi = ac.beta1 * double(m[i]) + (1.0 - ac.beta1) * gi;
            const double vi = ac.beta2 * double(v[i]) + (1.0 - ac.beta2) * gi * gi;
            m[i] = T(mi);
            v[i] = T(vi);
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            vals[i] = T(double(vals[i]) - lr * mhat / (std::sqrt(vhat) + ac.eps));
        }
        off += vals.size();
    });
}

} // namespace mamsr
