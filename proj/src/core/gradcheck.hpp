#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace mamsr {

// Central-finite-difference comparison against an analytic gradient.
// The per-coordinate error is |a - n| / max(|a|, |n|, 0.01): a true relative
// error for gradients above 0.01 and an absolute error scaled by 100 below,
// which keeps finite-difference roundoff on near-zero coordinates from
// dominating the report.
struct GradCheckReport {
    double max_rel_err = 0.0;
    std::int64_t worst_index = -1;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    bool finite = true;

    bool pass(double tol) const { return finite && max_rel_err < tol; }
};

inline GradCheckReport grad_check(const std::function<double(const std::vector<double>&)>& f,
                                  const std::vector<double>& x0, const std::vector<double>& analytic,
                                  double h = 1e-4) {
    GradCheckReport rep;
    std::vector<double> x = x0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double fp = f(x);
        x[i] = keep - h;
        const double fm = f(x);
        x[i] = keep;
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic[i];
        if (!std::isfinite(a) || !std::isfinite(numeric)) {
            rep.finite = false;
            rep.worst_index = std::int64_t(i);
            return rep;
        }
        const double denom = std::max({std::fabs(a), std::fabs(numeric), 0.01});
        const double rel = std::fabs(a - numeric) / denom;
        if (rel > rep.max_rel_err) {
            rep.max_rel_err = rel;
            rep.worst_index = std::int64_t(i);
            rep.worst_analytic = a;
            rep.worst_numeric = numeric;
        }
    }
    return rep;
}

} // namespace mamsr
