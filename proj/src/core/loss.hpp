#pragma once

#include <cmath>

#include "core/tensor.hpp"

namespace mamsr {

// Mean absolute error and its gradient wrt pred: sign(pred - target) / count,
// with sign(0) = 0.
template <typename T>
double l1_loss(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>* grad_pred = nullptr) {
    check_shape(pred.same_shape(target), "l1_loss: shape mismatch " + pred.shape_str() + " vs " +
                                             target.shape_str());
    const std::int64_t count = pred.size();
    check_arg(count > 0, "l1_loss: empty tensors");
    if (grad_pred) check_shape(grad_pred->same_shape(pred), "l1_loss: grad shape mismatch");

    double sum = 0.0;
    const T inv = T(1) / T(count);
    for (std::int64_t i = 0; i < count; ++i) {
        const T d = pred.v[std::size_t(i)] - target.v[std::size_t(i)];
        sum += std::fabs(double(d));
        if (grad_pred) {
            if (d > T(0)) grad_pred->v[std::size_t(i)] += inv;
            else if (d < T(0)) grad_pred->v[std::size_t(i)] -= inv;
        }
    }
    return sum / double(count);
}

} // namespace mamsr
