#pragma once

#include <functional>

#include "omnisonic/tensor.hpp"

namespace omnisonic {

// Central-difference gradient of a scalar-valued function, evaluated in
// double. Step sizes outside [1e-5, 1e-2] are rejected: below that range
// cancellation dominates, above it truncation does.
inline TensorT<double> finite_diff_grad(const std::function<double(const TensorT<double>&)>& f,
                                        TensorT<double> x, double h = 1e-4) {
    if (h < 1e-5 || h > 1e-2) fail("finite_diff_grad: step size outside [1e-5, 1e-2]");
    TensorT<double> g(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) {
        const double orig = x.data[i];
        x.data[i] = orig + h;
        const double fp = f(x);
        x.data[i] = orig - h;
        const double fm = f(x);
        x.data[i] = orig;
        g.data[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). The floor keeps near-zero
// coordinates from blowing up the ratio.
inline double max_rel_err(const TensorT<double>& a, const TensorT<double>& b,
                          double floor = 1e-3) {
    if (!a.same_shape(b)) fail("max_rel_err: shape mismatch");
    double worst = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double denom = std::max({std::abs(a.data[i]), std::abs(b.data[i]), floor});
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]) / denom);
    }
    return worst;
}

}  // namespace omnisonic
