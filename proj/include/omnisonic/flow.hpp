#pragma once

#include <functional>
#include <vector>

#include "omnisonic/conditioners.hpp"
#include "omnisonic/rng.hpp"
#include "omnisonic/tensor.hpp"
#include "omnisonic/triattn.hpp"

namespace omnisonic {

// Guidance scales for the three text conditions. Scenario presets follow the
// reference configuration's per-scenario tuning.
struct CfgScales {
    double on = 0.0, off = 0.0, sp = 0.0;
    static CfgScales s1() { return {5.0, 0.5, 2.5}; }
    static CfgScales s2() { return {0.5, 2.5, 7.5}; }
    static CfgScales s3() { return {5.0, 2.5, 2.5}; }
    static CfgScales preset(int scenario) {
        if (scenario == 1) return s1();
        if (scenario == 2) return s2();
        if (scenario == 3) return s3();
        fail("cfg preset: scenario must be 1, 2, or 3");
    }
};

template <class S>
TensorT<S> interpolate(const TensorT<S>& x0, const TensorT<S>& x1, double t) {
    if (!x0.same_shape(x1)) fail("interpolate: shape mismatch");
    if (t < 0.0 || t > 1.0) fail("interpolate: t outside [0,1]");
    TensorT<S> out(x0.shape);
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = S(1.0 - t) * x0.data[i] + S(t) * x1.data[i];
    return out;
}

template <class S>
struct FlowSample {
    TensorT<S> x0, x1;
    double t = 0.0;
    ConditionSet cond;
};

// mean over the batch of per-sample mean squared velocity error
template <class S>
NodePtr<S> fm_loss(const Model<S>& model, const std::vector<FlowSample<S>>& batch) {
    if (batch.empty()) fail("fm_loss: empty batch");
    NodePtr<S> total;
    for (const auto& s : batch) {
        auto x_t = constant(interpolate(s.x0, s.x1, s.t));
        auto v = model.velocity_forward(x_t, s.t, s.cond);
        TensorT<S> tgt(s.x1.shape);
        for (size_t i = 0; i < tgt.data.size(); ++i) tgt.data[i] = s.x1.data[i] - s.x0.data[i];
        auto l = mse(v, constant(std::move(tgt)));
        total = total ? add(total, l) : l;
    }
    return scale(total, S(1.0 / batch.size()));
}

// Each condition type is independently nulled with probability p; the null
// encodes exactly like the empty condition.
inline ConditionSet dropout_conditions(const ConditionSet& cond, double p, Rng& rng) {
    if (p < 0.0 || p >= 1.0) fail("dropout_conditions: p must be in [0,1)");
    ConditionSet c = cond;
    c.drop_on = c.drop_on || rng.uniform() < p;
    c.drop_off = c.drop_off || rng.uniform() < p;
    c.drop_sp = c.drop_sp || rng.uniform() < p;
    c.drop_vis = c.drop_vis || rng.uniform() < p;
    return c;
}

template <class S>
using VelocityFn = std::function<TensorT<S>(const TensorT<S>&, double, const ConditionSet&)>;

// Guided velocity: V(all) plus per-condition corrections against the
// no-text branch. Visual stays on in every branch. Zero-scale branches are
// skipped entirely, so all-zero scales reproduce V(all) bit for bit.
template <class S>
TensorT<S> cfg_velocity(const VelocityFn<S>& v, const TensorT<S>& x_t, double t,
                        const ConditionSet& cond, const CfgScales& scales) {
    if (scales.on < 0.0 || scales.off < 0.0 || scales.sp < 0.0)
        fail("cfg_velocity: scales must be nonnegative");
    TensorT<S> out = v(x_t, t, cond);
    if (scales.on == 0.0 && scales.off == 0.0 && scales.sp == 0.0) return out;

    ConditionSet none = cond;
    none.drop_on = none.drop_off = none.drop_sp = true;
    const TensorT<S> v_none = v(x_t, t, none);

    auto correct = [&](double lambda, bool keep_on, bool keep_off, bool keep_sp) {
        if (lambda == 0.0) return;
        ConditionSet only = none;
        // a condition already nulled in cond stays nulled, so its "only"
        // branch equals the no-text branch and the correction cancels exactly
        only.drop_on = !keep_on || cond.drop_on;
        only.drop_off = !keep_off || cond.drop_off;
        only.drop_sp = !keep_sp || cond.drop_sp;
        const TensorT<S> v_only = v(x_t, t, only);
        for (size_t i = 0; i < out.data.size(); ++i)
            out.data[i] += S(lambda) * (v_only.data[i] - v_none.data[i]);
    };
    correct(scales.on, true, false, false);
    correct(scales.off, false, true, false);
    correct(scales.sp, false, false, true);
    check_finite(out, "cfg_velocity");
    return out;
}

template <class S>
TensorT<S> model_velocity_fn(const Model<S>& model, const TensorT<S>& x, double t,
                             const ConditionSet& cond) {
    return model.velocity(x, t, cond);
}

// Forward Euler over t in [0,1): x += (1/steps) * v(x, k/steps). Exact for
// velocity fields constant in (x, t).
template <class S>
TensorT<S> euler_sample(const VelocityFn<S>& v, const std::vector<int>& shape,
                        const ConditionSet& cond, const CfgScales& scales, int steps, Rng& rng) {
    if (steps < 1) fail("euler_sample: steps must be >= 1");
    TensorT<S> x = TensorT<S>::randn(shape, rng);
    const double h = 1.0 / steps;
    for (int k = 0; k < steps; ++k) {
        const TensorT<S> vel = cfg_velocity(v, x, double(k) / steps, cond, scales);
        for (size_t i = 0; i < x.data.size(); ++i) x.data[i] += S(h) * vel.data[i];
    }
    check_finite(x, "euler_sample");
    return x;
}

}  // namespace omnisonic
