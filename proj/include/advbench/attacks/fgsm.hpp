#pragma once

#include <cmath>

#include "advbench/attacks/result.hpp"
#include "advbench/losses.hpp"
#include "advbench/model.hpp"

namespace advbench {

struct FgsmConfig {
    double eps = 0.05;
    LossSpec loss = LossSpec::xent();  // the task loss J
};

namespace detail {

inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Nudge x_adv toward x until the recomputed difference respects |d| <= eps in
// floating point; rounding in x + eps*s can otherwise overshoot by an ulp.
inline void clamp_linf_exact(const Tensor& x, Tensor& x_adv, double eps) {
    for (std::size_t i = 0; i < x.numel(); ++i) {
        while (std::fabs(x_adv.data[i] - x.data[i]) > eps)
            x_adv.data[i] = std::nextafter(x_adv.data[i], x.data[i]);
    }
}

}  // namespace detail

/// One-step attack along the sign of the input gradient of the task loss:
/// x_adv = clip(x + eps * sign(grad), 0, 1). Exactly one gradient call.
inline AttackResult fgsm(const Model& model, const Tensor& x, const LabelMap& y,
                         const FgsmConfig& cfg) {
    require(cfg.eps >= 0.0, "fgsm: eps must be >= 0");
    detail::check_unit_box(x, "fgsm");

    int clean_label = argmax_label(model.forward(x));
    Tensor g = grad_input(model, x, y, cfg.loss);

    AttackResult res;
    res.grad_calls = 1;
    res.iterations = 1;
    res.x_adv = x;
    for (std::size_t i = 0; i < x.numel(); ++i)
        res.x_adv.data[i] = x.data[i] + cfg.eps * detail::sign0(g.data[i]);
    res.x_adv = clip01(std::move(res.x_adv));
    detail::clamp_linf_exact(x, res.x_adv, cfg.eps);

    res.success = argmax_label(model.forward(res.x_adv)) != clean_label;
    detail::finalize_attack_result(res, x);
    return res;
}

}  // namespace advbench
