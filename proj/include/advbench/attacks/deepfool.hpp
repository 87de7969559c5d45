#pragma once

#include <cmath>

#include "advbench/attacks/result.hpp"
#include "advbench/losses.hpp"
#include "advbench/model.hpp"

namespace advbench {

struct DeepFoolConfig {
    int max_iter = 50;
    double overshoot = 0.02;  // eta; final step is (1+eta) * accumulated r
};

/// L2 DeepFool: iteratively project onto the nearest linearized decision
/// boundary until the predicted label flips, then overshoot and clip.
inline AttackResult deepfool(const Model& model, const Tensor& x, const DeepFoolConfig& cfg) {
    require(cfg.max_iter >= 1, "deepfool: max_iter must be >= 1");
    require(cfg.overshoot >= 0.0, "deepfool: overshoot must be >= 0");
    detail::check_unit_box(x, "deepfool");

    const std::size_t C = model.n_classes();
    AttackResult res;
    Tensor xi = x;
    Tensor r_total = Tensor::zeros(x.shape);
    const int label0 = argmax_label(model.forward(xi));

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        Tensor z = model.forward(xi);
        if (argmax_label(z) != label0) break;
        ++res.iterations;

        // gradients of every logit: (C-1) candidate classes + the current one
        std::vector<Tensor> gz;
        gz.reserve(C);
        for (std::size_t k = 0; k < C; ++k) {
            gz.push_back(grad_logit_input(model, xi, static_cast<int>(k)));
            ++res.grad_calls;
        }

        double best_ratio = 0.0;
        std::size_t best_k = C;
        double best_f = 0.0, best_wnorm = 0.0;
        for (std::size_t k = 0; k < C; ++k) {
            if (static_cast<int>(k) == label0) continue;
            Tensor w = sub(gz[k], gz[static_cast<std::size_t>(label0)]);
            double wnorm = l2_norm(w);
            double f = z[k] - z[static_cast<std::size_t>(label0)];
            if (wnorm < 1e-12) continue;  // boundary at infinity, never the closest
            double ratio = std::fabs(f) / wnorm;
            if (best_k == C || ratio < best_ratio) {  // ties keep the lowest class index
                best_ratio = ratio;
                best_k = k;
                best_f = f;
                best_wnorm = wnorm;
            }
        }
        if (best_k == C) throw Error("deepfool: degenerate boundary (no class with a usable gradient)");

        // step to the linearized boundary of the closest class
        Tensor w = sub(gz[best_k], gz[static_cast<std::size_t>(label0)]);
        double coef = std::fabs(best_f) / (best_wnorm * best_wnorm);
        for (std::size_t i = 0; i < xi.numel(); ++i) {
            double step = coef * w.data[i];
            xi.data[i] += step;
            r_total.data[i] += step;
        }
    }

    res.x_adv = x;
    for (std::size_t i = 0; i < x.numel(); ++i)
        res.x_adv.data[i] = x.data[i] + (1.0 + cfg.overshoot) * r_total.data[i];
    res.x_adv = clip01(std::move(res.x_adv));
    res.success = argmax_label(model.forward(res.x_adv)) != label0;
    detail::finalize_attack_result(res, x);
    return res;
}

}  // namespace advbench
