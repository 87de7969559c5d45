#pragma once

#include <cmath>
#include <vector>

#include "advbench/attacks/result.hpp"
#include "advbench/losses.hpp"
#include "advbench/model.hpp"

namespace advbench {

struct SmaConfig {
    int target = -1;          // adversarial class; must differ from the current label
    double theta_step = 0.2;  // per-step pixel increase, clipped at 1
    double gamma = 0.10;      // max fraction of pixels that may be modified
    bool pair_mode = false;   // perturb saliency-best pairs instead of single pixels

    void validate(std::size_t n_classes) const {
        require(target >= 0 && static_cast<std::size_t>(target) < n_classes,
                "sma: target class out of range");
        require(theta_step > 0.0, "sma: theta_step must be > 0");
        require(gamma > 0.0 && gamma <= 1.0, "sma: gamma must be in (0,1]");
    }
};

/// Saliency map attack (increasing-pixel JSMA). Per iteration the saliency
///   S[i] = 0                      if dz_t/dx_i < 0 or sum_{j!=t} dz_j/dx_i > 0
///        = dz_t/dx_i * |sum_{j!=t} dz_j/dx_i|   otherwise
/// is maximized over non-saturated pixels, which are pushed up by theta_step
/// until the target label is reached, saliency dies out, or the modified-pixel
/// budget gamma*N is exhausted.
inline AttackResult sma(const Model& model, const Tensor& x, const SmaConfig& cfg) {
    const std::size_t C = model.n_classes();
    cfg.validate(C);
    detail::check_unit_box(x, "sma");

    AttackResult res;
    res.x_adv = x;

    const std::size_t N = x.numel();
    const std::size_t budget = static_cast<std::size_t>(std::ceil(cfg.gamma * static_cast<double>(N)));
    std::vector<char> modified(N, 0);
    std::size_t n_modified = 0;

    if (argmax_label(model.forward(res.x_adv)) == cfg.target) {
        res.success = true;  // nothing to do
        detail::finalize_attack_result(res, x);
        return res;
    }

    // each iteration raises some pixel by theta (or clips it to 1), so the
    // loop is bounded by budget * ceil(1/theta) steps
    const int hard_cap = static_cast<int>(budget * (static_cast<std::size_t>(std::ceil(1.0 / cfg.theta_step)) + 1) + 1);

    for (int iter = 0; iter < hard_cap; ++iter) {
        // per-pixel target gradient and other-class gradient sum
        std::vector<double> alpha(N), beta(N);
        {
            Tensor gt;
            Tensor gsum = Tensor::zeros(x.shape);
            for (std::size_t j = 0; j < C; ++j) {
                Tensor g = grad_logit_input(model, res.x_adv, static_cast<int>(j));
                ++res.grad_calls;
                if (static_cast<int>(j) == cfg.target)
                    gt = std::move(g);
                else
                    gsum = add(gsum, g);
            }
            for (std::size_t i = 0; i < N; ++i) {
                alpha[i] = gt.data[i];
                beta[i] = gsum.data[i];
            }
        }

        auto eligible = [&](std::size_t i) {
            if (res.x_adv.data[i] >= 1.0) return false;  // saturated
            if (!modified[i] && n_modified >= budget) return false;
            return true;
        };
        auto saliency = [&](double a, double b) {
            if (a < 0.0 || b > 0.0) return 0.0;
            return a * std::fabs(b);
        };

        double best = 0.0;
        std::size_t best_i = N, best_j = N;
        if (!cfg.pair_mode) {
            for (std::size_t i = 0; i < N; ++i) {
                if (!eligible(i)) continue;
                double s = saliency(alpha[i], beta[i]);
                if (s > best) {
                    best = s;
                    best_i = i;
                }
            }
        } else {
            for (std::size_t i = 0; i < N; ++i) {
                if (!eligible(i)) continue;
                for (std::size_t j = i + 1; j < N; ++j) {
                    if (!eligible(j)) continue;
                    std::size_t fresh = (!modified[i]) + (!modified[j]);
                    if (n_modified + fresh > budget) continue;
                    double s = saliency(alpha[i] + alpha[j], beta[i] + beta[j]);
                    if (s > best) {
                        best = s;
                        best_i = i;
                        best_j = j;
                    }
                }
            }
        }

        if (best_i == N) break;  // saliency map is all zero: attack exhausted
        ++res.iterations;

        auto bump = [&](std::size_t i) {
            if (!modified[i]) {
                modified[i] = 1;
                ++n_modified;
            }
            res.x_adv.data[i] = std::min(1.0, res.x_adv.data[i] + cfg.theta_step);
        };
        bump(best_i);
        if (cfg.pair_mode && best_j != N) bump(best_j);

        if (argmax_label(model.forward(res.x_adv)) == cfg.target) break;
    }

    res.success = argmax_label(model.forward(res.x_adv)) == cfg.target;
    detail::finalize_attack_result(res, x);
    return res;
}

/// Untargeted wrapper: the target is the class with the second-highest clean
/// logit.
inline AttackResult sma_untargeted(const Model& model, const Tensor& x, SmaConfig cfg) {
    Tensor z = model.forward(x);
    int top = argmax_label(z);
    int second = -1;
    for (std::size_t c = 0; c < z.numel(); ++c) {
        if (static_cast<int>(c) == top) continue;
        if (second < 0 || z[c] > z[static_cast<std::size_t>(second)]) second = static_cast<int>(c);
    }
    cfg.target = second;
    return sma(model, x, cfg);
}

}  // namespace advbench
