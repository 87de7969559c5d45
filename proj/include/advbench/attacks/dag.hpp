#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advbench/attacks/result.hpp"
#include "advbench/losses.hpp"
#include "advbench/model.hpp"
#include "advbench/rng.hpp"
#include "advbench/strfmt.hpp"

namespace advbench {

enum class DagTargetKind { A, B, C };

inline const char* dag_kind_name(DagTargetKind k) {
    switch (k) {
        case DagTargetKind::A: return "A";
        case DagTargetKind::B: return "B";
        case DagTargetKind::C: return "C";
    }
    return "?";
}

/// Adversarial label map Y' plus the pixel set T the attack may perturb.
/// Construction guarantees y_adv != y on every pixel of T.
struct DagTarget {
    LabelMap y_adv;
    std::vector<std::size_t> target_pixels;  // flat row-major pixel indices
    DagTargetKind kind = DagTargetKind::A;

    void check_against(const LabelMap& y) const {
        require(y_adv.shape == y.shape, "dag target: shape mismatch with ground truth");
        for (std::size_t t : target_pixels) {
            require(t < y.numel(), "dag target: pixel index out of range");
            require(y_adv.data[t] != y.data[t], "dag target: y_adv equals y on a target pixel");
        }
    }
};

struct DagConfig {
    int max_iter = 200;
    double gamma = 0.5;        // L-inf norm of each applied step
    int background = 0;
    bool mask_to_target = false;  // optionally restrict r_m spatially to T

    void validate() const {
        require(max_iter >= 1, "dag: max_iter must be >= 1");
        require(gamma > 0.0, "dag: gamma must be > 0");
    }
};

/// Type A: everything becomes background; T is the foreground support.
inline DagTarget target_type_a(const LabelMap& y, int background = 0) {
    DagTarget t;
    t.kind = DagTargetKind::A;
    t.y_adv = LabelMap(y.shape, std::vector<int>(y.numel(), background));
    for (std::size_t i = 0; i < y.numel(); ++i)
        if (y.data[i] != background) t.target_pixels.push_back(i);
    require(!t.target_pixels.empty(), "dag type A: empty target set (mask is all background)");
    return t;
}

/// Type B: a random fraction of pixels is retargeted to a random other class.
inline DagTarget target_type_b(const LabelMap& y, double fraction, int n_classes,
                               std::uint64_t seed) {
    require(fraction > 0.0 && fraction <= 1.0, "dag type B: fraction must be in (0,1]");
    require(n_classes >= 2, "dag type B: need at least 2 classes");
    DagTarget t;
    t.kind = DagTargetKind::B;
    t.y_adv = y;
    std::size_t n = y.numel();
    std::size_t k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    Rng rng(derive_seed(seed, 0xDA6B));
    t.target_pixels = rng.sample_without_replacement(n, k);
    std::sort(t.target_pixels.begin(), t.target_pixels.end());
    for (std::size_t p : t.target_pixels) {
        int cur = y.data[p];
        int pick = static_cast<int>(rng.below(static_cast<std::size_t>(n_classes - 1)));
        if (pick >= cur) ++pick;  // uniform over classes != cur
        t.y_adv.data[p] = pick;
    }
    return t;
}

/// Type C: dilate one class with a square structuring element of side
/// 2*radius+1; the newly covered pixels are retargeted to the victim class.
inline DagTarget target_type_c(const LabelMap& y, int victim_class, int radius) {
    require(radius >= 1, "dag type C: radius must be >= 1");
    require(y.shape.size() == 2, "dag type C: expected a 2-D label map");
    bool present = false;
    for (int v : y.data) present |= (v == victim_class);
    require(present, "dag type C: victim class " + std::to_string(victim_class) + " absent from mask");

    std::size_t H = y.shape[0], W = y.shape[1];
    DagTarget t;
    t.kind = DagTargetKind::C;
    t.y_adv = y;
    for (std::size_t r = 0; r < H; ++r)
        for (std::size_t c = 0; c < W; ++c) {
            if (y.data[r * W + c] == victim_class) continue;
            bool near = false;
            for (int dr = -radius; dr <= radius && !near; ++dr)
                for (int dc = -radius; dc <= radius && !near; ++dc) {
                    std::ptrdiff_t rr = static_cast<std::ptrdiff_t>(r) + dr;
                    std::ptrdiff_t cc = static_cast<std::ptrdiff_t>(c) + dc;
                    if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(H) ||
                        cc >= static_cast<std::ptrdiff_t>(W))
                        continue;
                    near = y.data[static_cast<std::size_t>(rr) * W + static_cast<std::size_t>(cc)] ==
                           victim_class;
                }
            if (near) {
                t.y_adv.data[r * W + c] = victim_class;
                t.target_pixels.push_back(r * W + c);
            }
        }
    return t;
}

/// Sum over target pixels of (true-class logit - target-class logit).
inline double dag_loss(const Tensor& z, const LabelMap& y, const LabelMap& y_adv,
                       const std::vector<std::size_t>& target_pixels) {
    require(z.rank() == 3, "dag_loss: expected [H,W,C] logits");
    require(!target_pixels.empty(), "dag_loss: empty target set");
    std::size_t C = z.shape[2];
    double s = 0.0;
    for (std::size_t t : target_pixels)
        s += z.data[t * C + static_cast<std::size_t>(y.data[t])] -
             z.data[t * C + static_cast<std::size_t>(y_adv.data[t])];
    return s;
}

struct DagTraceRow {
    int iteration = 0;
    std::size_t active = 0;  // |T_m|
    double loss = 0.0;
    double linf = 0.0;
    double mse = 0.0;
};

struct DagResult {
    AttackResult result;
    std::vector<DagTraceRow> trace;
    std::string stop_reason;  // "converged", "max_iter", "vanishing gradient"
};

/// Dense adversary generation. Per iteration the active set T_m holds the
/// target pixels not yet predicted as their adversarial class; one backward
/// pass on sum_{T_m}(z_{y'} - z_y) yields r_m, which is L-inf normalized to
/// gamma, applied, and clipped to the unit box.
inline DagResult dag_attack(const Model& model, const Tensor& x, const LabelMap& y,
                            const DagTarget& target, const DagConfig& cfg) {
    cfg.validate();
    target.check_against(y);
    detail::check_unit_box(x, "dag_attack");
    require(model.spec().head.kind == HeadKind::Segmentation, "dag_attack: segmentation head required");

    DagResult out;
    AttackResult& res = out.result;
    res.x_adv = x;
    const std::size_t C = model.n_classes();

    std::vector<std::size_t> active;
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        ForwardTrace tr = model.trace(res.x_adv);
        const Tensor& z = tr.logits;

        active.clear();
        for (std::size_t t : target.target_pixels) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < C; ++c)
                if (z.data[t * C + c] > z.data[t * C + best]) best = c;
            if (static_cast<int>(best) != target.y_adv.data[t]) active.push_back(t);
        }
        if (active.empty()) {
            out.stop_reason = "converged";
            break;
        }
        ++res.iterations;

        // r_m = sum over active pixels of (grad z_{y'} - grad z_y), taken in
        // one backward pass with a +/-1 seed on the logits
        Tensor seed = Tensor::zeros(z.shape);
        for (std::size_t t : active) {
            seed.data[t * C + static_cast<std::size_t>(target.y_adv.data[t])] += 1.0;
            seed.data[t * C + static_cast<std::size_t>(y.data[t])] -= 1.0;
        }
        Tensor r_m = model.backward(tr, seed).d_input;
        ++res.grad_calls;

        if (cfg.mask_to_target) {
            std::vector<char> keep(y.numel(), 0);
            for (std::size_t t : target.target_pixels) keep[t] = 1;
            std::size_t channels = x.numel() / y.numel();
            for (std::size_t p = 0; p < y.numel(); ++p)
                if (!keep[p])
                    for (std::size_t c = 0; c < channels; ++c) r_m.data[p * channels + c] = 0.0;
        }

        double norm = linf_norm(r_m);
        DagTraceRow row;
        row.iteration = iter;
        row.active = active.size();
        row.loss = dag_loss(z, y, target.y_adv, target.target_pixels);

        if (norm < 1e-12) {
            out.stop_reason = "vanishing gradient";
            out.trace.push_back(row);
            break;
        }

        double k = cfg.gamma / norm;
        for (std::size_t i = 0; i < x.numel(); ++i)
            res.x_adv.data[i] = std::clamp(res.x_adv.data[i] + k * r_m.data[i], 0.0, 1.0);

        row.linf = linf_norm(sub(res.x_adv, x));
        row.mse = mse(x, res.x_adv);
        out.trace.push_back(row);
    }

    if (out.stop_reason.empty()) out.stop_reason = active.empty() ? "converged" : "max_iter";
    res.success = out.stop_reason == "converged";
    detail::finalize_attack_result(res, x);
    return out;
}

/// Per-iteration trace as CSV (iteration, |T_m|, dag_loss, linf, mse).
inline std::string dag_trace_csv(const DagResult& r) {
    std::string out = "iteration,active,dag_loss,linf,mse\n";
    for (const DagTraceRow& row : r.trace) {
        out += std::to_string(row.iteration) + "," + std::to_string(row.active) + "," +
               double_str(row.loss) + "," + double_str(row.linf) + "," + double_str(row.mse) + "\n";
    }
    return out;
}

}  // namespace advbench
