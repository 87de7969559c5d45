#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "advbench/model.hpp"
#include "advbench/tensor.hpp"

namespace advbench {

/// Softmax over the class axis (last axis for [H,W,C], the whole vector for
/// rank 1), computed with max subtraction.
inline Tensor softmax(const Tensor& z) {
    require(z.rank() == 1 || z.rank() == 3, "softmax: expected [C] or [H,W,C]");
    Tensor p = z;
    std::size_t C = z.shape.back();
    std::size_t groups = z.numel() / C;
    for (std::size_t g = 0; g < groups; ++g) {
        double* row = &p.data[g * C];
        double m = row[0];
        for (std::size_t c = 1; c < C; ++c) m = std::max(m, row[c]);
        double s = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            row[c] = std::exp(row[c] - m);
            s += row[c];
        }
        for (std::size_t c = 0; c < C; ++c) row[c] /= s;
    }
    return p;
}

enum class LossKind { WeightedXent, Dice, Composite };

struct LossSpec {
    LossKind kind = LossKind::WeightedXent;
    std::vector<double> class_weights;  // empty = uniform
    double dice_lambda = 0.0;           // composite: lambda*dice + (1-lambda)*xent

    static LossSpec xent(std::vector<double> weights = {}) {
        return {LossKind::WeightedXent, std::move(weights), 0.0};
    }
    static LossSpec dice() { return {LossKind::Dice, {}, 0.0}; }
    static LossSpec composite(double lambda, std::vector<double> weights = {}) {
        require(lambda >= 0.0 && lambda <= 1.0, "composite loss: lambda must be in [0,1]");
        return {LossKind::Composite, std::move(weights), lambda};
    }
};

struct LossEval {
    double value = 0.0;
    Tensor d_logits;
};

namespace detail {

inline double class_weight(const std::vector<double>& w, int c) {
    return w.empty() ? 1.0 : w[static_cast<std::size_t>(c)];
}

inline void check_xent_args(const Tensor& z, const LabelMap& y, const std::vector<double>& w) {
    std::size_t C = z.shape.back();
    require(z.numel() / C == y.numel(),
            "cross-entropy: logits cover " + std::to_string(z.numel() / C) +
                " samples but labels cover " + std::to_string(y.numel()));
    require(w.empty() || w.size() == C, "cross-entropy: weight count must equal class count");
    y.check_classes(static_cast<int>(C));
}

}  // namespace detail

/// Mean over samples/pixels of w_y * (-log softmax(z)_y).
inline LossEval weighted_xent_with_grad(const Tensor& z, const LabelMap& y,
                                        const std::vector<double>& weights = {}) {
    detail::check_xent_args(z, y, weights);
    std::size_t C = z.shape.back();
    std::size_t N = y.numel();
    Tensor p = softmax(z);
    LossEval out;
    out.d_logits = Tensor::zeros(z.shape);
    double inv_n = 1.0 / static_cast<double>(N);
    double total = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        int yc = y.data[n];
        double w = detail::class_weight(weights, yc);
        const double* pr = &p.data[n * C];
        // -log(p_y) = log-sum-exp(z) - z_y, with the max element split out so
        // tiny losses keep full precision
        std::size_t mi = 0;
        for (std::size_t c = 1; c < C; ++c)
            if (z.data[n * C + c] > z.data[n * C + mi]) mi = c;
        double m = z.data[n * C + mi];
        double rest = 0.0;
        for (std::size_t c = 0; c < C; ++c)
            if (c != mi) rest += std::exp(z.data[n * C + c] - m);
        total += w * ((m - z.data[n * C + static_cast<std::size_t>(yc)]) + std::log1p(rest));
        for (std::size_t c = 0; c < C; ++c) {
            double g = pr[c] - (static_cast<int>(c) == yc ? 1.0 : 0.0);
            out.d_logits.data[n * C + c] = w * g * inv_n;
        }
    }
    out.value = total * inv_n;
    return out;
}

inline double loss_weighted_xent(const Tensor& z, const LabelMap& y,
                                 const std::vector<double>& weights = {}) {
    return weighted_xent_with_grad(z, y, weights).value;
}

inline constexpr double kDiceSmooth = 1e-6;

/// Soft Dice loss: 1 - mean over classes of (2*sum(p_c * 1[y=c]) + s) /
/// (sum(p_c) + |y=c| + s) on softmax probabilities.
inline LossEval dice_with_grad(const Tensor& z, const LabelMap& y) {
    require(z.rank() == 3, "dice loss: expected per-pixel [H,W,C] logits");
    std::size_t C = z.shape.back();
    std::size_t N = y.numel();
    require(z.numel() / C == N, "dice loss: logits/labels pixel count mismatch");
    y.check_classes(static_cast<int>(C));

    Tensor p = softmax(z);
    std::vector<double> inter(C, 0.0), psum(C, 0.0), ysum(C, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        int yc = y.data[n];
        ysum[static_cast<std::size_t>(yc)] += 1.0;
        for (std::size_t c = 0; c < C; ++c) {
            double pv = p.data[n * C + c];
            psum[c] += pv;
            if (static_cast<int>(c) == yc) inter[c] += pv;
        }
    }

    LossEval out;
    double dice_sum = 0.0;
    std::vector<double> num(C), den(C);
    for (std::size_t c = 0; c < C; ++c) {
        num[c] = 2.0 * inter[c] + kDiceSmooth;
        den[c] = psum[c] + ysum[c] + kDiceSmooth;
        dice_sum += num[c] / den[c];
    }
    out.value = 1.0 - dice_sum / static_cast<double>(C);

    // d(loss)/d(p_c(n)) then chain through softmax per pixel
    out.d_logits = Tensor::zeros(z.shape);
    double invC = 1.0 / static_cast<double>(C);
    for (std::size_t n = 0; n < N; ++n) {
        int yc = y.data[n];
        double dp[64];  // C is small at desk scale
        require(C <= 64, "dice loss: class count too large");
        for (std::size_t c = 0; c < C; ++c) {
            double hit = (static_cast<int>(c) == yc) ? 1.0 : 0.0;
            double ddice = (2.0 * hit * den[c] - num[c]) / (den[c] * den[c]);
            dp[c] = -invC * ddice;
        }
        const double* pr = &p.data[n * C];
        double inner = 0.0;
        for (std::size_t c = 0; c < C; ++c) inner += dp[c] * pr[c];
        for (std::size_t c = 0; c < C; ++c)
            out.d_logits.data[n * C + c] = pr[c] * (dp[c] - inner);
    }
    return out;
}

inline double loss_dice(const Tensor& z, const LabelMap& y) { return dice_with_grad(z, y).value; }

inline LossEval eval_loss_with_grad(const Tensor& z, const LabelMap& y, const LossSpec& spec) {
    switch (spec.kind) {
        case LossKind::WeightedXent:
            return weighted_xent_with_grad(z, y, spec.class_weights);
        case LossKind::Dice:
            return dice_with_grad(z, y);
        case LossKind::Composite: {
            LossEval xe = weighted_xent_with_grad(z, y, spec.class_weights);
            if (spec.dice_lambda == 0.0) return xe;
            LossEval di = dice_with_grad(z, y);
            LossEval out;
            double l = spec.dice_lambda;
            out.value = l * di.value + (1.0 - l) * xe.value;
            out.d_logits = add(scale(std::move(di.d_logits), l), scale(std::move(xe.d_logits), 1.0 - l));
            return out;
        }
    }
    throw Error("eval_loss_with_grad: bad loss kind");
}

inline double eval_loss(const Tensor& z, const LabelMap& y, const LossSpec& spec) {
    return eval_loss_with_grad(z, y, spec).value;
}

/// Gradient of the scalar loss w.r.t. every input element.
inline Tensor grad_input(const Model& model, const Tensor& x, const LabelMap& y,
                         const LossSpec& loss) {
    require(!model.spec().layers.empty() || model.spec().head.n_classes > 0,
            "grad_input: model is empty");
    ForwardTrace tr = model.trace(x);
    LossEval le = eval_loss_with_grad(tr.logits, y, loss);
    return model.backward(tr, le.d_logits).d_input;
}

/// Gradient of one logit z_c (at pixel t for segmentation heads) w.r.t. x.
/// pixel = (row * W + col) flat index; pass npos for classification heads.
inline constexpr std::size_t no_pixel = static_cast<std::size_t>(-1);

inline Tensor grad_logit_input(const Model& model, const Tensor& x, int c,
                               std::size_t pixel = no_pixel) {
    ForwardTrace tr = model.trace(x);
    const Tensor& z = tr.logits;
    std::size_t C = z.shape.back();
    require(c >= 0 && static_cast<std::size_t>(c) < C, "grad_logit_input: class out of range");
    Tensor seed = Tensor::zeros(z.shape);
    if (z.rank() == 1) {
        seed[static_cast<std::size_t>(c)] = 1.0;
    } else {
        std::size_t n_pixels = z.numel() / C;
        require(pixel != no_pixel && pixel < n_pixels, "grad_logit_input: pixel out of range");
        seed.data[pixel * C + static_cast<std::size_t>(c)] = 1.0;
    }
    return model.backward(tr, seed).d_input;
}

}  // namespace advbench
