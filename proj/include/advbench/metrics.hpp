#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "advbench/tensor.hpp"

namespace advbench {

inline double accuracy(const std::vector<LabelMap>& preds, const std::vector<LabelMap>& truths) {
    require(preds.size() == truths.size(), "accuracy: sequence length mismatch");
    require(!preds.empty(), "accuracy: empty sequences");
    std::size_t hits = 0, total = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        require(preds[i].shape == truths[i].shape, "accuracy: label map shape mismatch");
        for (std::size_t k = 0; k < preds[i].numel(); ++k) {
            hits += preds[i].data[k] == truths[i].data[k];
            ++total;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

/// Hard Dice overlap 2|A∩B| / (|A|+|B|) for one class; 1.0 when both sides
/// are empty.
inline double dice(const LabelMap& pred, const LabelMap& truth, int cls) {
    require(pred.shape == truth.shape, "dice: shape mismatch");
    std::size_t inter = 0, a = 0, b = 0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        bool pa = pred.data[i] == cls, tb = truth.data[i] == cls;
        inter += pa && tb;
        a += pa;
        b += tb;
    }
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

/// Mean Dice across classes. Background (class 0) is excluded by default,
/// matching the "average across structures" convention.
inline double mean_dice(const LabelMap& pred, const LabelMap& truth, int n_classes,
                        bool include_background = false) {
    require(n_classes >= 2, "mean_dice: need at least 2 classes");
    double sum = 0.0;
    int count = 0;
    for (int c = include_background ? 0 : 1; c < n_classes; ++c) {
        sum += dice(pred, truth, c);
        ++count;
    }
    return sum / count;
}

inline double mse(const Tensor& x, const Tensor& y) {
    require(x.same_shape(y), "mse: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        double d = x.data[i] - y.data[i];
        s += d * d;
    }
    return s / static_cast<double>(x.numel());
}

namespace detail {

inline std::vector<double> ssim_window() {
    // 11x11 gaussian, sigma 1.5, normalized
    std::vector<double> w(11 * 11);
    double sum = 0.0;
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
            double di = i - 5.0, dj = j - 5.0;
            w[static_cast<std::size_t>(i * 11 + j)] = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
            sum += w[static_cast<std::size_t>(i * 11 + j)];
        }
    for (double& v : w) v /= sum;
    return w;
}

inline double ssim_channel(const double* x, const double* y, std::size_t H, std::size_t W,
                           std::size_t stride) {
    static const std::vector<double> win = ssim_window();
    const double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;  // dynamic range 1.0
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r + 11 <= H; ++r)
        for (std::size_t c = 0; c + 11 <= W; ++c) {
            double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
            for (std::size_t i = 0; i < 11; ++i)
                for (std::size_t j = 0; j < 11; ++j) {
                    double w = win[i * 11 + j];
                    double xv = x[((r + i) * W + (c + j)) * stride];
                    double yv = y[((r + i) * W + (c + j)) * stride];
                    mx += w * xv;
                    my += w * yv;
                    mxx += w * (xv * xv);
                    myy += w * (yv * yv);
                    mxy += w * (xv * yv);  // xv*yv first keeps the formula exactly symmetric
                }
            double vx = mxx - mx * mx, vy = myy - my * my, cov = mxy - mx * my;
            double s = ((2.0 * (mx * my) + C1) * (2 * cov + C2)) /
                       ((mx * mx + my * my + C1) * (vx + vy + C2));
            total += s;
            ++count;
        }
    return total / static_cast<double>(count);
}

}  // namespace detail

/// Mean local SSIM with an 11x11 gaussian window (sigma 1.5), K1=0.01,
/// K2=0.03, dynamic range 1. Accepts [H,W] or [H,W,C] (channels averaged).
inline double ssim(const Tensor& x, const Tensor& y) {
    require(x.same_shape(y), "ssim: shape mismatch");
    require(x.rank() == 2 || x.rank() == 3, "ssim: expected a 2-D image, got " + shape_str(x.shape));
    std::size_t H = x.shape[0], W = x.shape[1];
    require(H >= 11 && W >= 11, "ssim: image smaller than the 11x11 window");
    if (x.rank() == 2) return detail::ssim_channel(x.data.data(), y.data.data(), H, W, 1);
    std::size_t C = x.shape[2];
    double s = 0.0;
    for (std::size_t c = 0; c < C; ++c)
        s += detail::ssim_channel(x.data.data() + c, y.data.data() + c, H, W, C);
    return s / static_cast<double>(C);
}

struct RocCurve {
    std::vector<double> fpr, tpr;  // threshold sweep, both ends included
    double auc = 0.0;
};

/// ROC by threshold sweep over the score of the designated class; AUC by the
/// trapezoid rule (ties handled by grouping equal scores).
inline RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& truths) {
    require(scores.size() == truths.size(), "roc_auc: length mismatch");
    require(!scores.empty(), "roc_auc: empty input");
    std::size_t n_pos = 0, n_neg = 0;
    for (int t : truths) {
        require(t == 0 || t == 1, "roc_auc: truths must be binary");
        t ? ++n_pos : ++n_neg;
    }
    require(n_pos > 0 && n_neg > 0, "roc_auc: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    RocCurve out;
    out.fpr.push_back(0.0);
    out.tpr.push_back(0.0);
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            truths[order[i]] ? ++tp : ++fp;
            ++i;
        }
        out.fpr.push_back(static_cast<double>(fp) / static_cast<double>(n_neg));
        out.tpr.push_back(static_cast<double>(tp) / static_cast<double>(n_pos));
    }
    for (std::size_t k = 1; k < out.fpr.size(); ++k)
        out.auc += 0.5 * (out.tpr[k] + out.tpr[k - 1]) * (out.fpr[k] - out.fpr[k - 1]);
    return out;
}

/// Percentage-point drop: 100 * (clean - adversarial average).
inline double drop_points(double clean, double adv_avg) {
    require(clean >= 0.0 && clean <= 1.0 && adv_avg >= 0.0 && adv_avg <= 1.0,
            "drop_points: scores must be in [0,1]");
    return 100.0 * (clean - adv_avg);
}

struct ScoreRow {
    std::string model;
    std::string condition;  // "clean", "noisy", "attack-<name>"
    double score = 0.0;
};

/// Per-(model, condition) scores plus the drop-in-points statistic.
struct ScoreTable {
    std::vector<ScoreRow> rows;
    std::map<std::string, double> drops;  // model -> percentage points

    double row(const std::string& model, const std::string& condition) const {
        for (const auto& r : rows)
            if (r.model == model && r.condition == condition) return r.score;
        throw Error("score table: no row (" + model + ", " + condition + ")");
    }

    /// drops must equal 100*(clean - mean of adversarial rows) within 1e-9.
    void check_consistency() const {
        for (const auto& [model, d] : drops) {
            double clean = row(model, "clean");
            double sum = 0.0;
            int count = 0;
            for (const auto& r : rows)
                if (r.model == model && r.condition.rfind("attack-", 0) == 0) {
                    sum += r.score;
                    ++count;
                }
            require(count > 0, "score table: no attack rows for " + model);
            double expect = drop_points(clean, sum / count);
            require(std::fabs(expect - d) <= 1e-9,
                    "score table: inconsistent drop for " + model);
        }
    }
};

}  // namespace advbench
