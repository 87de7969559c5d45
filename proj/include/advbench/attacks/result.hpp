#pragma once

#include <cmath>
#include <limits>

#include "advbench/metrics.hpp"
#include "advbench/model.hpp"
#include "advbench/tensor.hpp"

namespace advbench {

/// Outcome of one attack on one image. The identity x_adv = x + r holds
/// exactly: r is recomputed as x_adv - x after the final clipping. ssim is
/// NaN when the input is too small for the 11x11 SSIM window.
struct AttackResult {
    Tensor x_adv;
    Tensor r;
    bool success = false;
    int iterations = 0;
    int grad_calls = 0;
    double mse = 0.0;
    double ssim = std::numeric_limits<double>::quiet_NaN();
    double linf = 0.0;
};

namespace detail {

inline bool ssim_computable(const Tensor& x) {
    return (x.rank() == 2 || x.rank() == 3) && x.shape[0] >= 11 && x.shape[1] >= 11;
}

inline void finalize_attack_result(AttackResult& res, const Tensor& x) {
    // r is recomputed from the clipped x_adv, then x_adv is redefined as
    // x + r so the identity holds bitwise; when that rounding leaves the unit
    // box by an ulp, r is nudged toward zero until it fits.
    res.r = Tensor::zeros(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        double r = res.x_adv.data[i] - x.data[i];
        double xa = x.data[i] + r;
        while (xa > 1.0) {
            r = std::nextafter(r, -1.0e308);
            xa = x.data[i] + r;
        }
        while (xa < 0.0) {
            r = std::nextafter(r, 1.0e308);
            xa = x.data[i] + r;
        }
        res.r.data[i] = r;
        res.x_adv.data[i] = xa;
    }
    res.mse = mse(x, res.x_adv);
    res.linf = linf_norm(res.r);
    if (ssim_computable(x)) res.ssim = advbench::ssim(x, res.x_adv);
}

inline void check_unit_box(const Tensor& x, const char* who) {
    for (double v : x.data)
        require(v >= 0.0 && v <= 1.0, std::string(who) + ": input image must lie in [0,1]");
}

}  // namespace detail

}  // namespace advbench
