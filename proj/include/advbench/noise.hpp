#pragma once

#include <cmath>
#include <cstdint>

#include "advbench/metrics.hpp"
#include "advbench/rng.hpp"
#include "advbench/tensor.hpp"

namespace advbench {

enum class NoiseKind { Gaussian, Rician };

inline const char* noise_kind_name(NoiseKind k) {
    return k == NoiseKind::Gaussian ? "gaussian" : "rician";
}

struct NoiseConfig {
    NoiseKind kind = NoiseKind::Gaussian;
    double sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const { require(sigma >= 0.0, "noise: sigma must be >= 0"); }
};

/// clip(x + n, 0, 1) with n ~ N(0, sigma^2) i.i.d.
inline Tensor gaussian_noise(const Tensor& x, const NoiseConfig& cfg) {
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, 0x6E6F6973 /* "nois" */));
    Tensor out = x;
    for (double& v : out.data) v = std::clamp(v + cfg.sigma * rng.normal(), 0.0, 1.0);
    return out;
}

/// Magnitude-MRI noise: clip(sqrt((x+n1)^2 + n2^2), 0, 1), n1,n2 ~ N(0, sigma^2).
inline Tensor rician_noise(const Tensor& x, const NoiseConfig& cfg) {
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, 0x72696369 /* "rici" */));
    Tensor out = x;
    for (double& v : out.data) {
        double n1 = cfg.sigma * rng.normal();
        double n2 = cfg.sigma * rng.normal();
        v = std::clamp(std::hypot(v + n1, n2), 0.0, 1.0);
    }
    return out;
}

inline Tensor apply_noise(const Tensor& x, const NoiseConfig& cfg) {
    return cfg.kind == NoiseKind::Gaussian ? gaussian_noise(x, cfg) : rician_noise(x, cfg);
}

struct CalibrationResult {
    NoiseConfig config;
    double achieved_ssim = 0.0;
    bool golden_section = false;  // set when the bisection premise failed
};

namespace detail {

inline double mean_noise_ssim(const Tensor& x, NoiseKind kind, double sigma,
                              std::uint64_t base_seed, int n_seeds) {
    double s = 0.0;
    for (int k = 0; k < n_seeds; ++k) {
        NoiseConfig cfg{kind, sigma, derive_seed(base_seed, static_cast<std::uint64_t>(k))};
        s += ssim(x, apply_noise(x, cfg));
    }
    return s / n_seeds;
}

}  // namespace detail

/// Finds sigma in (0, 0.5] whose noise lands at the requested SSIM, averaging
/// 5 seeds per evaluation to stabilize the search. Assumes SSIM decreases in
/// sigma; when that fails (flat images) a golden-section search on
/// |SSIM - target| takes over and the result is flagged.
inline CalibrationResult calibrate_sigma_to_ssim(const Tensor& x, NoiseKind kind,
                                                 double target_ssim, double tol = 0.005,
                                                 std::uint64_t base_seed = 0) {
    require(target_ssim > 0.0 && target_ssim < 1.0, "calibrate: target SSIM must be in (0,1)");
    require(tol > 0.0, "calibrate: tol must be > 0");
    const int n_seeds = 5;
    const double lo_sigma = 1e-4, hi_sigma = 0.5;

    auto f = [&](double sigma) { return detail::mean_noise_ssim(x, kind, sigma, base_seed, n_seeds); };

    double f_lo = f(lo_sigma), f_hi = f(hi_sigma);
    bool monotone = f_lo > f_hi;

    if (monotone) {
        if (target_ssim > f_lo || target_ssim < f_hi)
            throw Error("calibrate: target SSIM " + std::to_string(target_ssim) +
                        " unattainable; achievable band is [" + std::to_string(f_hi) + ", " +
                        std::to_string(f_lo) + "]");
        double lo = lo_sigma, hi = hi_sigma;
        double sigma = 0.5 * (lo + hi), val = 0.0;
        for (int step = 0; step < 60; ++step) {
            sigma = 0.5 * (lo + hi);
            val = f(sigma);
            if (std::fabs(val - target_ssim) <= tol) {
                CalibrationResult out;
                out.config = {kind, sigma, base_seed};
                out.achieved_ssim = val;
                return out;
            }
            (val > target_ssim ? lo : hi) = sigma;
        }
        throw Error("calibrate: no sigma within tol after 60 bisection steps; achievable band [" +
                    std::to_string(f_hi) + ", " + std::to_string(f_lo) + "], last " +
                    std::to_string(val));
    }

    // golden-section on |ssim - target|
    const double gr = 0.6180339887498949;
    double a = lo_sigma, b = hi_sigma;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = std::fabs(f(c) - target_ssim), fd = std::fabs(f(d) - target_ssim);
    for (int step = 0; step < 60; ++step) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = std::fabs(f(c) - target_ssim);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = std::fabs(f(d) - target_ssim);
        }
    }
    double sigma = 0.5 * (a + b);
    double val = f(sigma);
    if (std::fabs(val - target_ssim) > tol)
        throw Error("calibrate: target SSIM " + std::to_string(target_ssim) +
                    " unattainable (non-monotone case); closest achieved " + std::to_string(val));
    CalibrationResult out;
    out.config = {kind, sigma, base_seed};
    out.achieved_ssim = val;
    out.golden_section = true;
    return out;
}

}  // namespace advbench
