#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "advbench/data.hpp"
#include "advbench/losses.hpp"
#include "advbench/model.hpp"
#include "advbench/rng.hpp"

namespace advbench {

enum class Optimizer { SgdMomentum, Adam };

inline const char* optimizer_name(Optimizer o) {
    return o == Optimizer::SgdMomentum ? "sgd-momentum" : "adam";
}

inline Optimizer optimizer_from_name(const std::string& s) {
    if (s == "sgd-momentum") return Optimizer::SgdMomentum;
    if (s == "adam") return Optimizer::Adam;
    throw Error("unknown optimizer '" + s + "'");
}

struct TrainConfig {
    Optimizer optimizer = Optimizer::SgdMomentum;
    double lr = 0.01;
    double momentum = 0.9;
    double lr_decay = 0.95;  // multiplied in after each epoch
    int epochs = 30;
    std::size_t batch_size = 16;
    std::vector<double> class_weights;  // empty = uniform
    double dice_lambda = 0.0;           // composite loss mix, 0 = pure cross-entropy
    double weight_decay = 0.0;
    bool augment_flips = false;
    std::uint64_t seed = 0;

    void validate() const {
        require(lr > 0.0, "train config: learning rate must be > 0");
        require(dice_lambda >= 0.0 && dice_lambda <= 1.0, "train config: dice lambda must be in [0,1]");
        require(epochs >= 0, "train config: negative epoch count");
        require(batch_size >= 1, "train config: batch size must be >= 1");
        require(lr_decay > 0.0, "train config: lr decay must be > 0");
    }

    LossSpec loss_spec() const {
        if (dice_lambda > 0.0) return LossSpec::composite(dice_lambda, class_weights);
        return LossSpec::xent(class_weights);
    }
};

struct TrainResult {
    Model model;
    std::vector<double> epoch_loss;
};

namespace detail {

inline Tensor flip_image(const Tensor& img, bool horizontal, bool vertical) {
    if (!horizontal && !vertical) return img;
    std::size_t H = img.shape[0], W = img.shape[1], C = img.rank() == 3 ? img.shape[2] : 1;
    Tensor out = img;
    for (std::size_t r = 0; r < H; ++r)
        for (std::size_t c = 0; c < W; ++c) {
            std::size_t sr = vertical ? H - 1 - r : r;
            std::size_t sc = horizontal ? W - 1 - c : c;
            for (std::size_t ch = 0; ch < C; ++ch)
                out.data[(r * W + c) * C + ch] = img.data[(sr * W + sc) * C + ch];
        }
    return out;
}

inline LabelMap flip_labels(const LabelMap& m, bool horizontal, bool vertical) {
    if (m.shape.size() != 2 || (!horizontal && !vertical)) return m;
    std::size_t H = m.shape[0], W = m.shape[1];
    LabelMap out = m;
    for (std::size_t r = 0; r < H; ++r)
        for (std::size_t c = 0; c < W; ++c) {
            std::size_t sr = vertical ? H - 1 - r : r;
            std::size_t sc = horizontal ? W - 1 - c : c;
            out.data[r * W + c] = m.data[sr * W + sc];
        }
    return out;
}

struct AdamState {
    std::map<std::string, Tensor> m, v;
    std::int64_t t = 0;
};

}  // namespace detail

/// Trains a copy of the model on `samples`. Deterministic given cfg.seed:
/// two runs with the same inputs produce bit-identical parameters.
/// Throws when training diverges (non-finite loss), naming the epoch.
inline TrainResult train(const Model& initial, const std::vector<Sample>& samples,
                         const TrainConfig& cfg) {
    cfg.validate();
    require(!samples.empty(), "train: empty dataset");

    TrainResult result;
    result.model = initial;
    Model& model = result.model;
    LossSpec loss = cfg.loss_spec();

    std::map<std::string, Tensor> velocity;
    detail::AdamState adam;
    for (const auto& [name, p] : model.params()) {
        velocity.emplace(name, Tensor::zeros(p.shape));
        adam.m.emplace(name, Tensor::zeros(p.shape));
        adam.v.emplace(name, Tensor::zeros(p.shape));
    }

    double lr = cfg.lr;
    Rng rng(derive_seed(cfg.seed, 0x74726169 /* "trai" */));
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::map<std::string, Tensor> grad_acc;
            for (const auto& [name, p] : model.params()) grad_acc.emplace(name, Tensor::zeros(p.shape));
            double batch_loss = 0.0;

            for (std::size_t k = start; k < end; ++k) {
                const Sample& s = samples[order[k]];
                Tensor img = s.image;
                LabelMap lab = s.label;
                if (cfg.augment_flips && img.rank() >= 2) {
                    bool h = rng.uniform01() < 0.5;
                    bool v = rng.uniform01() < 0.5;
                    img = detail::flip_image(img, h, v);
                    lab = detail::flip_labels(lab, h, v);
                }
                try {
                    ForwardTrace tr = model.trace(img);
                    LossEval le = eval_loss_with_grad(tr.logits, lab, loss);
                    batch_loss += le.value;
                    Gradients g = model.backward(tr, le.d_logits);
                    for (auto& [name, acc] : grad_acc) {
                        const Tensor& dp = g.d_params.at(name);
                        for (std::size_t i = 0; i < acc.numel(); ++i) acc.data[i] += dp.data[i];
                    }
                } catch (const Error& e) {
                    // non-finite values surfacing mid-epoch are a divergence
                    if (std::string(e.what()).find("non-finite") != std::string::npos)
                        throw Error("training diverged at epoch " + std::to_string(epoch) + " (" +
                                    e.what() + ")");
                    throw;
                }
            }

            double inv_b = 1.0 / static_cast<double>(end - start);
            batch_loss *= inv_b;
            epoch_loss += batch_loss;
            ++n_batches;
            if (!std::isfinite(batch_loss))
                throw Error("training diverged at epoch " + std::to_string(epoch) +
                            " (non-finite loss)");

            if (cfg.optimizer == Optimizer::SgdMomentum) {
                for (auto& [name, p] : model.params()) {
                    Tensor& vel = velocity.at(name);
                    const Tensor& acc = grad_acc.at(name);
                    for (std::size_t i = 0; i < p.numel(); ++i) {
                        double g = acc.data[i] * inv_b + cfg.weight_decay * p.data[i];
                        vel.data[i] = cfg.momentum * vel.data[i] - lr * g;
                        p.data[i] += vel.data[i];
                    }
                }
            } else {
                ++adam.t;
                const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
                double bc1 = 1.0 - std::pow(b1, static_cast<double>(adam.t));
                double bc2 = 1.0 - std::pow(b2, static_cast<double>(adam.t));
                for (auto& [name, p] : model.params()) {
                    Tensor& m1 = adam.m.at(name);
                    Tensor& m2 = adam.v.at(name);
                    const Tensor& acc = grad_acc.at(name);
                    for (std::size_t i = 0; i < p.numel(); ++i) {
                        double g = acc.data[i] * inv_b + cfg.weight_decay * p.data[i];
                        m1.data[i] = b1 * m1.data[i] + (1.0 - b1) * g;
                        m2.data[i] = b2 * m2.data[i] + (1.0 - b2) * g * g;
                        p.data[i] -= lr * (m1.data[i] / bc1) / (std::sqrt(m2.data[i] / bc2) + eps);
                    }
                }
            }

            for (const auto& [name, p] : model.params())
                if (!p.all_finite())
                    throw Error("training diverged at epoch " + std::to_string(epoch) +
                                " (non-finite parameter " + name + ")");
        }

        epoch_loss /= static_cast<double>(n_batches);
        result.epoch_loss.push_back(epoch_loss);
        lr *= cfg.lr_decay;
    }
    return result;
}

inline double eval_accuracy_on(const Model& m, const std::vector<Sample>& samples) {
    require(!samples.empty(), "eval_accuracy_on: empty sample set");
    std::size_t hits = 0;
    for (const Sample& s : samples)
        if (predict(m, s.image) == s.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace advbench
