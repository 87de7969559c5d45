#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "advbench/rng.hpp"
#include "advbench/tensor.hpp"

namespace advbench {

enum class LayerKind { Dense, Conv3x3, Relu, MaxPool2, Upsample2, SkipConcat };

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Dense: return "dense";
        case LayerKind::Conv3x3: return "conv3x3";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool2: return "maxpool2";
        case LayerKind::Upsample2: return "upsample2";
        case LayerKind::SkipConcat: return "skip-concat";
    }
    return "?";
}

struct LayerSpec {
    LayerKind kind{};
    std::size_t units = 0;  // dense: out features, conv: out channels
    int source = -1;        // skip-concat: producer layer index, -1 = model input
};

inline LayerSpec dense(std::size_t units) { return {LayerKind::Dense, units, -1}; }
inline LayerSpec conv3x3(std::size_t channels) { return {LayerKind::Conv3x3, channels, -1}; }
inline LayerSpec relu() { return {LayerKind::Relu, 0, -1}; }
inline LayerSpec maxpool2() { return {LayerKind::MaxPool2, 0, -1}; }
inline LayerSpec upsample2() { return {LayerKind::Upsample2, 0, -1}; }
inline LayerSpec skip_concat(int source_layer) { return {LayerKind::SkipConcat, 0, source_layer}; }

enum class HeadKind { Classification, Segmentation };

struct HeadSpec {
    HeadKind kind{HeadKind::Classification};
    std::size_t n_classes = 0;
};

struct ModelSpec {
    Shape input_shape;             // [N] or [H,W,C]
    std::vector<LayerSpec> layers;
    HeadSpec head;
};

/// Activations recorded by a forward pass; acts[0] is the input, acts[i+1]
/// the output of layer i. Needed to run the backward pass.
struct ForwardTrace {
    std::vector<Tensor> acts;
    Tensor head_pooled;  // classification head: pre-dense pooled vector
    Tensor logits;
};

struct Gradients {
    Tensor d_input;
    std::map<std::string, Tensor> d_params;
};

namespace detail {
// Backward-pass counter, used by tests to verify gradient-call bookkeeping.
inline thread_local std::uint64_t backward_pass_count = 0;
}  // namespace detail

/// Layered feed-forward network over f64 tensors. The layer graph is a chain
/// with optional skip-concat edges from earlier layers; gradients are exact
/// reverse-mode w.r.t. both parameters and the input.
class Model {
public:
    Model() = default;

    static Model init(ModelSpec spec, std::uint64_t seed) {
        Model m;
        m.spec_ = std::move(spec);
        m.seed_ = seed;
        m.infer_shapes();
        m.init_params();
        return m;
    }

    const ModelSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t n_classes() const { return spec_.head.n_classes; }
    const Shape& input_shape() const { return spec_.input_shape; }
    const Shape& output_shape() const { return output_shape_; }

    std::map<std::string, Tensor>& params() { return params_; }
    const std::map<std::string, Tensor>& params() const { return params_; }

    std::string layer_param_name(std::size_t layer, const char* which) const {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "L%02zu.%s", layer, which);
        return buf;
    }

    ForwardTrace trace(const Tensor& x) const {
        require(x.shape == spec_.input_shape,
                "forward: input shape " + shape_str(x.shape) + " does not match model input " +
                    shape_str(spec_.input_shape));
        ForwardTrace tr;
        tr.acts.reserve(spec_.layers.size() + 1);
        tr.acts.push_back(x);
        for (std::size_t i = 0; i < spec_.layers.size(); ++i)
            tr.acts.push_back(layer_forward(i, tr));
        head_forward(tr);
        check_finite(tr.logits, "forward logits");
        return tr;
    }

    Tensor forward(const Tensor& x) const { return trace(x).logits; }

    /// Input to the head, flattened. The penultimate activation of the net.
    Tensor embed(const Tensor& x) const {
        require(!spec_.layers.empty(), "embed: model needs at least one layer before the head");
        ForwardTrace tr = trace(x);
        return flatten(tr.acts.back());
    }

    /// Reverse-mode pass from d(loss)/d(logits); returns gradients w.r.t.
    /// the input and every parameter.
    Gradients backward(const ForwardTrace& tr, const Tensor& d_logits) const {
        ++detail::backward_pass_count;
        require(d_logits.shape == tr.logits.shape, "backward: seed gradient shape mismatch");
        Gradients g;
        for (const auto& [name, p] : params_) g.d_params.emplace(name, Tensor::zeros(p.shape));

        std::vector<Tensor> d_acts(tr.acts.size());
        for (std::size_t i = 0; i < tr.acts.size(); ++i) d_acts[i] = Tensor::zeros(tr.acts[i].shape);

        head_backward(tr, d_logits, d_acts.back(), g);
        for (std::size_t i = spec_.layers.size(); i-- > 0;)
            layer_backward(i, tr, d_acts, g);

        g.d_input = std::move(d_acts[0]);
        check_finite(g.d_input, "backward input gradient");
        return g;
    }

private:
    ModelSpec spec_;
    std::uint64_t seed_ = 0;
    std::map<std::string, Tensor> params_;
    std::vector<Shape> layer_out_shapes_;  // aligned with layers
    Shape head_in_shape_;
    Shape output_shape_;

    const Shape& shape_of_source(int source) const {
        return source < 0 ? spec_.input_shape : layer_out_shapes_[static_cast<std::size_t>(source)];
    }

    [[noreturn]] void layer_error(std::size_t i, const std::string& msg) const {
        throw Error("layer " + std::to_string(i) + " (" + layer_kind_name(spec_.layers[i].kind) +
                    "): " + msg);
    }

    void infer_shapes() {
        require(!spec_.input_shape.empty(), "model: empty input shape");
        require(spec_.head.n_classes >= 2, "model: head needs at least 2 classes");
        layer_out_shapes_.clear();
        Shape cur = spec_.input_shape;
        for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
            const LayerSpec& L = spec_.layers[i];
            switch (L.kind) {
                case LayerKind::Dense:
                    if (L.units == 0) layer_error(i, "dense needs a positive unit count");
                    cur = {L.units};
                    break;
                case LayerKind::Conv3x3:
                    if (cur.size() != 3) layer_error(i, "conv expects [H,W,C] input, got " + shape_str(cur));
                    if (L.units == 0) layer_error(i, "conv needs a positive channel count");
                    cur = {cur[0], cur[1], L.units};
                    break;
                case LayerKind::Relu:
                    break;
                case LayerKind::MaxPool2:
                    if (cur.size() != 3) layer_error(i, "maxpool expects [H,W,C] input");
                    if (cur[0] % 2 || cur[1] % 2) layer_error(i, "maxpool needs even spatial dims, got " + shape_str(cur));
                    cur = {cur[0] / 2, cur[1] / 2, cur[2]};
                    break;
                case LayerKind::Upsample2:
                    if (cur.size() != 3) layer_error(i, "upsample expects [H,W,C] input");
                    cur = {cur[0] * 2, cur[1] * 2, cur[2]};
                    break;
                case LayerKind::SkipConcat: {
                    if (L.source >= static_cast<int>(i)) layer_error(i, "skip source must precede consumer");
                    if (L.source < -1) layer_error(i, "bad skip source");
                    Shape src = shape_of_source(L.source);
                    if (cur.size() == 3 && src.size() == 3) {
                        if (cur[0] != src[0] || cur[1] != src[1])
                            layer_error(i, "skip source spatial dims " + shape_str(src) +
                                               " do not match " + shape_str(cur));
                        cur = {cur[0], cur[1], cur[2] + src[2]};
                    } else if (cur.size() == 1 && src.size() == 1) {
                        cur = {cur[0] + src[0]};
                    } else {
                        layer_error(i, "skip-concat rank mismatch");
                    }
                    break;
                }
            }
            layer_out_shapes_.push_back(cur);
        }
        head_in_shape_ = cur;
        if (spec_.head.kind == HeadKind::Segmentation) {
            require(head_in_shape_.size() == 3, "segmentation head expects [H,W,C] body output");
            output_shape_ = {head_in_shape_[0], head_in_shape_[1], spec_.head.n_classes};
        } else {
            output_shape_ = {spec_.head.n_classes};
        }
    }

    static void glorot_fill(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
        double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& v : w.data) v = rng.uniform(-s, s);
    }

    void init_params() {
        Rng rng(derive_seed(seed_, 0x70617261 /* "para" */));
        params_.clear();
        Shape cur = spec_.input_shape;
        for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
            const LayerSpec& L = spec_.layers[i];
            if (L.kind == LayerKind::Dense) {
                std::size_t in = shape_numel(cur);
                Tensor w = Tensor::zeros({L.units, in});
                glorot_fill(w, in, L.units, rng);
                params_.emplace(layer_param_name(i, "weight"), std::move(w));
                params_.emplace(layer_param_name(i, "bias"), Tensor::zeros({L.units}));
            } else if (L.kind == LayerKind::Conv3x3) {
                std::size_t cin = cur[2];
                Tensor w = Tensor::zeros({3, 3, cin, L.units});
                glorot_fill(w, 9 * cin, 9 * L.units, rng);
                params_.emplace(layer_param_name(i, "weight"), std::move(w));
                params_.emplace(layer_param_name(i, "bias"), Tensor::zeros({L.units}));
            }
            cur = layer_out_shapes_[i];
        }
        if (spec_.head.kind == HeadKind::Classification) {
            std::size_t in = head_in_shape_.size() == 3 ? head_in_shape_[2] : shape_numel(head_in_shape_);
            Tensor w = Tensor::zeros({spec_.head.n_classes, in});
            glorot_fill(w, in, spec_.head.n_classes, rng);
            params_.emplace("head.weight", std::move(w));
            params_.emplace("head.bias", Tensor::zeros({spec_.head.n_classes}));
        } else {
            std::size_t cin = head_in_shape_[2];
            Tensor w = Tensor::zeros({cin, spec_.head.n_classes});
            glorot_fill(w, cin, spec_.head.n_classes, rng);
            params_.emplace("head.weight", std::move(w));
            params_.emplace("head.bias", Tensor::zeros({spec_.head.n_classes}));
        }
    }

    const Tensor& param(const std::string& name) const { return params_.at(name); }

    Tensor layer_forward(std::size_t i, const ForwardTrace& tr) const {
        const LayerSpec& L = spec_.layers[i];
        const Tensor& x = tr.acts[i];
        switch (L.kind) {
            case LayerKind::Dense: {
                const Tensor& w = param(layer_param_name(i, "weight"));
                const Tensor& b = param(layer_param_name(i, "bias"));
                std::size_t in = w.shape[1], out = w.shape[0];
                if (x.numel() != in) layer_error(i, "dense expects " + std::to_string(in) + " inputs, got " + std::to_string(x.numel()));
                Tensor y = Tensor::zeros({out});
                for (std::size_t o = 0; o < out; ++o) {
                    double s = b[o];
                    const double* wr = &w.data[o * in];
                    for (std::size_t k = 0; k < in; ++k) s += wr[k] * x.data[k];
                    y[o] = s;
                }
                return y;
            }
            case LayerKind::Conv3x3:
                return conv_forward(x, param(layer_param_name(i, "weight")), param(layer_param_name(i, "bias")));
            case LayerKind::Relu: {
                Tensor y = x;
                for (double& v : y.data) v = v > 0.0 ? v : 0.0;
                return y;
            }
            case LayerKind::MaxPool2: {
                std::size_t H = x.shape[0], W = x.shape[1], C = x.shape[2];
                Tensor y = Tensor::zeros({H / 2, W / 2, C});
                for (std::size_t i2 = 0; i2 < H / 2; ++i2)
                    for (std::size_t j2 = 0; j2 < W / 2; ++j2)
                        for (std::size_t c = 0; c < C; ++c) {
                            double m = x.at3(2 * i2, 2 * j2, c);
                            m = std::max(m, x.at3(2 * i2, 2 * j2 + 1, c));
                            m = std::max(m, x.at3(2 * i2 + 1, 2 * j2, c));
                            m = std::max(m, x.at3(2 * i2 + 1, 2 * j2 + 1, c));
                            y.at3(i2, j2, c) = m;
                        }
                return y;
            }
            case LayerKind::Upsample2: {
                std::size_t H = x.shape[0], W = x.shape[1], C = x.shape[2];
                Tensor y = Tensor::zeros({2 * H, 2 * W, C});
                for (std::size_t r = 0; r < 2 * H; ++r)
                    for (std::size_t cc = 0; cc < 2 * W; ++cc)
                        for (std::size_t c = 0; c < C; ++c)
                            y.at3(r, cc, c) = x.at3(r / 2, cc / 2, c);
                return y;
            }
            case LayerKind::SkipConcat: {
                const Tensor& src = tr.acts[static_cast<std::size_t>(L.source + 1)];
                if (x.rank() == 3) {
                    std::size_t H = x.shape[0], W = x.shape[1], C1 = x.shape[2], C2 = src.shape[2];
                    Tensor y = Tensor::zeros({H, W, C1 + C2});
                    for (std::size_t r = 0; r < H; ++r)
                        for (std::size_t cc = 0; cc < W; ++cc) {
                            for (std::size_t c = 0; c < C1; ++c) y.at3(r, cc, c) = x.at3(r, cc, c);
                            for (std::size_t c = 0; c < C2; ++c) y.at3(r, cc, C1 + c) = src.at3(r, cc, c);
                        }
                    return y;
                }
                Tensor y = Tensor::zeros({x.numel() + src.numel()});
                std::copy(x.data.begin(), x.data.end(), y.data.begin());
                std::copy(src.data.begin(), src.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(x.numel()));
                return y;
            }
        }
        layer_error(i, "unreachable");
    }

    // 3x3, stride 1, zero padding.
    static Tensor conv_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
        std::size_t H = x.shape[0], W = x.shape[1], Cin = x.shape[2], Cout = w.shape[3];
        Tensor y = Tensor::zeros({H, W, Cout});
        for (std::size_t r = 0; r < H; ++r)
            for (std::size_t cc = 0; cc < W; ++cc)
                for (std::size_t co = 0; co < Cout; ++co) {
                    double s = b[co];
                    for (std::size_t dr = 0; dr < 3; ++dr) {
                        std::ptrdiff_t rr = static_cast<std::ptrdiff_t>(r + dr) - 1;
                        if (rr < 0 || rr >= static_cast<std::ptrdiff_t>(H)) continue;
                        for (std::size_t dc = 0; dc < 3; ++dc) {
                            std::ptrdiff_t c2 = static_cast<std::ptrdiff_t>(cc + dc) - 1;
                            if (c2 < 0 || c2 >= static_cast<std::ptrdiff_t>(W)) continue;
                            for (std::size_t ci = 0; ci < Cin; ++ci)
                                s += w.data[((dr * 3 + dc) * Cin + ci) * Cout + co] *
                                     x.at3(static_cast<std::size_t>(rr), static_cast<std::size_t>(c2), ci);
                        }
                    }
                    y.at3(r, cc, co) = s;
                }
        return y;
    }

    void head_forward(ForwardTrace& tr) const {
        const Tensor& x = tr.acts.back();
        if (spec_.head.kind == HeadKind::Classification) {
            Tensor pooled;
            if (x.rank() == 3) {
                std::size_t H = x.shape[0], W = x.shape[1], C = x.shape[2];
                pooled = Tensor::zeros({C});
                for (std::size_t r = 0; r < H; ++r)
                    for (std::size_t cc = 0; cc < W; ++cc)
                        for (std::size_t c = 0; c < C; ++c) pooled[c] += x.at3(r, cc, c);
                double inv = 1.0 / static_cast<double>(H * W);
                for (double& v : pooled.data) v *= inv;
            } else {
                pooled = flatten(x);
            }
            const Tensor& w = param("head.weight");
            const Tensor& b = param("head.bias");
            std::size_t in = w.shape[1], out = w.shape[0];
            Tensor z = Tensor::zeros({out});
            for (std::size_t o = 0; o < out; ++o) {
                double s = b[o];
                for (std::size_t k = 0; k < in; ++k) s += w.data[o * in + k] * pooled[k];
                z[o] = s;
            }
            tr.head_pooled = std::move(pooled);
            tr.logits = std::move(z);
        } else {
            // 1x1 conv to per-pixel logits
            const Tensor& w = param("head.weight");  // [Cin, C]
            const Tensor& b = param("head.bias");
            std::size_t H = x.shape[0], W = x.shape[1], Cin = x.shape[2], C = w.shape[1];
            Tensor z = Tensor::zeros({H, W, C});
            for (std::size_t r = 0; r < H; ++r)
                for (std::size_t cc = 0; cc < W; ++cc)
                    for (std::size_t c = 0; c < C; ++c) {
                        double s = b[c];
                        for (std::size_t ci = 0; ci < Cin; ++ci)
                            s += w.data[ci * C + c] * x.at3(r, cc, ci);
                        z.at3(r, cc, c) = s;
                    }
            tr.logits = std::move(z);
        }
    }

    void head_backward(const ForwardTrace& tr, const Tensor& dz, Tensor& dx, Gradients& g) const {
        const Tensor& x = tr.acts.back();
        if (spec_.head.kind == HeadKind::Classification) {
            const Tensor& w = param("head.weight");
            std::size_t in = w.shape[1], out = w.shape[0];
            Tensor& dw = g.d_params.at("head.weight");
            Tensor& db = g.d_params.at("head.bias");
            Tensor dpooled = Tensor::zeros({in});
            for (std::size_t o = 0; o < out; ++o) {
                db[o] += dz[o];
                for (std::size_t k = 0; k < in; ++k) {
                    dw.data[o * in + k] += dz[o] * tr.head_pooled[k];
                    dpooled[k] += dz[o] * w.data[o * in + k];
                }
            }
            if (x.rank() == 3) {
                std::size_t H = x.shape[0], W = x.shape[1], C = x.shape[2];
                double inv = 1.0 / static_cast<double>(H * W);
                for (std::size_t r = 0; r < H; ++r)
                    for (std::size_t cc = 0; cc < W; ++cc)
                        for (std::size_t c = 0; c < C; ++c) dx.at3(r, cc, c) += dpooled[c] * inv;
            } else {
                for (std::size_t k = 0; k < in; ++k) dx.data[k] += dpooled[k];
            }
        } else {
            const Tensor& w = param("head.weight");
            std::size_t H = x.shape[0], W = x.shape[1], Cin = x.shape[2], C = w.shape[1];
            Tensor& dw = g.d_params.at("head.weight");
            Tensor& db = g.d_params.at("head.bias");
            for (std::size_t r = 0; r < H; ++r)
                for (std::size_t cc = 0; cc < W; ++cc)
                    for (std::size_t c = 0; c < C; ++c) {
                        double dzv = dz.at3(r, cc, c);
                        if (dzv == 0.0) continue;
                        db[c] += dzv;
                        for (std::size_t ci = 0; ci < Cin; ++ci) {
                            dw.data[ci * C + c] += dzv * x.at3(r, cc, ci);
                            dx.at3(r, cc, ci) += dzv * w.data[ci * C + c];
                        }
                    }
        }
    }

    void layer_backward(std::size_t i, const ForwardTrace& tr, std::vector<Tensor>& d_acts,
                        Gradients& g) const {
        const LayerSpec& L = spec_.layers[i];
        const Tensor& x = tr.acts[i];
        const Tensor& dy = d_acts[i + 1];
        Tensor& dx = d_acts[i];
        switch (L.kind) {
            case LayerKind::Dense: {
                const Tensor& w = param(layer_param_name(i, "weight"));
                Tensor& dw = g.d_params.at(layer_param_name(i, "weight"));
                Tensor& db = g.d_params.at(layer_param_name(i, "bias"));
                std::size_t in = w.shape[1], out = w.shape[0];
                for (std::size_t o = 0; o < out; ++o) {
                    double d = dy[o];
                    db[o] += d;
                    if (d == 0.0) continue;
                    for (std::size_t k = 0; k < in; ++k) {
                        dw.data[o * in + k] += d * x.data[k];
                        dx.data[k] += d * w.data[o * in + k];
                    }
                }
                break;
            }
            case LayerKind::Conv3x3: {
                const Tensor& w = param(layer_param_name(i, "weight"));
                Tensor& dw = g.d_params.at(layer_param_name(i, "weight"));
                Tensor& db = g.d_params.at(layer_param_name(i, "bias"));
                std::size_t H = x.shape[0], W = x.shape[1], Cin = x.shape[2], Cout = w.shape[3];
                for (std::size_t r = 0; r < H; ++r)
                    for (std::size_t cc = 0; cc < W; ++cc)
                        for (std::size_t co = 0; co < Cout; ++co) {
                            double d = dy.at3(r, cc, co);
                            if (d == 0.0) continue;
                            db[co] += d;
                            for (std::size_t dr = 0; dr < 3; ++dr) {
                                std::ptrdiff_t rr = static_cast<std::ptrdiff_t>(r + dr) - 1;
                                if (rr < 0 || rr >= static_cast<std::ptrdiff_t>(H)) continue;
                                for (std::size_t dc = 0; dc < 3; ++dc) {
                                    std::ptrdiff_t c2 = static_cast<std::ptrdiff_t>(cc + dc) - 1;
                                    if (c2 < 0 || c2 >= static_cast<std::ptrdiff_t>(W)) continue;
                                    for (std::size_t ci = 0; ci < Cin; ++ci) {
                                        std::size_t widx = ((dr * 3 + dc) * Cin + ci) * Cout + co;
                                        dw.data[widx] += d * x.at3(static_cast<std::size_t>(rr), static_cast<std::size_t>(c2), ci);
                                        dx.at3(static_cast<std::size_t>(rr), static_cast<std::size_t>(c2), ci) += d * w.data[widx];
                                    }
                                }
                            }
                        }
                break;
            }
            case LayerKind::Relu: {
                // subgradient at 0 is 0
                for (std::size_t k = 0; k < x.numel(); ++k)
                    if (x.data[k] > 0.0) dx.data[k] += dy.data[k];
                break;
            }
            case LayerKind::MaxPool2: {
                std::size_t H = x.shape[0], W = x.shape[1], C = x.shape[2];
                for (std::size_t i2 = 0; i2 < H / 2; ++i2)
                    for (std::size_t j2 = 0; j2 < W / 2; ++j2)
                        for (std::size_t c = 0; c < C; ++c) {
                            // first maximum in scan order wins (deterministic)
                            std::size_t br = 2 * i2, bc = 2 * j2;
                            double best = x.at3(br, bc, c);
                            for (std::size_t dr = 0; dr < 2; ++dr)
                                for (std::size_t dc = 0; dc < 2; ++dc) {
                                    double v = x.at3(2 * i2 + dr, 2 * j2 + dc, c);
                                    if (v > best) {
                                        best = v;
                                        br = 2 * i2 + dr;
                                        bc = 2 * j2 + dc;
                                    }
                                }
                            dx.at3(br, bc, c) += dy.at3(i2, j2, c);
                        }
                break;
            }
            case LayerKind::Upsample2: {
                std::size_t H2 = dy.shape[0], W2 = dy.shape[1], C = dy.shape[2];
                for (std::size_t r = 0; r < H2; ++r)
                    for (std::size_t cc = 0; cc < W2; ++cc)
                        for (std::size_t c = 0; c < C; ++c)
                            dx.at3(r / 2, cc / 2, c) += dy.at3(r, cc, c);
                break;
            }
            case LayerKind::SkipConcat: {
                Tensor& dsrc = d_acts[static_cast<std::size_t>(L.source + 1)];
                if (x.rank() == 3) {
                    std::size_t H = x.shape[0], W = x.shape[1], C1 = x.shape[2], C2 = dsrc.shape[2];
                    for (std::size_t r = 0; r < H; ++r)
                        for (std::size_t cc = 0; cc < W; ++cc) {
                            for (std::size_t c = 0; c < C1; ++c) dx.at3(r, cc, c) += dy.at3(r, cc, c);
                            for (std::size_t c = 0; c < C2; ++c) dsrc.at3(r, cc, c) += dy.at3(r, cc, C1 + c);
                        }
                } else {
                    for (std::size_t k = 0; k < x.numel(); ++k) dx.data[k] += dy.data[k];
                    for (std::size_t k = 0; k < dsrc.numel(); ++k) dsrc.data[k] += dy.data[x.numel() + k];
                }
                break;
            }
        }
    }
};

inline int argmax_label(const Tensor& logits) {
    require(logits.rank() == 1, "argmax_label: expected a logit vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.numel(); ++i)
        if (logits[i] > logits[best]) best = i;  // ties keep the lowest index
    return static_cast<int>(best);
}

/// Per-pixel argmax of [H,W,C] logits.
inline LabelMap argmax_map(const Tensor& logits) {
    require(logits.rank() == 3, "argmax_map: expected [H,W,C] logits");
    std::size_t H = logits.shape[0], W = logits.shape[1], C = logits.shape[2];
    LabelMap m({H, W}, std::vector<int>(H * W, 0));
    for (std::size_t r = 0; r < H; ++r)
        for (std::size_t cc = 0; cc < W; ++cc) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < C; ++c)
                if (logits.at3(r, cc, c) > logits.at3(r, cc, best)) best = c;
            m.data[r * W + cc] = static_cast<int>(best);
        }
    return m;
}

inline LabelMap predict(const Model& m, const Tensor& x) {
    Tensor z = m.forward(x);
    if (m.spec().head.kind == HeadKind::Classification) return LabelMap::scalar(argmax_label(z));
    return argmax_map(z);
}

}  // namespace advbench
