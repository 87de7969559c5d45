#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace advbench {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

/// Dense row-major f64 tensor. The universal carrier for images, logits
/// and gradients.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        require(data.size() == shape_numel(shape),
                "tensor data length " + std::to_string(data.size()) +
                    " does not match shape " + shape_str(shape));
    }

    static Tensor zeros(Shape s) {
        std::size_t n = shape_numel(s);
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }
    static Tensor full(Shape s, double v) {
        std::size_t n = shape_numel(s);
        return Tensor(std::move(s), std::vector<double>(n, v));
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    // Flat offsets for the common ranks.
    std::size_t offset2(std::size_t i, std::size_t j) const { return i * shape[1] + j; }
    std::size_t offset3(std::size_t i, std::size_t j, std::size_t c) const {
        return (i * shape[1] + j) * shape[2] + c;
    }
    double& at2(std::size_t i, std::size_t j) { return data[offset2(i, j)]; }
    double at2(std::size_t i, std::size_t j) const { return data[offset2(i, j)]; }
    double& at3(std::size_t i, std::size_t j, std::size_t c) { return data[offset3(i, j, c)]; }
    double at3(std::size_t i, std::size_t j, std::size_t c) const { return data[offset3(i, j, c)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline void check_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) throw Error(what + ": non-finite element");
}

inline Tensor clip01(Tensor t) {
    for (double& v : t.data) v = std::clamp(v, 0.0, 1.0);
    return t;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), "add: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += b.data[i];
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), "sub: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] -= b.data[i];
    return out;
}

inline Tensor scale(Tensor t, double k) {
    for (double& v : t.data) v *= k;
    return t;
}

inline double linf_norm(const Tensor& t) {
    double m = 0.0;
    for (double v : t.data) m = std::max(m, std::fabs(v));
    return m;
}

inline double l2_norm(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data) s += v * v;
    return std::sqrt(s);
}

inline double dot(const Tensor& a, const Tensor& b) {
    require(a.numel() == b.numel(), "dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) s += a.data[i] * b.data[i];
    return s;
}

inline Tensor flatten(const Tensor& t) { return Tensor({t.numel()}, t.data); }

/// Per-pixel (or per-sample) class indices. Scalar maps (shape = {}) hold a
/// single classification label.
struct LabelMap {
    Shape shape;            // spatial dims; empty for a single label
    std::vector<int> data;  // length = product of shape (1 when empty)

    LabelMap() : data{0} {}
    LabelMap(Shape s, std::vector<int> d) : shape(std::move(s)), data(std::move(d)) {
        require(data.size() == shape_numel(shape), "label map size does not match shape");
    }

    static LabelMap scalar(int c) {
        LabelMap m;
        m.shape = {};
        m.data = {c};
        return m;
    }

    std::size_t numel() const { return data.size(); }

    int label() const {
        require(data.size() == 1, "label(): not a scalar label map");
        return data[0];
    }

    void check_classes(int n_classes) const {
        for (int v : data)
            require(v >= 0 && v < n_classes,
                    "label " + std::to_string(v) + " out of range for " +
                        std::to_string(n_classes) + " classes");
    }

    bool operator==(const LabelMap& o) const { return shape == o.shape && data == o.data; }
};

}  // namespace advbench
