#pragma once

#include <string>
#include <vector>

#include "advbench/data.hpp"
#include "advbench/model.hpp"
#include "advbench/tnsr.hpp"
#include "advbench/train.hpp"

namespace advbench {

namespace detail {

inline ordered_json layer_to_json(const LayerSpec& L) {
    ordered_json j;
    j["kind"] = layer_kind_name(L.kind);
    if (L.kind == LayerKind::Dense || L.kind == LayerKind::Conv3x3) j["units"] = L.units;
    if (L.kind == LayerKind::SkipConcat) j["source"] = L.source;
    return j;
}

inline LayerSpec layer_from_json(const ordered_json& j) {
    std::string kind = j.at("kind");
    if (kind == "dense") return dense(j.at("units").get<std::size_t>());
    if (kind == "conv3x3") return conv3x3(j.at("units").get<std::size_t>());
    if (kind == "relu") return relu();
    if (kind == "maxpool2") return maxpool2();
    if (kind == "upsample2") return upsample2();
    if (kind == "skip-concat") return skip_concat(j.at("source").get<int>());
    throw Error("checkpoint: unknown layer kind '" + kind + "'");
}

inline ordered_json train_config_to_json(const TrainConfig& cfg) {
    ordered_json j;
    j["optimizer"] = optimizer_name(cfg.optimizer);
    j["lr"] = cfg.lr;
    j["momentum"] = cfg.momentum;
    j["lr_decay"] = cfg.lr_decay;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["class_weights"] = cfg.class_weights;
    j["dice_lambda"] = cfg.dice_lambda;
    j["weight_decay"] = cfg.weight_decay;
    j["augment_flips"] = cfg.augment_flips;
    j["seed"] = cfg.seed;
    return j;
}

inline TrainConfig train_config_from_json(const ordered_json& j) {
    TrainConfig cfg;
    cfg.optimizer = optimizer_from_name(j.at("optimizer"));
    cfg.lr = j.at("lr");
    cfg.momentum = j.at("momentum");
    cfg.lr_decay = j.at("lr_decay");
    cfg.epochs = j.at("epochs");
    cfg.batch_size = j.at("batch_size");
    cfg.class_weights = j.at("class_weights").get<std::vector<double>>();
    cfg.dice_lambda = j.at("dice_lambda");
    cfg.weight_decay = j.at("weight_decay");
    cfg.augment_flips = j.at("augment_flips");
    cfg.seed = j.at("seed");
    return cfg;
}

}  // namespace detail

/// Checkpoint = TNSR container of parameters + a manifest covering the layer
/// sequence, head, seeds and the train config.
inline void save_checkpoint(const fs::path& dir, const Model& model, const TrainConfig& train_cfg,
                            const ordered_json& extra = ordered_json::object()) {
    ordered_json meta;
    meta["input_shape"] = model.spec().input_shape;
    ordered_json layers = ordered_json::array();
    for (const LayerSpec& L : model.spec().layers) layers.push_back(detail::layer_to_json(L));
    meta["layers"] = layers;
    meta["head"] = {{"kind", model.spec().head.kind == HeadKind::Classification ? "classification"
                                                                                : "segmentation"},
                    {"n_classes", model.spec().head.n_classes}};
    meta["init_seed"] = model.seed();
    meta["train_config"] = detail::train_config_to_json(train_cfg);
    meta["extra"] = extra;
    save_container(dir, model.params(), meta);
}

struct Checkpoint {
    Model model;
    TrainConfig train_config;
    ordered_json extra;
};

inline Checkpoint load_checkpoint(const fs::path& dir) {
    Container c = load_container(dir);
    ModelSpec spec;
    spec.input_shape = c.meta.at("input_shape").get<Shape>();
    for (const auto& lj : c.meta.at("layers")) spec.layers.push_back(detail::layer_from_json(lj));
    std::string head_kind = c.meta.at("head").at("kind");
    spec.head.kind = head_kind == "classification" ? HeadKind::Classification : HeadKind::Segmentation;
    spec.head.n_classes = c.meta.at("head").at("n_classes");

    Checkpoint out;
    out.model = Model::init(spec, c.meta.at("init_seed").get<std::uint64_t>());
    for (auto& [name, t] : c.tensors) {
        auto it = out.model.params().find(name);
        require(it != out.model.params().end(), "checkpoint: unexpected tensor '" + name + "'");
        require(it->second.shape == t.shape, "checkpoint: shape mismatch for '" + name + "'");
        it->second = std::move(t);
    }
    out.train_config = detail::train_config_from_json(c.meta.at("train_config"));
    out.extra = c.meta.value("extra", ordered_json::object());
    return out;
}

/// Dataset persistence: images/labels stacked into single tensors plus the
/// split indices, all in one container.
inline void save_dataset(const fs::path& dir, const Dataset& ds) {
    require(!ds.samples.empty(), "save_dataset: empty dataset");
    const Shape& ishape = ds.samples[0].image.shape;
    Shape stacked_shape = ishape;
    stacked_shape.insert(stacked_shape.begin(), ds.samples.size());
    Tensor images = Tensor::zeros(stacked_shape);
    std::size_t stride = ds.samples[0].image.numel();
    Shape lshape = ds.samples[0].label.shape;
    std::size_t lstride = ds.samples[0].label.numel();
    Shape lab_shape = lshape;
    lab_shape.insert(lab_shape.begin(), ds.samples.size());
    Tensor labels = Tensor::zeros(lab_shape);
    Tensor groups = Tensor::zeros({ds.samples.size()});
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        require(ds.samples[i].image.shape == ishape, "save_dataset: ragged image shapes");
        require(ds.samples[i].label.shape == lshape, "save_dataset: ragged label shapes");
        std::copy(ds.samples[i].image.data.begin(), ds.samples[i].image.data.end(),
                  images.data.begin() + static_cast<std::ptrdiff_t>(i * stride));
        for (std::size_t k = 0; k < lstride; ++k)
            labels.data[i * lstride + k] = ds.samples[i].label.data[k];
        groups[i] = static_cast<double>(ds.groups[i]);
    }
    auto idx_tensor = [](const std::vector<std::size_t>& idx) {
        Tensor t = Tensor::zeros({idx.size()});
        for (std::size_t i = 0; i < idx.size(); ++i) t[i] = static_cast<double>(idx[i]);
        return t;
    };
    std::map<std::string, Tensor> tensors;
    tensors.emplace("images", std::move(images));
    tensors.emplace("labels", std::move(labels));
    tensors.emplace("groups", std::move(groups));
    tensors.emplace("train_idx", idx_tensor(ds.train_idx));
    tensors.emplace("test_idx", idx_tensor(ds.test_idx));

    ordered_json meta;
    meta["kind"] = "dataset";
    meta["task"] = task_name(ds.task);
    meta["n_classes"] = ds.n_classes;
    meta["seed"] = ds.seed;
    save_container(dir, tensors, meta);
}

inline Dataset load_dataset(const fs::path& dir) {
    Container c = load_container(dir);
    require(c.meta.value("kind", "") == "dataset", "load_dataset: not a dataset container");
    Dataset ds;
    ds.task = c.meta.at("task") == "classification" ? Task::Classification : Task::Segmentation;
    ds.n_classes = c.meta.at("n_classes");
    ds.seed = c.meta.at("seed");

    const Tensor& images = c.tensors.at("images");
    const Tensor& labels = c.tensors.at("labels");
    const Tensor& groups = c.tensors.at("groups");
    std::size_t n = images.shape[0];
    Shape ishape(images.shape.begin() + 1, images.shape.end());
    Shape lshape(labels.shape.begin() + 1, labels.shape.end());
    std::size_t stride = shape_numel(ishape), lstride = shape_numel(lshape);
    for (std::size_t i = 0; i < n; ++i) {
        Tensor img(ishape, std::vector<double>(
                               images.data.begin() + static_cast<std::ptrdiff_t>(i * stride),
                               images.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * stride)));
        std::vector<int> lab(lstride);
        for (std::size_t k = 0; k < lstride; ++k)
            lab[k] = static_cast<int>(labels.data[i * lstride + k]);
        ds.samples.push_back({std::move(img), LabelMap(lshape, std::move(lab))});
        ds.groups.push_back(static_cast<std::int64_t>(groups[i]));
    }
    for (double v : c.tensors.at("train_idx").data) ds.train_idx.push_back(static_cast<std::size_t>(v));
    for (double v : c.tensors.at("test_idx").data) ds.test_idx.push_back(static_cast<std::size_t>(v));
    return ds;
}

}  // namespace advbench
