#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "advbench/attacks.hpp"
#include "advbench/checkpoint.hpp"
#include "advbench/config.hpp"
#include "advbench/data.hpp"
#include "advbench/metrics.hpp"
#include "advbench/model.hpp"
#include "advbench/noise.hpp"
#include "advbench/strfmt.hpp"
#include "advbench/synthdata.hpp"
#include "advbench/tnsr.hpp"
#include "advbench/train.hpp"

namespace advbench {

// ---------------------------------------------------------------------------
// experiment configuration

struct CraftBand {
    double ssim_lo = 0.97;
    double ssim_hi = 0.99;
};

struct HarnessConfig {
    DatasetSpec data;
    TrainConfig train;
    std::vector<std::string> architectures;
    std::vector<std::uint64_t> zoo_seeds;  // instance seeds per architecture
    double clean_floor = 0.5;
    std::vector<std::string> attacks;  // "fgsm","deepfool","sma" | "dag-a","dag-b","dag-c"
    CraftBand band;
    double fgsm_eps_max = 0.5;
    DeepFoolConfig deepfool;
    SmaConfig sma;
    DagConfig dag;
    double dag_type_b_fraction = 0.05;
    int dag_type_c_radius = 2;
    double dag_mse_band_a = 0.004;
    double dag_mse_band_bc = 0.002;
    int roc_class = 2;
};

inline ordered_json harness_config_schema() {
    return ordered_json{
        {"data",
         {{"task", "string"},
          {"n_samples", "int"},
          {"image_size", "int"},
          {"n_classes", "int"},
          {"noise_floor", "float"},
          {"train_fraction", "float"},
          {"seed", "int"}}},
        {"train",
         {{"optimizer", "string"},
          {"lr", "float"},
          {"momentum", "float"},
          {"lr_decay", "float"},
          {"epochs", "int"},
          {"batch_size", "int"},
          {"class_weights", "float[]"},
          {"dice_lambda", "float"},
          {"weight_decay", "float"},
          {"augment_flips", "bool"}}},
        {"zoo",
         {{"architectures", "string[]"}, {"seeds", "int[]"}, {"clean_floor", "float"}}},
        {"attacks",
         {{"enabled", "string[]"},
          {"fgsm", {{"eps_max", "float"}}},
          {"deepfool", {{"max_iter", "int"}, {"overshoot", "float"}}},
          {"sma", {{"theta_step", "float"}, {"gamma", "float"}, {"pair_mode", "bool"}}},
          {"dag",
           {{"max_iter", "int"},
            {"gamma", "float"},
            {"type_b_fraction", "float"},
            {"type_c_radius", "int"},
            {"mse_band_a", "float"},
            {"mse_band_bc", "float"},
            {"mask_to_target", "bool"}}}}},
        {"craft", {{"ssim_lo", "float"}, {"ssim_hi", "float"}}},
        {"report", {{"roc_class", "int"}}},
    };
}

inline HarnessConfig harness_config_from_json(const ordered_json& j) {
    validate_config(j, harness_config_schema());
    HarnessConfig c;
    const auto& d = j.at("data");
    std::string task = d.at("task");
    require(task == "classification" || task == "segmentation",
            "config: data.task must be classification or segmentation");
    c.data.task = task == "classification" ? Task::Classification : Task::Segmentation;
    c.data.n_samples = d.at("n_samples").get<std::size_t>();
    if (d.contains("image_size")) c.data.image_size = d.at("image_size").get<std::size_t>();
    if (d.contains("n_classes")) c.data.n_classes = d.at("n_classes").get<int>();
    if (d.contains("noise_floor")) c.data.noise_floor = d.at("noise_floor");
    if (d.contains("train_fraction")) c.data.train_fraction = d.at("train_fraction");
    if (d.contains("seed")) c.data.seed = d.at("seed").get<std::uint64_t>();

    const auto& t = j.at("train");
    if (t.contains("optimizer")) c.train.optimizer = optimizer_from_name(t.at("optimizer"));
    if (t.contains("lr")) c.train.lr = t.at("lr");
    if (t.contains("momentum")) c.train.momentum = t.at("momentum");
    if (t.contains("lr_decay")) c.train.lr_decay = t.at("lr_decay");
    if (t.contains("epochs")) c.train.epochs = t.at("epochs");
    if (t.contains("batch_size")) c.train.batch_size = t.at("batch_size").get<std::size_t>();
    if (t.contains("class_weights")) c.train.class_weights = t.at("class_weights").get<std::vector<double>>();
    if (t.contains("dice_lambda")) c.train.dice_lambda = t.at("dice_lambda");
    if (t.contains("weight_decay")) c.train.weight_decay = t.at("weight_decay");
    if (t.contains("augment_flips")) c.train.augment_flips = t.at("augment_flips");
    c.train.validate();

    const auto& z = j.at("zoo");
    c.architectures = z.at("architectures").get<std::vector<std::string>>();
    for (const auto& s : z.at("seeds")) c.zoo_seeds.push_back(s.get<std::uint64_t>());
    require(!c.architectures.empty(), "config: zoo.architectures is empty");
    require(c.zoo_seeds.size() >= 2, "config: zoo.seeds needs at least 2 entries for black-box pairs");
    if (z.contains("clean_floor")) c.clean_floor = z.at("clean_floor");

    const auto& a = j.at("attacks");
    c.attacks = a.at("enabled").get<std::vector<std::string>>();
    require(!c.attacks.empty(), "config: attacks.enabled is empty");
    if (a.contains("fgsm") && a.at("fgsm").contains("eps_max")) c.fgsm_eps_max = a.at("fgsm").at("eps_max");
    if (a.contains("deepfool")) {
        const auto& df = a.at("deepfool");
        if (df.contains("max_iter")) c.deepfool.max_iter = df.at("max_iter");
        if (df.contains("overshoot")) c.deepfool.overshoot = df.at("overshoot");
    }
    if (a.contains("sma")) {
        const auto& s = a.at("sma");
        if (s.contains("theta_step")) c.sma.theta_step = s.at("theta_step");
        if (s.contains("gamma")) c.sma.gamma = s.at("gamma");
        if (s.contains("pair_mode")) c.sma.pair_mode = s.at("pair_mode");
    }
    if (a.contains("dag")) {
        const auto& g = a.at("dag");
        if (g.contains("max_iter")) c.dag.max_iter = g.at("max_iter");
        if (g.contains("gamma")) c.dag.gamma = g.at("gamma");
        if (g.contains("mask_to_target")) c.dag.mask_to_target = g.at("mask_to_target");
        if (g.contains("type_b_fraction")) c.dag_type_b_fraction = g.at("type_b_fraction");
        if (g.contains("type_c_radius")) c.dag_type_c_radius = g.at("type_c_radius");
        if (g.contains("mse_band_a")) c.dag_mse_band_a = g.at("mse_band_a");
        if (g.contains("mse_band_bc")) c.dag_mse_band_bc = g.at("mse_band_bc");
    }
    if (j.contains("craft")) {
        const auto& cb = j.at("craft");
        if (cb.contains("ssim_lo")) c.band.ssim_lo = cb.at("ssim_lo");
        if (cb.contains("ssim_hi")) c.band.ssim_hi = cb.at("ssim_hi");
        require(c.band.ssim_lo < c.band.ssim_hi, "config: craft.ssim_lo must be below ssim_hi");
    }
    if (j.contains("report") && j.at("report").contains("roc_class"))
        c.roc_class = j.at("report").at("roc_class");
    return c;
}

// ---------------------------------------------------------------------------
// model zoo

/// The study's architecture family. Classification: a plain MLP vs a small
/// CNN. Segmentation: encoder-decoder FCNs ranging from no skip connections
/// (fcn-plain) over one long-range skip (fcn-skip) to long- and short-range
/// skips (fcn-dense).
inline ModelSpec make_architecture(const std::string& name, const Shape& input_shape, int n_classes) {
    ModelSpec spec;
    spec.input_shape = input_shape;
    std::size_t C = static_cast<std::size_t>(n_classes);
    if (name == "mlp") {
        spec.layers = {dense(48), relu(), dense(24), relu()};
        spec.head = {HeadKind::Classification, C};
    } else if (name == "cnn") {
        spec.layers = {conv3x3(6), relu(), maxpool2(), conv3x3(12), relu(), maxpool2()};
        spec.head = {HeadKind::Classification, C};
    } else if (name == "fcn-plain") {
        spec.layers = {conv3x3(8), relu(), conv3x3(8),  relu(), maxpool2(),
                       conv3x3(16), relu(), upsample2(), conv3x3(8), relu()};
        spec.head = {HeadKind::Segmentation, C};
    } else if (name == "fcn-skip") {
        spec.layers = {conv3x3(8), relu(), conv3x3(8),  relu(),          maxpool2(),
                       conv3x3(16), relu(), upsample2(), skip_concat(3), conv3x3(8), relu()};
        spec.head = {HeadKind::Segmentation, C};
    } else if (name == "fcn-dense") {
        spec.layers = {conv3x3(8),  relu(),      conv3x3(8), relu(), skip_concat(1), maxpool2(),
                       conv3x3(16), relu(),      upsample2(), skip_concat(3), conv3x3(8), relu()};
        spec.head = {HeadKind::Segmentation, C};
    } else {
        throw Error("unknown architecture '" + name + "'");
    }
    return spec;
}

struct ZooEntry {
    std::string arch;
    std::uint64_t seed = 0;  // instance seed (already combined with the master seed)
    fs::path checkpoint;
    double clean_score = 0.0;

    std::string id() const { return arch + "#" + std::to_string(seed); }
};

inline double clean_score_of(const Model& m, const Dataset& ds,
                             const std::vector<std::size_t>& idx) {
    require(!idx.empty(), "clean_score_of: empty index set");
    if (ds.task == Task::Classification) {
        std::size_t hits = 0;
        for (std::size_t i : idx) hits += predict(m, ds.samples[i].image) == ds.samples[i].label;
        return static_cast<double>(hits) / static_cast<double>(idx.size());
    }
    double s = 0.0;
    for (std::size_t i : idx)
        s += mean_dice(predict(m, ds.samples[i].image), ds.samples[i].label, ds.n_classes);
    return s / static_cast<double>(idx.size());
}

/// Simple deterministic index-parallel map; results land in caller-owned
/// slots so thread count never changes any output.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::exception_ptr> errors(nt);
    for (std::size_t t = 0; t < nt; ++t)
        pool.emplace_back([&, t]() {
            try {
                for (std::size_t i = t; i < n; i += nt) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Trains every (architecture, seed) pair, persists checkpoints under
/// out_dir, and records clean test scores. Models below the clean-score floor
/// abort the run with a list of offenders.
inline std::vector<ZooEntry> train_zoo(const HarnessConfig& cfg, const Dataset& ds,
                                       const fs::path& out_dir, std::uint64_t master_seed,
                                       int threads = 1) {
    fs::create_directories(out_dir);
    std::vector<std::pair<std::string, std::uint64_t>> jobs;
    for (const std::string& arch : cfg.architectures)
        for (std::uint64_t s : cfg.zoo_seeds) jobs.emplace_back(arch, derive_seed(master_seed, 0x200, s));

    Shape input_shape = ds.samples.at(0).image.shape;
    std::vector<ZooEntry> entries(jobs.size());
    std::vector<Sample> train_set = ds.train_samples();

    parallel_for(jobs.size(), threads, [&](std::size_t k) {
        const auto& [arch, seed] = jobs[k];
        ModelSpec spec = make_architecture(arch, input_shape, ds.n_classes);
        Model m0 = Model::init(spec, derive_seed(seed, 0x1417));
        TrainConfig tcfg = cfg.train;
        tcfg.seed = derive_seed(seed, 0x7247);
        TrainResult tr = train(m0, train_set, tcfg);

        ZooEntry e;
        e.arch = arch;
        e.seed = seed;
        e.clean_score = clean_score_of(tr.model, ds, ds.test_idx);
        e.checkpoint = out_dir / ("ckpt_" + arch + "_" + std::to_string(seed));
        ordered_json extra;
        extra["arch"] = arch;
        extra["instance_seed"] = seed;
        extra["clean_score"] = e.clean_score;
        ordered_json losses = ordered_json::array();
        for (double v : tr.epoch_loss) losses.push_back(v);
        extra["epoch_loss"] = losses;
        save_checkpoint(e.checkpoint, tr.model, tcfg, extra);
        entries[k] = std::move(e);
    });

    std::string offenders;
    for (const ZooEntry& e : entries)
        if (e.clean_score < cfg.clean_floor)
            offenders += (offenders.empty() ? "" : ", ") + e.id() + " (" + double_str(e.clean_score) + ")";
    if (!offenders.empty())
        throw Error("train_zoo: models below the clean-score floor " + double_str(cfg.clean_floor) +
                    ": " + offenders);
    return entries;
}

inline void save_zoo_index(const fs::path& out_dir, const std::vector<ZooEntry>& zoo,
                           const fs::path& data_dir, const ordered_json& config_json) {
    ordered_json j;
    j["kind"] = "zoo";
    j["data_dir"] = fs::absolute(data_dir).string();
    ordered_json entries = ordered_json::array();
    for (const ZooEntry& e : zoo) {
        ordered_json ej;
        ej["arch"] = e.arch;
        ej["seed"] = e.seed;
        ej["checkpoint"] = e.checkpoint.filename().string();
        ej["clean_score"] = e.clean_score;
        entries.push_back(ej);
    }
    j["entries"] = entries;
    j["config"] = config_json;
    write_file(out_dir / "zoo.json", j.dump(2) + "\n");
}

struct ZooIndex {
    std::vector<ZooEntry> entries;
    fs::path data_dir;
    ordered_json config_json;
};

inline ZooIndex load_zoo_index(const fs::path& dir) {
    ordered_json j = ordered_json::parse(read_file(dir / "zoo.json"));
    require(j.value("kind", "") == "zoo", "load_zoo: not a zoo directory");
    ZooIndex out;
    out.data_dir = j.at("data_dir").get<std::string>();
    out.config_json = j.at("config");
    for (const auto& ej : j.at("entries")) {
        ZooEntry e;
        e.arch = ej.at("arch");
        e.seed = ej.at("seed");
        e.checkpoint = dir / ej.at("checkpoint").get<std::string>();
        e.clean_score = ej.at("clean_score");
        out.entries.push_back(e);
    }
    return out;
}

// ---------------------------------------------------------------------------
// crafting

struct CraftedExample {
    std::size_t test_pos = 0;  // position within the dataset's test index list
    bool perturbed = false;
    bool band_miss = false;    // SSIM band was unreachable for this image
    bool mse_warn = false;     // DAG example outside the expected MSE band
    double calibrated_eps = 0.0;
    double scale = 1.0;
    AttackResult res;
};

struct CraftedSet {
    std::string model_id;
    std::string attack;
    std::vector<CraftedExample> examples;
};

namespace detail {

// Scales a fixed perturbation direction until SSIM(x, clip(x + s*r)) lands
// inside [lo, hi]; aims at the band midpoint. Returns the scale, or 0 with
// band_miss when even full saturation stays above hi.
inline double scale_into_band(const Tensor& x, const Tensor& r, const CraftBand& band,
                              bool& band_miss) {
    auto at = [&](double s) { return clip01(add(x, scale(r, s))); };
    double mid = 0.5 * (band.ssim_lo + band.ssim_hi);
    double margin = 0.1 * (band.ssim_hi - band.ssim_lo);

    double s_hi = 1.0;
    double v_hi = ssim(x, at(s_hi));
    int guard = 0;
    while (v_hi > mid && guard++ < 24) {
        s_hi *= 2.0;
        double next = ssim(x, at(s_hi));
        if (next >= v_hi - 1e-12 && next > band.ssim_hi) {
            band_miss = true;  // saturated: cannot push SSIM below the band top
            return 0.0;
        }
        v_hi = next;
    }
    if (v_hi > band.ssim_hi) {
        band_miss = true;
        return 0.0;
    }

    double lo = 0.0, hi = s_hi;
    for (int step = 0; step < 60; ++step) {
        double s = 0.5 * (lo + hi);
        double v = ssim(x, at(s));
        if (v >= band.ssim_lo + margin && v <= band.ssim_hi - margin) return s;
        (v > mid ? lo : hi) = s;
    }
    double s = 0.5 * (lo + hi);
    double v = ssim(x, at(s));
    if (v >= band.ssim_lo && v <= band.ssim_hi) return s;
    band_miss = true;
    return 0.0;
}

inline int most_frequent_foreground(const LabelMap& y) {
    std::map<int, std::size_t> counts;
    for (int v : y.data)
        if (v != 0) ++counts[v];
    int best = -1;
    std::size_t best_n = 0;
    for (const auto& [cls, n] : counts)
        if (n > best_n) {
            best = cls;
            best_n = n;
        }
    return best;
}

}  // namespace detail

/// Crafts one classification example with per-image SSIM calibration.
/// FGSM bisects eps directly; DeepFool/SMA rescale their perturbation
/// direction into the band, re-checking the flip afterwards.
inline CraftedExample craft_cls_example(const Model& model, const Tensor& x, const LabelMap& y,
                                        const std::string& attack, const HarnessConfig& cfg) {
    CraftedExample out;
    int clean_label = argmax_label(model.forward(x));

    if (attack == "fgsm") {
        Tensor g = grad_input(model, x, y, LossSpec::xent(cfg.train.class_weights));
        Tensor dir = Tensor::zeros(x.shape);
        for (std::size_t i = 0; i < x.numel(); ++i) dir.data[i] = detail::sign0(g.data[i]);
        if (linf_norm(dir) == 0.0) {
            out.res.x_adv = x;
            out.res.grad_calls = 1;
            detail::finalize_attack_result(out.res, x);
            return out;
        }
        bool band_miss = false;
        double eps = detail::scale_into_band(x, dir, cfg.band, band_miss);
        eps = std::min(eps, cfg.fgsm_eps_max);
        out.band_miss = band_miss;
        out.calibrated_eps = eps;
        out.res.grad_calls = 1;
        out.res.iterations = 1;
        out.res.x_adv = x;
        if (eps > 0.0) {
            for (std::size_t i = 0; i < x.numel(); ++i)
                out.res.x_adv.data[i] = x.data[i] + eps * dir.data[i];
            out.res.x_adv = clip01(std::move(out.res.x_adv));
            detail::clamp_linf_exact(x, out.res.x_adv, eps);
            out.perturbed = true;
        }
        out.res.success = argmax_label(model.forward(out.res.x_adv)) != clean_label;
        detail::finalize_attack_result(out.res, x);
        return out;
    }

    AttackResult base;
    if (attack == "deepfool") {
        try {
            base = deepfool(model, x, cfg.deepfool);
        } catch (const Error&) {
            base.x_adv = x;  // degenerate boundary: record a failed craft
        }
    } else if (attack == "sma") {
        base = sma_untargeted(model, x, cfg.sma);
    } else {
        throw Error("craft_cls_example: unknown attack '" + attack + "'");
    }

    Tensor r = sub(base.x_adv, x);
    out.res = base;
    if (linf_norm(r) == 0.0) {
        out.res.x_adv = x;
        out.res.success = false;
        detail::finalize_attack_result(out.res, x);
        return out;
    }
    bool band_miss = false;
    double s = detail::scale_into_band(x, r, cfg.band, band_miss);
    out.band_miss = band_miss;
    if (band_miss) s = 1.0;  // keep the raw attack output, flagged
    out.scale = s;
    out.perturbed = true;
    out.res.x_adv = clip01(add(x, scale(std::move(r), s)));
    out.res.success = argmax_label(model.forward(out.res.x_adv)) != clean_label;
    detail::finalize_attack_result(out.res, x);
    return out;
}

inline CraftedExample craft_seg_example(const Model& model, const Tensor& x, const LabelMap& y,
                                        const std::string& attack, const HarnessConfig& cfg,
                                        int n_classes, std::uint64_t example_seed,
                                        std::string* trace_csv = nullptr) {
    CraftedExample out;
    DagTarget target;
    double mse_band = cfg.dag_mse_band_bc;
    if (attack == "dag-a") {
        target = target_type_a(y, cfg.dag.background);
        mse_band = cfg.dag_mse_band_a;
    } else if (attack == "dag-b") {
        target = target_type_b(y, cfg.dag_type_b_fraction, n_classes, example_seed);
    } else if (attack == "dag-c") {
        int victim = detail::most_frequent_foreground(y);
        require(victim > 0, "craft_seg_example: no foreground class for type C");
        target = target_type_c(y, victim, cfg.dag_type_c_radius);
        if (target.target_pixels.empty()) {
            // dilation added nothing (class already fills its neighborhood)
            out.res.x_adv = x;
            detail::finalize_attack_result(out.res, x);
            return out;
        }
    } else {
        throw Error("craft_seg_example: unknown attack '" + attack + "'");
    }

    DagResult dr = dag_attack(model, x, y, target, cfg.dag);
    out.res = std::move(dr.result);
    out.perturbed = linf_norm(out.res.r) > 0.0;
    out.mse_warn = out.perturbed &&
                   (out.res.mse < 0.5 * mse_band || out.res.mse > 1.5 * mse_band);
    if (trace_csv) *trace_csv = dag_trace_csv(dr);
    return out;
}

/// Crafts the whole (model x attack x test split) suite. Throws when some
/// (model, attack) pair fails on every image.
inline std::vector<CraftedSet> craft_suite(const std::vector<ZooEntry>& zoo, const Dataset& ds,
                                           const HarnessConfig& cfg, const fs::path& out_dir,
                                           std::uint64_t master_seed, int threads = 1) {
    fs::create_directories(out_dir);
    std::vector<CraftedSet> sets;

    std::vector<Model> models;
    for (const ZooEntry& e : zoo) models.push_back(load_checkpoint(e.checkpoint).model);

    const std::vector<std::size_t>& test_idx = ds.test_idx;
    for (std::size_t mi = 0; mi < zoo.size(); ++mi) {
        for (const std::string& attack : cfg.attacks) {
            CraftedSet set;
            set.model_id = zoo[mi].id();
            set.attack = attack;
            set.examples.resize(test_idx.size());
            std::vector<std::string> traces(test_idx.size());

            parallel_for(test_idx.size(), threads, [&](std::size_t k) {
                const Sample& s = ds.samples[test_idx[k]];
                CraftedExample ex;
                if (ds.task == Task::Classification) {
                    ex = craft_cls_example(models[mi], s.image, s.label, attack, cfg);
                } else {
                    std::uint64_t ex_seed = derive_seed(master_seed, 0xCAF7, test_idx[k]);
                    ex = craft_seg_example(models[mi], s.image, s.label, attack, cfg,
                                           ds.n_classes, ex_seed, &traces[k]);
                }
                ex.test_pos = k;
                set.examples[k] = std::move(ex);
            });

            bool any_success = false;
            for (const CraftedExample& ex : set.examples) any_success |= ex.res.success;
            if (!any_success)
                throw Error("craft_suite: attack failure rate 100% for (" + set.model_id + ", " +
                            attack + ")");

            // persist: stacked adversarial images + per-example metadata
            fs::path set_dir = out_dir / (set.model_id + "_" + attack);
            Shape stacked = ds.samples[test_idx[0]].image.shape;
            stacked.insert(stacked.begin(), set.examples.size());
            Tensor xadv = Tensor::zeros(stacked);
            std::size_t stride = ds.samples[test_idx[0]].image.numel();
            ordered_json rows = ordered_json::array();
            for (std::size_t k = 0; k < set.examples.size(); ++k) {
                const CraftedExample& ex = set.examples[k];
                std::copy(ex.res.x_adv.data.begin(), ex.res.x_adv.data.end(),
                          xadv.data.begin() + static_cast<std::ptrdiff_t>(k * stride));
                ordered_json row;
                row["test_pos"] = ex.test_pos;
                row["sample_index"] = test_idx[k];
                row["perturbed"] = ex.perturbed;
                row["band_miss"] = ex.band_miss;
                row["mse_warn"] = ex.mse_warn;
                row["calibrated_eps"] = ex.calibrated_eps;
                row["scale"] = ex.scale;
                row["success"] = ex.res.success;
                row["iterations"] = ex.res.iterations;
                row["grad_calls"] = ex.res.grad_calls;
                row["mse"] = ex.res.mse;
                row["ssim"] = std::isnan(ex.res.ssim) ? ordered_json() : ordered_json(ex.res.ssim);
                row["linf"] = ex.res.linf;
                rows.push_back(row);
            }
            std::map<std::string, Tensor> tensors;
            tensors.emplace("x_adv", std::move(xadv));
            ordered_json meta;
            meta["kind"] = "crafted-set";
            meta["model_id"] = set.model_id;
            meta["attack"] = attack;
            meta["examples"] = rows;
            save_container(set_dir, tensors, meta);
            if (ds.task == Task::Segmentation)
                for (std::size_t k = 0; k < traces.size(); ++k)
                    write_file(set_dir / ("trace_" + std::to_string(k) + ".csv"), traces[k]);

            sets.push_back(std::move(set));
        }
    }

    ordered_json index;
    index["kind"] = "crafted-store";
    ordered_json list = ordered_json::array();
    for (const CraftedSet& s : sets) list.push_back(s.model_id + "_" + s.attack);
    index["sets"] = list;
    write_file(out_dir / "crafted.json", index.dump(2) + "\n");
    return sets;
}

inline std::vector<CraftedSet> load_crafted_store(const fs::path& dir, const Dataset& ds) {
    ordered_json index = ordered_json::parse(read_file(dir / "crafted.json"));
    require(index.value("kind", "") == "crafted-store", "load_crafted_store: bad index");
    std::vector<CraftedSet> sets;
    for (const auto& name : index.at("sets")) {
        Container c = load_container(dir / name.get<std::string>());
        CraftedSet set;
        set.model_id = c.meta.at("model_id");
        set.attack = c.meta.at("attack");
        const Tensor& xadv = c.tensors.at("x_adv");
        Shape ishape(xadv.shape.begin() + 1, xadv.shape.end());
        std::size_t stride = shape_numel(ishape);
        for (const auto& row : c.meta.at("examples")) {
            CraftedExample ex;
            ex.test_pos = row.at("test_pos").get<std::size_t>();
            ex.perturbed = row.at("perturbed");
            ex.band_miss = row.at("band_miss");
            ex.mse_warn = row.at("mse_warn");
            ex.calibrated_eps = row.at("calibrated_eps");
            ex.scale = row.at("scale");
            ex.res.success = row.at("success");
            ex.res.iterations = row.at("iterations");
            ex.res.grad_calls = row.at("grad_calls");
            ex.res.mse = row.at("mse");
            ex.res.ssim = row.at("ssim").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                   : row.at("ssim").get<double>();
            ex.res.linf = row.at("linf");
            std::size_t k = ex.test_pos;
            ex.res.x_adv = Tensor(ishape, std::vector<double>(
                                              xadv.data.begin() + static_cast<std::ptrdiff_t>(k * stride),
                                              xadv.data.begin() + static_cast<std::ptrdiff_t>((k + 1) * stride)));
            const Tensor& orig = ds.samples[ds.test_idx[k]].image;
            ex.res.r = sub(ex.res.x_adv, orig);
            set.examples.push_back(std::move(ex));
        }
        sets.push_back(std::move(set));
    }
    return sets;
}

}  // namespace advbench
