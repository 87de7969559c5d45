#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "advbench/harness.hpp"

namespace advbench {

// ---------------------------------------------------------------------------
// noise condition

/// SSIM-matched noise: per test image the target SSIM is the mean SSIM of its
/// perturbed adversarial versions (across all crafting models and attacks),
/// so the noisy baseline sits exactly as far from the original. Gaussian for
/// classification, Rician for segmentation.
struct NoiseCondition {
    std::vector<Tensor> images;          // aligned with the test index list
    std::vector<double> target_ssim;
    std::vector<double> achieved_ssim;
};

inline NoiseCondition make_noise_condition(const Dataset& ds, const std::vector<CraftedSet>& sets,
                                           std::uint64_t master_seed, int threads = 1,
                                           double fallback_target = 0.98) {
    NoiseKind kind = ds.task == Task::Classification ? NoiseKind::Gaussian : NoiseKind::Rician;
    std::size_t n = ds.test_idx.size();
    NoiseCondition out;
    out.images.resize(n);
    out.target_ssim.resize(n);
    out.achieved_ssim.resize(n);

    parallel_for(n, threads, [&](std::size_t k) {
        double sum = 0.0;
        int count = 0;
        for (const CraftedSet& set : sets) {
            const CraftedExample& ex = set.examples.at(k);
            if (ex.perturbed && !std::isnan(ex.res.ssim)) {
                sum += ex.res.ssim;
                ++count;
            }
        }
        double target = count ? sum / count : fallback_target;
        target = std::clamp(target, 0.90, 0.995);
        out.target_ssim[k] = target;

        const Tensor& x = ds.samples[ds.test_idx[k]].image;
        std::uint64_t seed = derive_seed(master_seed, 0x4015E, ds.test_idx[k]);
        CalibrationResult cal = calibrate_sigma_to_ssim(x, kind, target, 0.005, seed);
        NoiseConfig apply_cfg = cal.config;
        apply_cfg.seed = derive_seed(cal.config.seed, 0);  // first of the averaged seeds
        out.images[k] = apply_noise(x, apply_cfg);
        out.achieved_ssim[k] = cal.achieved_ssim;
    });
    return out;
}

// ---------------------------------------------------------------------------
// transfer evaluation

/// Black-box matrix for one attack: rows = evaluated model, columns =
/// crafting model (the diagonal uses the same architecture trained with a
/// different seed).
struct TransferMatrix {
    std::string attack;
    std::vector<std::string> archs;                // row/column order
    std::vector<std::vector<double>> cells;        // [eval][craft]
};

struct EvalResult {
    Task task = Task::Classification;
    std::vector<std::string> archs;
    std::map<std::string, double> clean;           // arch -> score
    std::map<std::string, double> noisy;
    std::vector<TransferMatrix> matrices;          // one per attack
    std::map<std::string, double> whitebox;        // "arch|attack" -> score
    std::map<std::string, std::vector<double>> per_class_dice_clean;  // seg only
    std::map<std::string, std::map<std::string, double>> roc_auc_by_condition;  // cls only
    NoiseCondition noise;
    std::vector<std::string> warnings;
};

namespace detail {

inline double score_on_images(const Model& m, const Dataset& ds,
                              const std::vector<Tensor>& images) {
    double s = 0.0;
    for (std::size_t k = 0; k < ds.test_idx.size(); ++k) {
        const LabelMap& truth = ds.samples[ds.test_idx[k]].label;
        LabelMap pred = predict(m, images[k]);
        if (ds.task == Task::Classification)
            s += pred == truth ? 1.0 : 0.0;
        else
            s += mean_dice(pred, truth, ds.n_classes);
    }
    return s / static_cast<double>(ds.test_idx.size());
}

inline double score_on_crafted(const Model& m, const Dataset& ds, const CraftedSet& set) {
    std::vector<Tensor> images;
    images.reserve(set.examples.size());
    for (const CraftedExample& ex : set.examples) images.push_back(ex.res.x_adv);
    return score_on_images(m, ds, images);
}

inline const CraftedSet& find_set(const std::vector<CraftedSet>& sets, const std::string& model_id,
                                  const std::string& attack) {
    for (const CraftedSet& s : sets)
        if (s.model_id == model_id && s.attack == attack) return s;
    throw Error("transfer_eval: missing crafted set (" + model_id + ", " + attack + ")");
}

}  // namespace detail

/// Scores every primary model on clean, noisy and black-box adversarial
/// inputs. Zoo entries with the first seed are the evaluated models; the
/// second seed provides the independently trained diagonal partners.
inline EvalResult transfer_eval(const HarnessConfig& cfg, const std::vector<ZooEntry>& zoo,
                                const Dataset& ds, const std::vector<CraftedSet>& sets,
                                std::uint64_t master_seed, int threads = 1) {
    EvalResult out;
    out.task = ds.task;
    out.archs = cfg.architectures;

    std::map<std::string, const ZooEntry*> by_id;
    for (const ZooEntry& e : zoo) by_id[e.id()] = &e;
    auto entry_of = [&](const std::string& arch, std::size_t seed_pos) -> const ZooEntry& {
        std::uint64_t seed = derive_seed(master_seed, 0x200, cfg.zoo_seeds.at(seed_pos));
        auto it = by_id.find(arch + "#" + std::to_string(seed));
        require(it != by_id.end(), "transfer_eval: zoo entry missing for " + arch);
        return *it->second;
    };

    std::map<std::string, Model> models;
    for (const ZooEntry& e : zoo) models.emplace(e.id(), load_checkpoint(e.checkpoint).model);

    out.noise = make_noise_condition(ds, sets, master_seed, threads);

    std::vector<Tensor> clean_images;
    for (std::size_t i : ds.test_idx) clean_images.push_back(ds.samples[i].image);

    for (const std::string& arch : cfg.architectures) {
        const ZooEntry& e = entry_of(arch, 0);
        const Model& m = models.at(e.id());
        out.clean[arch] = detail::score_on_images(m, ds, clean_images);
        out.noisy[arch] = detail::score_on_images(m, ds, out.noise.images);

        if (ds.task == Task::Segmentation) {
            std::vector<double> per_class(static_cast<std::size_t>(ds.n_classes) - 1, 0.0);
            for (std::size_t k = 0; k < ds.test_idx.size(); ++k) {
                LabelMap pred = predict(m, clean_images[k]);
                const LabelMap& truth = ds.samples[ds.test_idx[k]].label;
                for (int c = 1; c < ds.n_classes; ++c)
                    per_class[static_cast<std::size_t>(c - 1)] += dice(pred, truth, c);
            }
            for (double& v : per_class) v /= static_cast<double>(ds.test_idx.size());
            out.per_class_dice_clean[arch] = per_class;
        }
    }

    for (const std::string& attack : cfg.attacks) {
        TransferMatrix tm;
        tm.attack = attack;
        tm.archs = cfg.architectures;
        tm.cells.assign(cfg.architectures.size(),
                        std::vector<double>(cfg.architectures.size(), 0.0));
        for (std::size_t i = 0; i < cfg.architectures.size(); ++i) {
            const ZooEntry& eval_entry = entry_of(cfg.architectures[i], 0);
            const Model& eval_model = models.at(eval_entry.id());
            for (std::size_t j = 0; j < cfg.architectures.size(); ++j) {
                const ZooEntry& craft_entry =
                    (i == j) ? entry_of(cfg.architectures[j], 1) : entry_of(cfg.architectures[j], 0);
                const CraftedSet& set = detail::find_set(sets, craft_entry.id(), attack);
                tm.cells[i][j] = detail::score_on_crafted(eval_model, ds, set);
            }
            const CraftedSet& own = detail::find_set(sets, eval_entry.id(), attack);
            out.whitebox[cfg.architectures[i] + "|" + attack] =
                detail::score_on_crafted(eval_model, ds, own);
        }
        out.matrices.push_back(std::move(tm));
    }

    // classification: ROC for the designated class on clean/noisy/white-box sets
    if (ds.task == Task::Classification) {
        int roc_class = std::min(cfg.roc_class, ds.n_classes - 1);
        auto roc_for = [&](const Model& m, const std::vector<Tensor>& images) {
            std::vector<double> scores;
            std::vector<int> truths;
            for (std::size_t k = 0; k < ds.test_idx.size(); ++k) {
                Tensor p = softmax(m.forward(images[k]));
                scores.push_back(p[static_cast<std::size_t>(roc_class)]);
                truths.push_back(ds.samples[ds.test_idx[k]].label.label() == roc_class ? 1 : 0);
            }
            return roc_auc(scores, truths).auc;
        };
        for (const std::string& arch : cfg.architectures) {
            const ZooEntry& e = entry_of(arch, 0);
            const Model& m = models.at(e.id());
            std::map<std::string, double> per_cond;
            per_cond["clean"] = roc_for(m, clean_images);
            per_cond["noisy"] = roc_for(m, out.noise.images);
            for (const std::string& attack : cfg.attacks) {
                const CraftedSet& own = detail::find_set(sets, e.id(), attack);
                std::vector<Tensor> imgs;
                for (const CraftedExample& ex : own.examples) imgs.push_back(ex.res.x_adv);
                per_cond["adv-" + attack] = roc_for(m, imgs);
            }
            out.roc_auc_by_condition[arch] = per_cond;
        }
    }

    // soft expectations surface as warnings, not failures
    for (const CraftedSet& s : sets) {
        std::size_t band_misses = 0, mse_warns = 0;
        for (const CraftedExample& ex : s.examples) {
            band_misses += ex.band_miss;
            mse_warns += ex.mse_warn;
        }
        if (band_misses)
            out.warnings.push_back("(" + s.model_id + ", " + s.attack + "): " +
                                   std::to_string(band_misses) + " examples missed the SSIM band");
        if (mse_warns)
            out.warnings.push_back("(" + s.model_id + ", " + s.attack + "): " +
                                   std::to_string(mse_warns) + " examples outside the expected MSE band");
    }
    if (ds.task == Task::Segmentation && out.clean.count("fcn-skip") && out.clean.count("fcn-plain") &&
        out.clean["fcn-skip"] < out.clean["fcn-plain"])
        out.warnings.push_back("fcn-skip clean Dice fell below fcn-plain on this run");

    return out;
}

// ---------------------------------------------------------------------------
// report

struct RobustnessReport {
    Task task = Task::Classification;
    ScoreTable table;
    std::vector<TransferMatrix> matrices;
    std::map<std::string, double> whitebox;
    std::map<std::string, std::vector<double>> per_class_dice_clean;
    std::map<std::string, std::map<std::string, double>> roc_auc_by_condition;
    std::vector<std::string> warnings;
};

inline RobustnessReport summarize(const EvalResult& ev) {
    RobustnessReport rep;
    rep.task = ev.task;
    rep.matrices = ev.matrices;
    rep.whitebox = ev.whitebox;
    rep.per_class_dice_clean = ev.per_class_dice_clean;
    rep.roc_auc_by_condition = ev.roc_auc_by_condition;
    rep.warnings = ev.warnings;

    for (std::size_t i = 0; i < ev.archs.size(); ++i) {
        const std::string& arch = ev.archs[i];
        rep.table.rows.push_back({arch, "clean", ev.clean.at(arch)});
        rep.table.rows.push_back({arch, "noisy", ev.noisy.at(arch)});
        double adv_sum = 0.0;
        int adv_n = 0;
        for (const TransferMatrix& tm : ev.matrices) {
            double row_sum = 0.0;
            for (double v : tm.cells[i]) row_sum += v;
            double row_mean = row_sum / static_cast<double>(tm.cells[i].size());
            rep.table.rows.push_back({arch, "attack-" + tm.attack, row_mean});
            adv_sum += row_mean;
            ++adv_n;
        }
        rep.table.drops[arch] = drop_points(ev.clean.at(arch), adv_sum / adv_n);
    }
    rep.table.check_consistency();
    return rep;
}

inline ordered_json report_to_json(const RobustnessReport& rep) {
    ordered_json j;
    j["kind"] = "robustness-report";
    j["task"] = task_name(rep.task);
    j["matrix_orientation"] = "rows = evaluated model, columns = crafting model";
    ordered_json rows = ordered_json::array();
    for (const ScoreRow& r : rep.table.rows)
        rows.push_back({{"model", r.model}, {"condition", r.condition}, {"score", r.score}});
    j["scores"] = rows;
    ordered_json drops = ordered_json::object();
    for (const auto& [model, d] : rep.table.drops) drops[model] = d;
    j["drop_points"] = drops;
    ordered_json mats = ordered_json::array();
    for (const TransferMatrix& tm : rep.matrices) {
        ordered_json m;
        m["attack"] = tm.attack;
        m["archs"] = tm.archs;
        m["cells"] = tm.cells;
        mats.push_back(m);
    }
    j["transfer_matrices"] = mats;
    ordered_json wb = ordered_json::object();
    for (const auto& [key, v] : rep.whitebox) wb[key] = v;
    j["whitebox"] = wb;
    if (!rep.per_class_dice_clean.empty()) {
        ordered_json pc = ordered_json::object();
        for (const auto& [arch, v] : rep.per_class_dice_clean) pc[arch] = v;
        j["per_class_dice_clean"] = pc;
    }
    if (!rep.roc_auc_by_condition.empty()) {
        ordered_json rc = ordered_json::object();
        for (const auto& [arch, conds] : rep.roc_auc_by_condition) {
            ordered_json inner = ordered_json::object();
            for (const auto& [cond, v] : conds) inner[cond] = v;
            rc[arch] = inner;
        }
        j["roc_auc"] = rc;
    }
    j["warnings"] = rep.warnings;
    return j;
}

/// ScoreTable CSV: (model, condition, metric, value) rows plus drop rows.
inline std::string report_to_csv(const RobustnessReport& rep) {
    std::string metric = rep.task == Task::Classification ? "accuracy" : "mean_dice";
    std::string out = "model,condition,metric,value\n";
    for (const ScoreRow& r : rep.table.rows)
        out += r.model + "," + r.condition + "," + metric + "," + double_str(r.score) + "\n";
    for (const auto& [model, d] : rep.table.drops)
        out += model + ",adversarial-avg,drop_points," + double_str(d) + "\n";
    return out;
}

inline std::string transfer_matrices_csv(const RobustnessReport& rep) {
    std::string out = "attack,evaluated_model,crafting_model,score\n";
    for (const TransferMatrix& tm : rep.matrices)
        for (std::size_t i = 0; i < tm.archs.size(); ++i)
            for (std::size_t j = 0; j < tm.archs.size(); ++j)
                out += tm.attack + "," + tm.archs[i] + "," + tm.archs[j] + "," +
                       double_str(tm.cells[i][j]) + "\n";
    return out;
}

inline std::string report_to_markdown(const RobustnessReport& rep) {
    std::string metric = rep.task == Task::Classification ? "accuracy" : "mean Dice";
    std::string md = "# Robustness report (" + std::string(task_name(rep.task)) + ")\n\n";
    md += "Scores are " + metric + "; the adversarial column averages every black-box cell.\n\n";
    md += "| model | clean | noisy | adversarial avg | % drop |\n";
    md += "|---|---|---|---|---|\n";
    std::vector<std::string> ordered;  // arch order of first appearance
    for (const ScoreRow& r : rep.table.rows)
        if (std::find(ordered.begin(), ordered.end(), r.model) == ordered.end())
            ordered.push_back(r.model);
    auto fmt3 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", v);
        return std::string(buf);
    };
    for (const std::string& arch : ordered) {
        double clean = rep.table.row(arch, "clean");
        double noisy = rep.table.row(arch, "noisy");
        double adv = clean - rep.table.drops.at(arch) / 100.0;
        char drop[32];
        std::snprintf(drop, sizeof(drop), "%.2f", rep.table.drops.at(arch));
        md += "| " + arch + " | " + fmt3(clean) + " | " + fmt3(noisy) + " | " + fmt3(adv) + " | " +
              drop + " |\n";
    }
    md += "\n## Black-box transfer (rows = evaluated model, columns = crafting model)\n";
    for (const TransferMatrix& tm : rep.matrices) {
        md += "\n### " + tm.attack + "\n\n| eval \\\\ craft |";
        for (const std::string& a : tm.archs) md += " " + a + " |";
        md += "\n|---|";
        for (std::size_t j = 0; j < tm.archs.size(); ++j) md += "---|";
        md += "\n";
        for (std::size_t i = 0; i < tm.archs.size(); ++i) {
            md += "| " + tm.archs[i] + " |";
            for (double v : tm.cells[i]) md += " " + fmt3(v) + " |";
            md += "\n";
        }
    }
    if (!rep.warnings.empty()) {
        md += "\n## Warnings\n\n";
        for (const std::string& w : rep.warnings) md += "- " + w + "\n";
    }
    return md;
}

// ---------------------------------------------------------------------------
// embeddings export

/// Penultimate-layer embeddings for clean / noisy / adversarial test images,
/// tagged with condition and class, as CSV for external projection tools.
inline std::string embeddings_csv(const Model& model, const Dataset& ds,
                                  const std::vector<Tensor>& noisy_images,
                                  const std::vector<Tensor>& adv_images) {
    std::size_t dim = model.embed(ds.samples[ds.test_idx[0]].image).numel();
    std::string out = "condition,class";
    for (std::size_t d = 0; d < dim; ++d) out += ",e" + std::to_string(d);
    out += "\n";
    auto emit = [&](const char* cond, const std::vector<Tensor>& images) {
        for (std::size_t k = 0; k < ds.test_idx.size(); ++k) {
            Tensor e = model.embed(images[k]);
            out += std::string(cond) + "," + std::to_string(ds.samples[ds.test_idx[k]].label.label());
            for (double v : e.data) out += "," + double_str(v);
            out += "\n";
        }
    };
    std::vector<Tensor> clean;
    for (std::size_t i : ds.test_idx) clean.push_back(ds.samples[i].image);
    emit("clean", clean);
    emit("noisy", noisy_images);
    emit("adversarial", adv_images);
    return out;
}

}  // namespace advbench
