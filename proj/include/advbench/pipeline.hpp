#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "advbench/evaluate.hpp"
#include "advbench/harness.hpp"
#include "advbench/version.hpp"

namespace advbench {

struct RunManifest {
    std::string stage;
    std::uint64_t config_hash = 0;
    std::uint64_t master_seed = 0;
    std::map<std::string, double> timings_sec;  // informational; not reproducible
    std::vector<std::string> files;

    ordered_json to_json() const {
        ordered_json j;
        j["kind"] = "run-manifest";
        j["toolkit_version"] = kVersion;
        j["stage"] = stage;
        j["config_hash"] = config_hash;
        j["master_seed"] = master_seed;
        ordered_json t = ordered_json::object();
        for (const auto& [k, v] : timings_sec) t[k] = v;
        j["timings_sec"] = t;
        j["files"] = files;
        return j;
    }
};

namespace detail {

class StageTimer {
public:
    explicit StageTimer(RunManifest& m, std::string name)
        : manifest_(m), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() {
        auto dt = std::chrono::steady_clock::now() - start_;
        manifest_.timings_sec[name_] =
            std::chrono::duration_cast<std::chrono::duration<double>>(dt).count();
    }

private:
    RunManifest& manifest_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

inline void record_tree(RunManifest& m, const fs::path& root) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            files.push_back(fs::relative(entry.path(), root).generic_string());
    std::sort(files.begin(), files.end());
    m.files = std::move(files);
}

}  // namespace detail

struct PipelineResult {
    fs::path data_dir, zoo_dir, crafted_dir, eval_dir;
    RobustnessReport report;
    EvalResult eval;
    std::vector<ZooEntry> zoo;
    RunManifest manifest;
};

inline void write_eval_result(const fs::path& dir, const EvalResult& ev) {
    ordered_json j;
    j["kind"] = "eval-result";
    j["task"] = task_name(ev.task);
    j["archs"] = ev.archs;
    ordered_json clean = ordered_json::object(), noisy = ordered_json::object();
    for (const auto& [a, v] : ev.clean) clean[a] = v;
    for (const auto& [a, v] : ev.noisy) noisy[a] = v;
    j["clean"] = clean;
    j["noisy"] = noisy;
    ordered_json mats = ordered_json::array();
    for (const TransferMatrix& tm : ev.matrices)
        mats.push_back({{"attack", tm.attack}, {"archs", tm.archs}, {"cells", tm.cells}});
    j["matrices"] = mats;
    ordered_json wb = ordered_json::object();
    for (const auto& [k, v] : ev.whitebox) wb[k] = v;
    j["whitebox"] = wb;
    ordered_json pc = ordered_json::object();
    for (const auto& [a, v] : ev.per_class_dice_clean) pc[a] = v;
    j["per_class_dice_clean"] = pc;
    ordered_json rc = ordered_json::object();
    for (const auto& [a, conds] : ev.roc_auc_by_condition) {
        ordered_json inner = ordered_json::object();
        for (const auto& [c, v] : conds) inner[c] = v;
        rc[a] = inner;
    }
    j["roc_auc"] = rc;
    j["noise_target_ssim"] = ev.noise.target_ssim;
    j["noise_achieved_ssim"] = ev.noise.achieved_ssim;
    j["warnings"] = ev.warnings;
    write_file(dir / "eval.json", j.dump(2) + "\n");
}

inline EvalResult read_eval_result(const fs::path& dir) {
    ordered_json j = ordered_json::parse(read_file(dir / "eval.json"));
    require(j.value("kind", "") == "eval-result", "read_eval_result: bad file");
    EvalResult ev;
    ev.task = j.at("task") == "classification" ? Task::Classification : Task::Segmentation;
    ev.archs = j.at("archs").get<std::vector<std::string>>();
    for (const auto& [a, v] : j.at("clean").items()) ev.clean[a] = v;
    for (const auto& [a, v] : j.at("noisy").items()) ev.noisy[a] = v;
    for (const auto& mj : j.at("matrices")) {
        TransferMatrix tm;
        tm.attack = mj.at("attack");
        tm.archs = mj.at("archs").get<std::vector<std::string>>();
        tm.cells = mj.at("cells").get<std::vector<std::vector<double>>>();
        ev.matrices.push_back(std::move(tm));
    }
    for (const auto& [k, v] : j.at("whitebox").items()) ev.whitebox[k] = v;
    for (const auto& [a, v] : j.at("per_class_dice_clean").items())
        ev.per_class_dice_clean[a] = v.get<std::vector<double>>();
    for (const auto& [a, conds] : j.at("roc_auc").items())
        for (const auto& [c, v] : conds.items()) ev.roc_auc_by_condition[a][c] = v;
    ev.noise.target_ssim = j.at("noise_target_ssim").get<std::vector<double>>();
    ev.noise.achieved_ssim = j.at("noise_achieved_ssim").get<std::vector<double>>();
    ev.warnings = j.at("warnings").get<std::vector<std::string>>();
    return ev;
}

inline void write_report_files(const fs::path& dir, const RobustnessReport& rep,
                               const std::string& format) {
    if (format == "json")
        write_file(dir / "report.json", report_to_json(rep).dump(2) + "\n");
    else if (format == "csv") {
        write_file(dir / "report.csv", report_to_csv(rep));
        write_file(dir / "transfer_matrices.csv", transfer_matrices_csv(rep));
    } else if (format == "md")
        write_file(dir / "report.md", report_to_markdown(rep));
    else
        throw Error("report: unknown format '" + format + "' (expected csv|json|md)");
}

/// gen-data -> train -> craft -> evaluate -> report, all under work_dir.
/// Bit-reproducible for a fixed (config, master_seed) regardless of threads.
inline PipelineResult run_pipeline(const ordered_json& config_json, std::uint64_t master_seed,
                                   const fs::path& work_dir, int threads = 1) {
    HarnessConfig cfg = harness_config_from_json(config_json);
    fs::create_directories(work_dir);

    PipelineResult out;
    out.manifest.stage = "pipeline";
    out.manifest.config_hash = config_hash(config_json);
    out.manifest.master_seed = master_seed;
    out.data_dir = work_dir / "data";
    out.zoo_dir = work_dir / "zoo";
    out.crafted_dir = work_dir / "crafted";
    out.eval_dir = work_dir / "eval";

    Dataset ds;
    {
        detail::StageTimer t(out.manifest, "gen-data");
        DatasetSpec dspec = cfg.data;
        dspec.seed = derive_seed(master_seed, 0xDA7A, cfg.data.seed);
        ds = gen_dataset(dspec);
        save_dataset(out.data_dir, ds);
    }
    {
        detail::StageTimer t(out.manifest, "train");
        out.zoo = train_zoo(cfg, ds, out.zoo_dir, master_seed, threads);
        save_zoo_index(out.zoo_dir, out.zoo, out.data_dir, config_json);
    }
    std::vector<CraftedSet> sets;
    {
        detail::StageTimer t(out.manifest, "craft");
        sets = craft_suite(out.zoo, ds, cfg, out.crafted_dir, master_seed, threads);
    }
    {
        detail::StageTimer t(out.manifest, "evaluate");
        out.eval = transfer_eval(cfg, out.zoo, ds, sets, master_seed, threads);
        fs::create_directories(out.eval_dir);
        write_eval_result(out.eval_dir, out.eval);

        // embeddings for classification: clean / noisy / white-box fgsm-like sets
        if (ds.task == Task::Classification) {
            for (const std::string& arch : cfg.architectures) {
                std::uint64_t seed = derive_seed(master_seed, 0x200, cfg.zoo_seeds.at(0));
                std::string id = arch + "#" + std::to_string(seed);
                Model m = [&] {
                    for (const ZooEntry& e : out.zoo)
                        if (e.id() == id) return load_checkpoint(e.checkpoint).model;
                    throw Error("pipeline: zoo entry not found: " + id);
                }();
                const CraftedSet& own = detail::find_set(sets, id, cfg.attacks.front());
                std::vector<Tensor> adv;
                for (const CraftedExample& ex : own.examples) adv.push_back(ex.res.x_adv);
                write_file(out.eval_dir / ("embeddings_" + arch + ".csv"),
                           embeddings_csv(m, ds, out.eval.noise.images, adv));
            }
        }
    }
    {
        detail::StageTimer t(out.manifest, "report");
        out.report = summarize(out.eval);
        write_report_files(out.eval_dir, out.report, "json");
        write_report_files(out.eval_dir, out.report, "csv");
        write_report_files(out.eval_dir, out.report, "md");
    }

    detail::record_tree(out.manifest, work_dir);
    write_file(work_dir / "run_manifest.json", out.manifest.to_json().dump(2) + "\n");
    return out;
}

}  // namespace advbench
