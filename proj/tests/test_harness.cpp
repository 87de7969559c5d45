#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "advbench/pipeline.hpp"

using namespace advbench;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const char* tag) {
        path = fs::temp_directory_path() / (std::string("advbench-harness-") + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

ordered_json load_cfg(const char* name) {
    ordered_json cfg = parse_config_text(read_file(fs::path(ADVBENCH_SOURCE_DIR) / "configs" / name));
    validate_config(cfg, harness_config_schema());
    return cfg;
}

}  // namespace

TEST_CASE("micro classification pipeline end to end") {
    TempDir tmp("cls");
    ordered_json cfg = load_cfg("micro_cls.cfg");
    PipelineResult r = run_pipeline(cfg, 42, tmp.path, 2);

    // 2 architectures x 2 seeds -> 4 checkpoints
    REQUIRE(r.zoo.size() == 4);
    for (const ZooEntry& e : r.zoo) REQUIRE(fs::exists(e.checkpoint / "manifest.json"));

    Dataset ds = load_dataset(r.data_dir);
    std::vector<CraftedSet> sets = load_crafted_store(r.crafted_dir, ds);
    // crafted store row count = |test set| x |zoo| x |attacks|
    REQUIRE(sets.size() == 4 * 2);
    std::size_t total = 0;
    for (const CraftedSet& s : sets) {
        REQUIRE(s.examples.size() == ds.test_idx.size());
        total += s.examples.size();
        for (const CraftedExample& ex : s.examples) {
            for (double v : ex.res.x_adv.data) {
                REQUIRE(v >= 0.0);
                REQUIRE(v <= 1.0);
            }
        }
    }
    REQUIRE(total == ds.test_idx.size() * 4 * 2);

    // report structure: one row per condition per architecture + drops
    REQUIRE(r.report.table.rows.size() == 2 * (2 + 2));  // clean, noisy, 2 attacks
    REQUIRE(r.report.table.drops.size() == 2);
    r.report.table.check_consistency();

    // matrices are complete and in [0,1]
    REQUIRE(r.report.matrices.size() == 2);
    for (const TransferMatrix& tm : r.report.matrices) {
        REQUIRE(tm.cells.size() == 2);
        for (const auto& row : tm.cells) {
            REQUIRE(row.size() == 2);
            for (double v : row) {
                REQUIRE(v >= 0.0);
                REQUIRE(v <= 1.0);
            }
        }
    }

    // diagonal (same arch, other seed) cannot beat clean by more than slack
    for (const TransferMatrix& tm : r.report.matrices)
        for (std::size_t i = 0; i < tm.archs.size(); ++i)
            REQUIRE(tm.cells[i][i] <= r.eval.clean.at(tm.archs[i]) + 0.02);

    // stored (mse, ssim) equal metrics-module recomputation exactly
    for (const CraftedSet& s : sets)
        for (const CraftedExample& ex : s.examples) {
            const Tensor& x = ds.samples[ds.test_idx[ex.test_pos]].image;
            REQUIRE(ex.res.mse == mse(x, ex.res.x_adv));
            if (!std::isnan(ex.res.ssim)) REQUIRE(ex.res.ssim == ssim(x, ex.res.x_adv));
        }

    // embeddings: row count = 3 conditions x test size, constant dimensionality
    for (const std::string& arch : {std::string("mlp"), std::string("cnn")}) {
        std::string csv = read_file(r.eval_dir / ("embeddings_" + arch + ".csv"));
        std::size_t lines = std::count(csv.begin(), csv.end(), '\n');
        REQUIRE(lines == 1 + 3 * ds.test_idx.size());
        std::size_t first_commas = 0, last_commas = 0;
        std::size_t first_end = csv.find('\n');
        for (std::size_t i = 0; i < first_end; ++i) first_commas += csv[i] == ',';
        std::size_t last_start = csv.rfind('\n', csv.size() - 2);
        for (std::size_t i = last_start; i < csv.size(); ++i) last_commas += csv[i] == ',';
        REQUIRE(first_commas == last_commas);
    }

    // reports exist in all three formats
    REQUIRE(fs::exists(r.eval_dir / "report.json"));
    REQUIRE(fs::exists(r.eval_dir / "report.csv"));
    REQUIRE(fs::exists(r.eval_dir / "report.md"));
    REQUIRE(fs::exists(tmp.path / "run_manifest.json"));
}

TEST_CASE("pipeline reruns are byte-identical, independent of thread count") {
    TempDir a("det-a"), b("det-b");
    ordered_json cfg = load_cfg("micro_cls.cfg");
    run_pipeline(cfg, 7, a.path, 1);
    run_pipeline(cfg, 7, b.path, 2);

    // every artifact except the timing manifest must match byte for byte
    std::vector<fs::path> rel;
    for (const auto& entry : fs::recursive_directory_iterator(a.path))
        if (entry.is_regular_file() && entry.path().filename() != "run_manifest.json")
            rel.push_back(fs::relative(entry.path(), a.path));
    REQUIRE(!rel.empty());
    for (const fs::path& p : rel) {
        INFO(p.string());
        REQUIRE(fs::exists(b.path / p));
        REQUIRE(read_file(a.path / p) == read_file(b.path / p));
    }
}

TEST_CASE("micro segmentation pipeline end to end") {
    TempDir tmp("seg");
    ordered_json cfg = load_cfg("micro_seg.cfg");
    PipelineResult r = run_pipeline(cfg, 11, tmp.path, 2);

    REQUIRE(r.zoo.size() == 4);  // 2 archs x 2 seeds
    REQUIRE(r.report.matrices.size() == 1);
    REQUIRE(r.report.matrices[0].attack == "dag-a");
    r.report.table.check_consistency();

    // per-structure dice exported for every architecture
    REQUIRE(r.report.per_class_dice_clean.size() == 2);
    for (const auto& [arch, v] : r.report.per_class_dice_clean) REQUIRE(v.size() == 4);

    // DAG traces were written
    Dataset ds = load_dataset(r.data_dir);
    bool found_trace = false;
    for (const auto& entry : fs::recursive_directory_iterator(r.crafted_dir))
        if (entry.path().filename().string().rfind("trace_", 0) == 0) found_trace = true;
    REQUIRE(found_trace);

    // noise targets recorded per test image
    REQUIRE(r.eval.noise.target_ssim.size() == ds.test_idx.size());
}

TEST_CASE("zoo index and crafted store round-trip through the filesystem") {
    TempDir tmp("roundtrip");
    ordered_json cfg = load_cfg("micro_cls.cfg");
    PipelineResult r = run_pipeline(cfg, 3, tmp.path, 2);

    ZooIndex zi = load_zoo_index(r.zoo_dir);
    REQUIRE(zi.entries.size() == 4);
    REQUIRE(config_hash(zi.config_json) == config_hash(cfg));
    for (std::size_t i = 0; i < zi.entries.size(); ++i) {
        REQUIRE(zi.entries[i].id() == r.zoo[i].id());
        REQUIRE(zi.entries[i].clean_score == r.zoo[i].clean_score);
    }
}
