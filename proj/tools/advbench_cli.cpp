// advbench command line: dataset generation, zoo training, adversarial
// crafting, black-box evaluation and report export, driven by one config
// file. Every stage derives its randomness from the global --seed, so a
// fixed (config, seed) pair reproduces all outputs byte for byte.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "advbench/pipeline.hpp"

using namespace advbench;

namespace {

ordered_json load_config_file(const std::string& path) {
    ordered_json cfg = parse_config_text(read_file(path));
    validate_config(cfg, harness_config_schema());
    return cfg;
}

RunManifest stage_manifest(const std::string& stage, const ordered_json& cfg, std::uint64_t seed) {
    RunManifest m;
    m.stage = stage;
    m.config_hash = config_hash(cfg);
    m.master_seed = seed;
    return m;
}

void finish_manifest(RunManifest& m, const fs::path& out_dir) {
    detail::record_tree(m, out_dir);
    write_file(out_dir / "run_manifest.json", m.to_json().dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"advbench: adversarial-robustness benchmarking for desk-scale models"};
    app.require_subcommand(1);

    std::uint64_t seed = 42;
    int threads = 4;
    app.add_option("--seed", seed, "master seed for every stage")->capture_default_str();
    app.add_option("--threads", threads, "worker threads for per-image stages")->capture_default_str();

    std::string spec_path, out_dir, config_path, data_dir, zoo_dir, crafted_dir, in_dir;
    std::string attacks_csv, format = "csv";

    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    gen->add_option("--spec", spec_path, "config file with a [data] table")->required();
    gen->add_option("--out", out_dir, "output dataset directory")->required();

    CLI::App* tr = app.add_subcommand("train", "train the model zoo");
    tr->add_option("--config", config_path, "experiment config file")->required();
    tr->add_option("--data", data_dir, "dataset directory from gen-data")->required();
    tr->add_option("--out", out_dir, "output zoo directory")->required();

    CLI::App* cr = app.add_subcommand("craft", "craft adversarial examples on the test split");
    cr->add_option("--zoo", zoo_dir, "zoo directory from train")->required();
    cr->add_option("--attacks", attacks_csv, "comma-separated list (default: config's enabled set)");
    cr->add_option("--out", out_dir, "output crafted-store directory")->required();
    cr->add_option("--data", data_dir, "override the dataset directory recorded in the zoo");

    CLI::App* ev = app.add_subcommand("evaluate", "black-box transfer evaluation + noise contrast");
    ev->add_option("--zoo", zoo_dir, "zoo directory")->required();
    ev->add_option("--crafted", crafted_dir, "crafted-store directory")->required();
    ev->add_option("--out", out_dir, "output evaluation directory")->required();

    CLI::App* rp = app.add_subcommand("report", "write reports from an evaluation directory");
    rp->add_option("--in", in_dir, "evaluation directory")->required();
    rp->add_option("--format", format, "csv|json|md")->capture_default_str();

    try {
        app.parse(argc, argv);

        if (gen->parsed()) {
            ordered_json cfg = load_config_file(spec_path);
            RunManifest m = stage_manifest("gen-data", cfg, seed);
            HarnessConfig hc = harness_config_from_json(cfg);
            DatasetSpec dspec = hc.data;
            dspec.seed = derive_seed(seed, 0xDA7A, hc.data.seed);
            Dataset ds;
            {
                detail::StageTimer t(m, "gen-data");
                ds = gen_dataset(dspec);
                save_dataset(out_dir, ds);
            }
            finish_manifest(m, out_dir);
            std::printf("wrote %zu samples (%zu train / %zu test) to %s\n", ds.samples.size(),
                        ds.train_idx.size(), ds.test_idx.size(), out_dir.c_str());
        } else if (tr->parsed()) {
            ordered_json cfg = load_config_file(config_path);
            HarnessConfig hc = harness_config_from_json(cfg);
            Dataset ds = load_dataset(data_dir);
            RunManifest m = stage_manifest("train", cfg, seed);
            std::vector<ZooEntry> zoo;
            {
                detail::StageTimer t(m, "train");
                zoo = train_zoo(hc, ds, out_dir, seed, threads);
                save_zoo_index(out_dir, zoo, data_dir, cfg);
            }
            finish_manifest(m, out_dir);
            for (const ZooEntry& e : zoo)
                std::printf("%-18s clean score %.3f\n", e.id().c_str(), e.clean_score);
        } else if (cr->parsed()) {
            ZooIndex zi = load_zoo_index(zoo_dir);
            HarnessConfig hc = harness_config_from_json(zi.config_json);
            if (!attacks_csv.empty()) {
                hc.attacks.clear();
                std::size_t pos = 0;
                while (pos <= attacks_csv.size()) {
                    std::size_t comma = attacks_csv.find(',', pos);
                    std::string a = attacks_csv.substr(
                        pos, comma == std::string::npos ? std::string::npos : comma - pos);
                    if (!a.empty()) hc.attacks.push_back(a);
                    pos = comma == std::string::npos ? attacks_csv.size() + 1 : comma + 1;
                }
            }
            Dataset ds = load_dataset(data_dir.empty() ? zi.data_dir : fs::path(data_dir));
            RunManifest m = stage_manifest("craft", zi.config_json, seed);
            std::vector<CraftedSet> sets;
            {
                detail::StageTimer t(m, "craft");
                sets = craft_suite(zi.entries, ds, hc, out_dir, seed, threads);
            }
            finish_manifest(m, out_dir);
            std::printf("crafted %zu sets x %zu examples into %s\n", sets.size(),
                        sets.empty() ? 0 : sets[0].examples.size(), out_dir.c_str());
        } else if (ev->parsed()) {
            ZooIndex zi = load_zoo_index(zoo_dir);
            HarnessConfig hc = harness_config_from_json(zi.config_json);
            Dataset ds = load_dataset(zi.data_dir);
            std::vector<CraftedSet> sets = load_crafted_store(crafted_dir, ds);
            RunManifest m = stage_manifest("evaluate", zi.config_json, seed);
            EvalResult result;
            {
                detail::StageTimer t(m, "evaluate");
                result = transfer_eval(hc, zi.entries, ds, sets, seed, threads);
                fs::create_directories(out_dir);
                write_eval_result(out_dir, result);
                if (ds.task == Task::Classification) {
                    for (const std::string& arch : hc.architectures) {
                        std::uint64_t aseed = derive_seed(seed, 0x200, hc.zoo_seeds.at(0));
                        std::string id = arch + "#" + std::to_string(aseed);
                        for (const ZooEntry& e : zi.entries)
                            if (e.id() == id) {
                                Model model = load_checkpoint(e.checkpoint).model;
                                const CraftedSet& own = detail::find_set(sets, id, hc.attacks.front());
                                std::vector<Tensor> adv;
                                for (const CraftedExample& ex : own.examples)
                                    adv.push_back(ex.res.x_adv);
                                write_file(fs::path(out_dir) / ("embeddings_" + arch + ".csv"),
                                           embeddings_csv(model, ds, result.noise.images, adv));
                            }
                    }
                }
            }
            finish_manifest(m, out_dir);
            for (const std::string& w : result.warnings) std::printf("warning: %s\n", w.c_str());
            std::printf("evaluation written to %s\n", out_dir.c_str());
        } else if (rp->parsed()) {
            EvalResult evr = read_eval_result(in_dir);
            RobustnessReport rep = summarize(evr);
            write_report_files(in_dir, rep, format);
            if (format == "md") std::fputs(report_to_markdown(rep).c_str(), stdout);
            std::printf("report.%s written to %s\n", format.c_str(), in_dir.c_str());
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
