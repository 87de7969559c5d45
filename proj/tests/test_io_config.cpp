#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "advbench/checkpoint.hpp"
#include "advbench/config.hpp"
#include "advbench/rng.hpp"
#include "advbench/synthdata.hpp"
#include "advbench/tnsr.hpp"

using namespace advbench;

namespace {
struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("advbench-test-" + std::to_string(Rng(static_cast<std::uint64_t>(
                                                          std::chrono::steady_clock::now().time_since_epoch().count()))
                                                      .next_u64()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};
}  // namespace

TEST_CASE("tnsr encoding is bit-exact against a hand-built reference") {
    Tensor t({2, 1}, {1.0, -2.5});
    std::string bytes = tnsr_encode(t);
    // header: magic, version 1, dtype 2 (f64), rank 2, dims 2 and 1 (LE)
    const unsigned char expect_header[] = {'T', 'N', 'S', 'R', 1, 2, 2,
                                           2,   0,   0,   0,   1, 0, 0, 0};
    REQUIRE(bytes.size() == 15 + 16);
    for (std::size_t i = 0; i < sizeof(expect_header); ++i)
        REQUIRE(static_cast<unsigned char>(bytes[i]) == expect_header[i]);
    // payload: 1.0 = 0x3FF0000000000000 little-endian
    const unsigned char one_le[] = {0, 0, 0, 0, 0, 0, 0xF0, 0x3F};
    for (std::size_t i = 0; i < 8; ++i)
        REQUIRE(static_cast<unsigned char>(bytes[15 + i]) == one_le[i]);

    Tensor back = tnsr_decode(bytes);
    REQUIRE(back.shape == t.shape);
    REQUIRE(back.data == t.data);
}

TEST_CASE("tnsr roundtrip preserves every bit for random tensors") {
    Rng rng(77);
    for (int rep = 0; rep < 50; ++rep) {
        Shape shape;
        std::size_t rank = 1 + rng.below(3);
        for (std::size_t i = 0; i < rank; ++i) shape.push_back(1 + rng.below(5));
        Tensor t = Tensor::zeros(shape);
        for (double& v : t.data) v = rng.uniform(-100.0, 100.0);
        Tensor back = tnsr_decode(tnsr_encode(t));
        REQUIRE(back.shape == t.shape);
        REQUIRE(back.data == t.data);
    }
}

TEST_CASE("tnsr f32 mode narrows the payload") {
    Tensor t({3}, {0.5, 0.25, 1.0});
    std::string bytes = tnsr_encode(t, true);
    REQUIRE(bytes.size() == 11 + 12);
    Tensor back = tnsr_decode(bytes);
    REQUIRE(back.data == t.data);  // representable exactly in f32
}

TEST_CASE("tnsr rejects malformed input") {
    CHECK_THROWS_WITH(tnsr_decode("XXXXXXX"), Catch::Matchers::ContainsSubstring("magic"));
    CHECK_THROWS_WITH(tnsr_decode("XXXX"), Catch::Matchers::ContainsSubstring("truncated"));
    Tensor t({2}, {1.0, 2.0});
    std::string bytes = tnsr_encode(t);
    bytes.pop_back();
    CHECK_THROWS_WITH(tnsr_decode(bytes), Catch::Matchers::ContainsSubstring("size mismatch"));
}

TEST_CASE("containers save and load named tensors with metadata") {
    TempDir tmp;
    std::map<std::string, Tensor> tensors;
    tensors.emplace("alpha", Tensor({2}, {1.0, 2.0}));
    tensors.emplace("beta/gamma", Tensor({1, 1}, {3.5}));
    ordered_json meta;
    meta["note"] = "test";
    save_container(tmp.path / "c", tensors, meta);
    Container c = load_container(tmp.path / "c");
    REQUIRE(c.tensors.size() == 2);
    CHECK(c.tensors.at("alpha").data == std::vector<double>{1.0, 2.0});
    CHECK(c.tensors.at("beta/gamma").data == std::vector<double>{3.5});
    CHECK(c.meta.at("note") == "test");
}

TEST_CASE("checkpoints roundtrip the model exactly") {
    ModelSpec spec;
    spec.input_shape = {4, 4, 1};
    spec.layers = {conv3x3(2), relu(), maxpool2(), conv3x3(3), upsample2(), skip_concat(1), conv3x3(2)};
    spec.head = {HeadKind::Segmentation, 3};
    Model m = Model::init(spec, 99);
    TrainConfig cfg;
    cfg.optimizer = Optimizer::Adam;
    cfg.lr = 0.001;
    cfg.dice_lambda = 0.4;
    cfg.seed = 7;

    TempDir tmp;
    save_checkpoint(tmp.path / "ckpt", m, cfg, {{"clean_score", 0.91}});
    Checkpoint back = load_checkpoint(tmp.path / "ckpt");

    REQUIRE(back.model.spec().layers.size() == spec.layers.size());
    for (const auto& [name, p] : m.params())
        REQUIRE(back.model.params().at(name).data == p.data);
    CHECK(back.train_config.optimizer == Optimizer::Adam);
    CHECK(back.train_config.dice_lambda == 0.4);
    CHECK(back.extra.at("clean_score") == 0.91);

    Rng rng(5);
    Tensor x = Tensor::zeros({4, 4, 1});
    for (double& v : x.data) v = rng.uniform01();
    CHECK(m.forward(x).data == back.model.forward(x).data);
}

TEST_CASE("datasets roundtrip through the container format") {
    DatasetSpec spec;
    spec.task = Task::Segmentation;
    spec.n_samples = 12;
    spec.seed = 13;
    Dataset ds = gen_segmentation(spec);
    TempDir tmp;
    save_dataset(tmp.path / "data", ds);
    Dataset back = load_dataset(tmp.path / "data");
    REQUIRE(back.samples.size() == ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        REQUIRE(back.samples[i].image.data == ds.samples[i].image.data);
        REQUIRE(back.samples[i].label == ds.samples[i].label);
    }
    CHECK(back.train_idx == ds.train_idx);
    CHECK(back.test_idx == ds.test_idx);
    CHECK(back.groups == ds.groups);
    CHECK(back.n_classes == ds.n_classes);
}

TEST_CASE("config parser handles tables, arrays and comments") {
    std::string text = R"(# experiment
[data]
task = "classification"   # inline comment
n_samples = 240
noise_floor = 0.04
[zoo]
architectures = ["mlp", "cnn"]
seeds = [1, 2]
[attacks.fgsm]
enabled = true
ssim_band = [0.97, 0.99]
)";
    auto cfg = parse_config_text(text);
    CHECK(cfg.at("data").at("task") == "classification");
    CHECK(cfg.at("data").at("n_samples") == 240);
    CHECK(cfg.at("data").at("noise_floor") == 0.04);
    CHECK(cfg.at("zoo").at("architectures").size() == 2);
    CHECK(cfg.at("attacks").at("fgsm").at("enabled") == true);
    CHECK(cfg.at("attacks").at("fgsm").at("ssim_band")[0] == 0.97);
}

TEST_CASE("config parser rejects malformed lines") {
    CHECK_THROWS_WITH(parse_config_text("just a line"), Catch::Matchers::ContainsSubstring("key = value"));
    CHECK_THROWS_WITH(parse_config_text("[unclosed\n"), Catch::Matchers::ContainsSubstring("table"));
    CHECK_THROWS_WITH(parse_config_text("a = 1\na = 2\n"), Catch::Matchers::ContainsSubstring("duplicate"));
    CHECK_THROWS_WITH(parse_config_text("a = @?\n"), Catch::Matchers::ContainsSubstring("cannot parse"));
}

TEST_CASE("schema validation rejects unknown keys and wrong types") {
    ordered_json schema = {{"data", {{"task", "string"}, {"n_samples", "int"}, {"floor", "float"}}},
                           {"flags", {{"verbose", "bool"}, {"names", "string[]"}}}};
    auto good = parse_config_text("[data]\ntask = \"x\"\nn_samples = 3\nfloor = 1\n[flags]\nverbose = false\nnames = [\"a\"]\n");
    validate_config(good, schema);  // int where float expected is fine

    auto unknown = parse_config_text("[data]\nbogus = 1\n");
    CHECK_THROWS_WITH(validate_config(unknown, schema),
                      Catch::Matchers::ContainsSubstring("unknown key 'data.bogus'"));
    auto wrong = parse_config_text("[data]\nn_samples = \"three\"\n");
    CHECK_THROWS_WITH(validate_config(wrong, schema), Catch::Matchers::ContainsSubstring("must be a int"));
}

TEST_CASE("config hash is stable and content-sensitive") {
    auto a = parse_config_text("[x]\nv = 1\n");
    auto b = parse_config_text("[x]\nv = 1\n");
    auto c = parse_config_text("[x]\nv = 2\n");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(c));
}
