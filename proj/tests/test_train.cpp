#include <catch2/catch_amalgamated.hpp>

#include "advbench/rng.hpp"
#include "advbench/train.hpp"

using namespace advbench;

namespace {

// Two linearly separable 2-D blobs.
std::vector<Sample> blob_dataset(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Sample> out;
    for (std::size_t i = 0; i < n; ++i) {
        int label = static_cast<int>(i % 2);
        double cx = label == 0 ? 0.25 : 0.75;
        double cy = label == 0 ? 0.30 : 0.70;
        Tensor x({2}, {cx + rng.normal(0.0, 0.06), cy + rng.normal(0.0, 0.06)});
        out.push_back({std::move(x), LabelMap::scalar(label)});
    }
    return out;
}

Model blob_model(std::uint64_t seed) {
    ModelSpec spec;
    spec.input_shape = {2};
    spec.layers = {dense(8), relu()};
    spec.head = {HeadKind::Classification, 2};
    return Model::init(spec, seed);
}

}  // namespace

TEST_CASE("zero epochs leaves parameters untouched") {
    Model m = blob_model(1);
    TrainConfig cfg;
    cfg.epochs = 0;
    TrainResult r = train(m, blob_dataset(16, 3), cfg);
    for (const auto& [name, p] : m.params())
        CHECK(r.model.params().at(name).data == p.data);
    CHECK(r.epoch_loss.empty());
}

TEST_CASE("separable blobs train to >=0.99 accuracy") {
    auto data = blob_dataset(120, 5);
    TrainConfig cfg;
    cfg.optimizer = Optimizer::SgdMomentum;
    cfg.lr = 0.1;
    cfg.epochs = 50;
    cfg.batch_size = 16;
    cfg.seed = 9;
    TrainResult r = train(blob_model(2), data, cfg);
    CHECK(eval_accuracy_on(r.model, data) >= 0.99);
    // loss curve is recorded for every epoch
    REQUIRE(r.epoch_loss.size() == 50);
    CHECK(r.epoch_loss.back() < r.epoch_loss.front());
}

TEST_CASE("adam also converges on the blobs") {
    auto data = blob_dataset(120, 6);
    TrainConfig cfg;
    cfg.optimizer = Optimizer::Adam;
    cfg.lr = 0.01;
    cfg.epochs = 40;
    cfg.seed = 10;
    TrainResult r = train(blob_model(3), data, cfg);
    CHECK(eval_accuracy_on(r.model, data) >= 0.95);
}

TEST_CASE("same seed, same data: bit-identical parameters") {
    auto data = blob_dataset(64, 7);
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.seed = 1234;
    TrainResult a = train(blob_model(4), data, cfg);
    TrainResult b = train(blob_model(4), data, cfg);
    for (const auto& [name, p] : a.model.params())
        REQUIRE(b.model.params().at(name).data == p.data);
    REQUIRE(a.epoch_loss == b.epoch_loss);
}

TEST_CASE("divergence raises an error naming the epoch") {
    auto data = blob_dataset(32, 8);
    TrainConfig cfg;
    cfg.lr = 1e308;  // guaranteed overflow on the first update
    cfg.epochs = 50;
    cfg.seed = 2;
    CHECK_THROWS_WITH(train(blob_model(5), data, cfg),
                      Catch::Matchers::ContainsSubstring("diverged at epoch"));
}

TEST_CASE("invalid train configs are rejected") {
    TrainConfig cfg;
    cfg.lr = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.lr = 0.01;
    cfg.dice_lambda = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.dice_lambda = 0.0;
    CHECK_THROWS_AS(train(blob_model(6), {}, cfg), Error);
}

TEST_CASE("flip augmentation keeps image and mask aligned") {
    // 2x2 image with a distinctive corner; labels follow the image
    Tensor img({2, 2, 1}, {1.0, 0.0, 0.0, 0.0});
    LabelMap lab({2, 2}, {1, 0, 0, 0});
    Tensor fh = detail::flip_image(img, true, false);
    LabelMap lh = detail::flip_labels(lab, true, false);
    CHECK(fh.data == std::vector<double>{0.0, 1.0, 0.0, 0.0});
    CHECK(lh.data == std::vector<int>{0, 1, 0, 0});
    Tensor fv = detail::flip_image(img, false, true);
    CHECK(fv.data == std::vector<double>{0.0, 0.0, 1.0, 0.0});
    Tensor fb = detail::flip_image(img, true, true);
    CHECK(fb.data == std::vector<double>{0.0, 0.0, 0.0, 1.0});
}
