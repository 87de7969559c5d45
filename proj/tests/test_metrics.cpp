#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "advbench/metrics.hpp"
#include "advbench/rng.hpp"

using namespace advbench;

TEST_CASE("accuracy basics") {
    auto L = [](int v) { return LabelMap::scalar(v); };
    CHECK(accuracy({L(0), L(1), L(2)}, {L(0), L(1), L(2)}) == 1.0);
    CHECK(accuracy({L(0), L(1)}, {L(1), L(0)}) == 0.0);
    CHECK(accuracy({L(0), L(1), L(2), L(0)}, {L(0), L(1), L(2), L(1)}) == 0.75);
    CHECK_THROWS_AS(accuracy({}, {}), Error);
}

TEST_CASE("accuracy is invariant under joint permutation") {
    Rng rng(4);
    std::vector<LabelMap> preds, truths;
    for (int i = 0; i < 50; ++i) {
        preds.push_back(LabelMap::scalar(static_cast<int>(rng.below(3))));
        truths.push_back(LabelMap::scalar(static_cast<int>(rng.below(3))));
    }
    double base = accuracy(preds, truths);
    std::vector<std::size_t> order(50);
    for (std::size_t i = 0; i < 50; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<LabelMap> p2, t2;
    for (std::size_t i : order) {
        p2.push_back(preds[i]);
        t2.push_back(truths[i]);
    }
    CHECK(accuracy(p2, t2) == base);
}

TEST_CASE("dice score basics") {
    LabelMap a({4}, {1, 1, 0, 0});
    CHECK(dice(a, a, 1) == 1.0);
    LabelMap b({4}, {0, 0, 1, 1});
    CHECK(dice(a, b, 1) == 0.0);
    LabelMap c({4}, {1, 0, 1, 0});
    CHECK(dice(a, c, 1) == 0.5);  // |A|=|B|=2, overlap 1
    // both sides empty -> 1 by convention
    CHECK(dice(a, a, 7) == 1.0);
}

TEST_CASE("dice is symmetric and bounded") {
    Rng rng(11);
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<int> pa(12), pb(12);
        for (auto& v : pa) v = static_cast<int>(rng.below(3));
        for (auto& v : pb) v = static_cast<int>(rng.below(3));
        LabelMap a({12}, pa), b({12}, pb);
        int cls = static_cast<int>(rng.below(3));
        double d1 = dice(a, b, cls), d2 = dice(b, a, cls);
        REQUIRE(d1 == d2);
        REQUIRE(d1 >= 0.0);
        REQUIRE(d1 <= 1.0);
    }
}

TEST_CASE("mean dice excludes background by default") {
    LabelMap pred({4}, {0, 1, 2, 0});
    LabelMap truth({4}, {0, 1, 2, 2});
    double d1 = dice(pred, truth, 1), d2 = dice(pred, truth, 2);
    CHECK(mean_dice(pred, truth, 3) == Catch::Approx(0.5 * (d1 + d2)));
}

TEST_CASE("mse basics") {
    Tensor x({4}, {0.1, 0.2, 0.3, 0.4});
    CHECK(mse(x, x) == 0.0);
    Tensor y = x;
    for (double& v : y.data) v += 0.1;
    CHECK(mse(x, y) == Catch::Approx(0.01).epsilon(1e-12));
}

namespace {
Tensor textured_image(std::size_t H, std::size_t W, std::uint64_t seed) {
    Rng rng(seed);
    Tensor img = Tensor::zeros({H, W});
    for (std::size_t r = 0; r < H; ++r)
        for (std::size_t c = 0; c < W; ++c) {
            double v = 0.35 + 0.25 * std::sin(0.5 * static_cast<double>(r)) +
                       0.2 * std::cos(0.3 * static_cast<double>(c)) + rng.uniform(-0.05, 0.05);
            img.at2(r, c) = std::clamp(v, 0.0, 1.0);
        }
    return img;
}
}  // namespace

TEST_CASE("ssim of an image with itself is exactly 1") {
    Tensor img = textured_image(16, 16, 5);
    CHECK(ssim(img, img) == 1.0);
}

TEST_CASE("ssim of two constant images matches the closed form") {
    Tensor a = Tensor::full({12, 12}, 0.5);
    Tensor b = Tensor::full({12, 12}, 0.6);
    // zero variances: ((2*0.3 + 1e-4) / (0.25 + 0.36 + 1e-4)) * (C2/C2)
    double expected = (2.0 * 0.5 * 0.6 + 1e-4) / (0.25 + 0.36 + 1e-4);
    CHECK_THAT(ssim(a, b), Catch::Matchers::WithinAbs(expected, 1e-12));
    CHECK(ssim(a, b) == Catch::Approx(0.9836).margin(5e-5));
}

TEST_CASE("ssim is symmetric and at most 1") {
    Rng rng(17);
    Tensor a = textured_image(16, 16, 21);
    for (int rep = 0; rep < 50; ++rep) {
        Tensor b = a;
        for (double& v : b.data) v = std::clamp(v + rng.uniform(-0.2, 0.2), 0.0, 1.0);
        double s1 = ssim(a, b), s2 = ssim(b, a);
        REQUIRE(s1 == s2);
        REQUIRE(s1 <= 1.0);
    }
}

TEST_CASE("ssim rejects images smaller than the window") {
    Tensor small = Tensor::full({8, 8}, 0.5);
    CHECK_THROWS_AS(ssim(small, small), Error);
    Tensor vec = Tensor::full({32}, 0.5);
    CHECK_THROWS_AS(ssim(vec, vec), Error);
}

TEST_CASE("roc/auc basics") {
    RocCurve sep = roc_auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
    CHECK(sep.auc == 1.0);
    RocCurve flat = roc_auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0});
    CHECK(flat.auc == 0.5);
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), Error);
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {0, 2}), Error);
}

TEST_CASE("auc equals the Mann-Whitney pair statistic") {
    Rng rng(23);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> scores(50);
        std::vector<int> truths(50);
        for (std::size_t i = 0; i < 50; ++i) {
            scores[i] = std::round(rng.uniform01() * 20.0) / 20.0;  // force some ties
            truths[i] = rng.uniform01() < 0.4 ? 1 : 0;
        }
        std::size_t n_pos = 0, n_neg = 0;
        for (int t : truths) t ? ++n_pos : ++n_neg;
        if (n_pos == 0 || n_neg == 0) continue;

        double u = 0.0;
        for (std::size_t i = 0; i < 50; ++i)
            for (std::size_t j = 0; j < 50; ++j) {
                if (truths[i] != 1 || truths[j] != 0) continue;
                if (scores[i] > scores[j]) u += 1.0;
                else if (scores[i] == scores[j]) u += 0.5;
            }
        double expected = u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
        REQUIRE_THAT(roc_auc(scores, truths).auc, Catch::Matchers::WithinAbs(expected, 1e-12));
    }
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
    Rng rng(29);
    std::vector<double> scores(60);
    std::vector<int> truths(60);
    for (std::size_t i = 0; i < 60; ++i) {
        scores[i] = rng.uniform(-2.0, 2.0);
        truths[i] = rng.uniform01() < 0.5 ? 1 : 0;
    }
    truths[0] = 1;
    truths[1] = 0;
    double base = roc_auc(scores, truths).auc;
    std::vector<double> warped = scores;
    for (double& v : warped) v = std::exp(0.7 * v) + 3.0;
    CHECK(roc_auc(warped, truths).auc == base);
}

TEST_CASE("drop_points reproduces the published arithmetic") {
    CHECK_THAT(drop_points(0.862, 0.453), Catch::Matchers::WithinAbs(40.92, 0.05));
    CHECK_THAT(drop_points(0.710, 0.641), Catch::Matchers::WithinAbs(6.897, 0.05));
    CHECK(drop_points(0.5, 0.5) == 0.0);
}

TEST_CASE("drop_points is linear over chained comparisons") {
    Rng rng(31);
    for (int rep = 0; rep < 1000; ++rep) {
        double a = rng.uniform01(), b = rng.uniform01(), c = rng.uniform01();
        REQUIRE(std::fabs(drop_points(a, b) + drop_points(b, c) - drop_points(a, c)) < 1e-9);
    }
}

TEST_CASE("score table consistency check") {
    ScoreTable t;
    t.rows = {{"m1", "clean", 0.9},
              {"m1", "noisy", 0.85},
              {"m1", "attack-fgsm", 0.5},
              {"m1", "attack-deepfool", 0.6}};
    t.drops["m1"] = drop_points(0.9, 0.55);
    t.check_consistency();
    t.drops["m1"] = 12.0;
    CHECK_THROWS_AS(t.check_consistency(), Error);
}
