#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "advbench/synthdata.hpp"

using namespace advbench;

TEST_CASE("classification data is deterministic by seed") {
    DatasetSpec spec;
    spec.task = Task::Classification;
    spec.n_samples = 30;
    spec.seed = 11;
    Dataset a = gen_classification(spec), b = gen_classification(spec);
    REQUIRE(a.samples.size() == 30);
    for (std::size_t i = 0; i < 30; ++i) {
        REQUIRE(a.samples[i].image.data == b.samples[i].image.data);
        REQUIRE(a.samples[i].label == b.samples[i].label);
    }
    REQUIRE(a.train_idx == b.train_idx);
    spec.seed = 12;
    Dataset c = gen_classification(spec);
    CHECK(a.samples[0].image.data != c.samples[0].image.data);
}

TEST_CASE("classification labels are balanced and intensities in [0,1]") {
    DatasetSpec spec;
    spec.task = Task::Classification;
    spec.n_samples = 300;
    spec.seed = 5;
    Dataset ds = gen_classification(spec);
    int counts[3] = {0, 0, 0};
    for (const Sample& s : ds.samples) {
        ++counts[s.label.label()];
        for (double v : s.image.data) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
    }
    CHECK(counts[0] == 100);
    CHECK(counts[1] == 100);
    CHECK(counts[2] == 100);
}

TEST_CASE("splits are disjoint and exhaustive") {
    DatasetSpec spec;
    spec.task = Task::Classification;
    spec.n_samples = 120;
    spec.seed = 3;
    Dataset ds = gen_classification(spec);
    std::set<std::size_t> train(ds.train_idx.begin(), ds.train_idx.end());
    std::set<std::size_t> test(ds.test_idx.begin(), ds.test_idx.end());
    CHECK(train.size() + test.size() == 120);
    for (std::size_t i : test) CHECK(train.count(i) == 0);
    CHECK(ds.train_idx.size() == 60);  // 50/50 default
}

TEST_CASE("a two-statistic threshold rule classifies the blobs") {
    DatasetSpec spec;
    spec.task = Task::Classification;
    spec.n_samples = 240;
    spec.seed = 21;
    Dataset ds = gen_classification(spec);

    // train thresholds on image means over the train split
    double class_mean[3] = {0, 0, 0};
    int class_n[3] = {0, 0, 0};
    auto image_mean = [](const Tensor& img) {
        double s = 0.0;
        for (double v : img.data) s += v;
        return s / static_cast<double>(img.numel());
    };
    for (std::size_t i : ds.train_idx) {
        int y = ds.samples[i].label.label();
        class_mean[y] += image_mean(ds.samples[i].image);
        ++class_n[y];
    }
    for (int c = 0; c < 3; ++c) class_mean[c] /= class_n[c];
    REQUIRE(class_mean[0] < class_mean[1]);
    REQUIRE(class_mean[1] < class_mean[2]);
    double thr01 = 0.5 * (class_mean[0] + class_mean[1]);
    double thr12 = 0.5 * (class_mean[1] + class_mean[2]);

    int hits = 0;
    for (std::size_t i : ds.test_idx) {
        double m = image_mean(ds.samples[i].image);
        int pred = m < thr01 ? 0 : (m < thr12 ? 1 : 2);
        hits += pred == ds.samples[i].label.label();
    }
    double acc = static_cast<double>(hits) / static_cast<double>(ds.test_idx.size());
    CHECK(acc >= 0.80);
}

TEST_CASE("segmentation data: determinism, mask validity, class coverage") {
    DatasetSpec spec;
    spec.task = Task::Segmentation;
    spec.n_samples = 48;
    spec.seed = 31;
    Dataset a = gen_segmentation(spec), b = gen_segmentation(spec);
    REQUIRE(a.n_classes == 5);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        REQUIRE(a.samples[i].image.data == b.samples[i].image.data);
        REQUIRE(a.samples[i].label == b.samples[i].label);
    }

    int images_with_class[5] = {0, 0, 0, 0, 0};
    for (const Sample& s : a.samples) {
        bool seen[5] = {};
        for (int v : s.label.data) {
            REQUIRE(v >= 0);
            REQUIRE(v < 5);
            seen[v] = true;
        }
        for (int c = 0; c < 5; ++c) images_with_class[c] += seen[c];
        for (double v : s.image.data) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
    }
    // every foreground class present in >= 90% of images
    for (int c = 1; c < 5; ++c)
        CHECK(static_cast<double>(images_with_class[c]) >= 0.9 * 48.0);
}

TEST_CASE("segmentation split respects volume grouping") {
    DatasetSpec spec;
    spec.task = Task::Segmentation;
    spec.n_samples = 40;
    spec.seed = 17;
    Dataset ds = gen_segmentation(spec);
    std::set<std::size_t> train(ds.train_idx.begin(), ds.train_idx.end());
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        for (std::size_t j = 0; j < ds.samples.size(); ++j)
            if (ds.groups[i] == ds.groups[j])
                REQUIRE(train.count(i) == train.count(j));  // same volume, same side
    CHECK(ds.train_idx.size() + ds.test_idx.size() == 40);
    CHECK(ds.test_idx.size() >= 4);
}
