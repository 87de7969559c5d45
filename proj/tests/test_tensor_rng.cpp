#include <catch2/catch_amalgamated.hpp>

#include "advbench/rng.hpp"
#include "advbench/tensor.hpp"

using namespace advbench;

TEST_CASE("tensor shape/data consistency is enforced") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), Error);
    Tensor t = Tensor::zeros({2, 3});
    CHECK(t.numel() == 6);
    CHECK(t.rank() == 2);
}

TEST_CASE("scalar label maps") {
    LabelMap m = LabelMap::scalar(2);
    CHECK(m.numel() == 1);
    CHECK(m.label() == 2);
    CHECK_THROWS_AS(m.check_classes(2), Error);
    m.check_classes(3);
}

TEST_CASE("clip01 clamps into the unit box") {
    Tensor t({4}, {-0.5, 0.25, 1.5, 1.0});
    Tensor c = clip01(t);
    CHECK(c.data == std::vector<double>{0.0, 0.25, 1.0, 1.0});
}

TEST_CASE("rng streams are deterministic and independent") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c = Rng(42).derive(1), d = Rng(42).derive(2);
    bool any_diff = false;
    for (int i = 0; i < 8; ++i)
        if (c.next_u64() != d.next_u64()) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("uniform01 lies in [0,1) and normal has sane moments") {
    Rng r(7);
    double sum = 0.0, sumsq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        double g = r.normal();
        sum += g;
        sumsq += g * g;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sumsq / n - 1.0) < 0.02);
}

TEST_CASE("sample_without_replacement returns distinct indices") {
    Rng r(3);
    auto idx = r.sample_without_replacement(100, 40);
    REQUIRE(idx.size() == 40);
    std::sort(idx.begin(), idx.end());
    CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
    CHECK(idx.back() < 100);
}
