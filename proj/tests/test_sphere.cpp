#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "smartmc/sphere.hpp"

using namespace smartmc;

namespace {

double norm2(const std::vector<double>& x) {
    double sq = 0.0;
    for (double v : x) sq += v * v;
    return std::sqrt(sq);
}

SphereShape shape_of(std::vector<int> lengths) {
    return SphereShape{std::move(lengths)};
}

} // namespace

TEST_CASE("validate_point accepts unit blocks and rejects others") {
    CHECK_NOTHROW(validate_point({{{1.0, 0.0, 0.0}}}, shape_of({3})));
    CHECK_NOTHROW(validate_point({{{0.6, 0.8}}}, shape_of({2})));
    CHECK_THROWS_AS(validate_point({{{1.0, 1.0}}}, shape_of({2})), NormViolation);
    CHECK_THROWS_AS(validate_point({{{1.0, 0.0}}}, shape_of({3})), ShapeMismatch);
    CHECK_THROWS_AS(validate_point({{{1.0, 0.0}}}, shape_of({2, 2})),
                    ShapeMismatch);
}

TEST_CASE("random_point is deterministic and feasible") {
    auto a = random_point(shape_of({3}), 7);
    auto b = random_point(shape_of({3}), 7);
    CHECK(a.blocks == b.blocks);

    auto two = random_point(shape_of({2, 2}), 1);
    REQUIRE(two.blocks.size() == 2);
    CHECK(norm2(two.blocks[0]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(norm2(two.blocks[1]) == doctest::Approx(1.0).epsilon(1e-12));

    auto five = random_point(shape_of({5, 5, 5, 5, 5}), 42);
    CHECK_NOTHROW(validate_point(five, shape_of({5, 5, 5, 5, 5})));
}

TEST_CASE("adjustment_step solves the norm-restoring quadratic") {
    SUBCASE("pole moving inward") {
        auto adj = adjustment_step({1.0, 0.0, 0.0}, 0, -1.0, 0.0);
        REQUIRE(adj);
        CHECK(adj->discriminant == doctest::Approx(8.0));
        CHECK(adj->t == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
        CHECK(adj->significant == std::vector<int>{1, 2});
    }
    SUBCASE("pole moving outward has no solution") {
        CHECK_FALSE(adjustment_step({1.0, 0.0, 0.0}, 0, 0.5, 0.0));
    }
    SUBCASE("3-4-5 block against the norm-equation oracle") {
        auto adj = adjustment_step({0.6, 0.8}, 0, 0.1, 0.0);
        REQUIRE(adj);
        // oracle: (0.8 + t)^2 + 0.7^2 = 1  =>  t = -0.8 + sqrt(0.51)
        CHECK(adj->t == doctest::Approx(-0.8 + std::sqrt(0.51)).epsilon(1e-12));
        double c0 = 0.6 + 0.1, c1 = 0.8 + adj->t;
        CHECK(std::abs(std::sqrt(c0 * c0 + c1 * c1) - 1.0) <= 1e-12);
    }
    SUBCASE("no significant coordinates degenerates") {
        CHECK_FALSE(adjustment_step({0.0, 1.0, 0.0}, 1, 0.1, 0.5));
    }
    SUBCASE("zero step with positive gamma sum gives t = 0") {
        auto adj = adjustment_step({0.6, 0.8}, 0, 0.0, 0.0);
        REQUIRE(adj);
        CHECK(adj->t == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("propose_move") {
    std::vector<double> out;
    SUBCASE("pole inward reaches the equator") {
        REQUIRE(propose_move({1.0, 0.0, 0.0}, {0, false, 1.0, 0.0}, 2.0, 1e-6,
                             out));
        CHECK(out[0] == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(out[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
        CHECK(out[2] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    }
    SUBCASE("pole outward stays unchanged at any shrunken step") {
        CHECK_FALSE(propose_move({1.0, 0.0, 0.0}, {0, true, 1.0, 0.0}, 2.0,
                                 1e-6, out));
    }
    SUBCASE("sparsity threshold zeroes insignificant coordinates bit-exactly") {
        REQUIRE(propose_move({0.6, 0.8, 0.0}, {0, true, 0.1, 0.05}, 2.0, 1e-6,
                             out));
        CHECK(out[2] == 0.0);
        // oracle: Gamma = {x2}, Lambda = {x3}; (0.8+t)^2 = 1 - 0.49
        CHECK(out[0] == doctest::Approx(0.7).epsilon(1e-12));
        CHECK(out[1] == doctest::Approx(std::sqrt(0.51)).epsilon(1e-12));
        CHECK(std::abs(norm2(out) - 1.0) <= 1e-12);
    }
}

TEST_CASE("all candidate moves on random blocks stay on the sphere") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 50; ++trial) {
        int n = 2 + (int)(rng() % 7);
        std::vector<double> block(n);
        double norm = 0.0;
        for (double& v : block) v = gauss(rng);
        for (double v : block) norm += v * v;
        norm = std::sqrt(norm);
        for (double& v : block) v /= norm;

        double lambda = (trial % 3 == 0) ? 0.2 : 0.0;
        for (int i = 0; i < n; ++i)
            for (bool positive : {false, true}) {
                std::vector<double> out;
                if (propose_move(block, {i, positive, 1.0, lambda}, 2.0, 1e-6,
                                 out)) {
                    CHECK(std::abs(norm2(out) - 1.0) <= 1e-12);
                    for (int k = 0; k < n; ++k)
                        if (k != i && std::abs(block[k]) < lambda)
                            CHECK(out[k] == 0.0);
                }
            }
    }
}

TEST_CASE("adjustment shift vanishes with the step size") {
    // positive coordinate sum, lambda = 0
    std::vector<double> block = {0.5, 0.5, std::sqrt(0.5)};
    double prev = 1e300;
    for (double s : {1e-2, 1e-4, 1e-6}) {
        auto adj = adjustment_step(block, 0, s, 0.0);
        REQUIRE(adj);
        double t = std::abs(adj->t);
        CHECK(t < prev);
        CHECK(t <= 2.0 * s);
        prev = t;
    }
}
