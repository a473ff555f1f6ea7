#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smartmc/benchmarks.hpp"
#include "smartmc/mscor.hpp"

using namespace smartmc;

TEST_CASE("all four functions vanish at the anchor and nowhere else nearby") {
    for (auto name : {BenchmarkName::ackley, BenchmarkName::griewank,
                      BenchmarkName::neg_sum_squares, BenchmarkName::rastrigin}) {
        auto fn = make_benchmark(name, 3, 4);
        CHECK(eval_benchmark(fn, fn.anchor) == doctest::Approx(0.0).epsilon(1e-14));
        for (int seed = 0; seed < 20; ++seed) {
            auto p = random_point(fn.shape, (std::uint64_t)seed);
            double v = eval_benchmark(fn, p);
            CHECK(v >= 0.0);
            if (p.blocks != fn.anchor.blocks) CHECK(v > 0.0);
        }
    }
}

TEST_CASE("closed-form spot checks") {
    auto nss = make_benchmark(BenchmarkName::neg_sum_squares, 1, 2);
    CHECK(eval_benchmark(nss, {{{0.0, 1.0}}}) == doctest::Approx(2.0));

    auto ras = make_benchmark(BenchmarkName::rastrigin, 1, 2);
    // z = (-1, 1): 2 + 20 - 10 cos(-2pi) - 10 cos(2pi) = 2
    CHECK(eval_benchmark(ras, {{{0.0, 1.0}}}) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("anchor is configurable") {
    SphereShape shape{{3}};
    MultiSpherePoint anchor = random_point(shape, 77);
    auto fn = make_benchmark(BenchmarkName::griewank, shape, anchor);
    CHECK(eval_benchmark(fn, anchor) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK_THROWS_AS(make_benchmark(BenchmarkName::griewank, shape,
                                   MultiSpherePoint{{{1.0, 1.0, 1.0}}}),
                    NormViolation);
}

TEST_CASE("shape mismatch is rejected") {
    auto fn = make_benchmark(BenchmarkName::ackley, 2, 3);
    CHECK_THROWS_AS(eval_benchmark(fn, {{{1.0, 0.0}}}), ShapeMismatch);
}

TEST_CASE("neg_sum_squares converges in exactly two runs from any start") {
    auto fn = make_benchmark(BenchmarkName::neg_sum_squares, 2, 3);
    Objective f = [&](const MultiSpherePoint& p) { return eval_benchmark(fn, p); };
    MscorConfig cfg;
    for (int seed = 0; seed < 5; ++seed) {
        auto res = optimize(f, fn.shape, random_point(fn.shape, (std::uint64_t)seed),
                            cfg);
        CHECK(res.terminated_by == Termination::run_convergence);
        CHECK(res.runs_completed == 2);
        CHECK(res.objective_value <= 1e-8);
    }
}
