#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smartmc/mscor.hpp"
#include "smartmc/thread_pool.hpp"

using namespace smartmc;

namespace {

SphereShape circle{{2}};

// squared distance to a target point on the product of spheres
Objective distance_to(MultiSpherePoint target) {
    return [target = std::move(target)](const MultiSpherePoint& p) {
        double sq = 0.0;
        for (std::size_t b = 0; b < p.blocks.size(); ++b)
            for (std::size_t i = 0; i < p.blocks[b].size(); ++i) {
                double d = p.blocks[b][i] - target.blocks[b][i];
                sq += d * d;
            }
        return sq;
    };
}

bool same_point(const MultiSpherePoint& a, const MultiSpherePoint& b) {
    return a.blocks == b.blocks;
}

} // namespace

TEST_CASE("config json round trip and validation") {
    MscorConfig c = MscorConfig::from_json_text(
        R"({"s_initial": 1, "rho": 2, "phi": 1e-6, "lambda": 0, "tau1": 1e-8,
            "tau2": 1e-4, "max_iter": 100, "max_runs": 5,
            "time_budget_seconds": null, "threads": 2, "seed": 11})");
    CHECK(c.max_runs == 5);
    CHECK(c.threads == 2);
    CHECK_FALSE(c.time_budget_seconds);
    MscorConfig back = MscorConfig::from_json_text(c.to_json_text());
    CHECK(back.seed == 11);

    CHECK_THROWS_AS(MscorConfig::from_json_text(R"({"rho": 0.5})"), DataError);
    CHECK_THROWS_AS(MscorConfig::from_json_text(R"({"phi": 2.0})"), DataError);
}

TEST_CASE("iterate picks the best coordinate move") {
    MscorConfig cfg;
    ThreadPool pool(1);
    MultiSpherePoint target{{{0.0, 1.0}}};
    Objective f = distance_to(target);
    MultiSpherePoint u{{{1.0, 0.0}}};

    auto r = iterate(f, circle, u, f(u), 1.0, 1, cfg, pool);
    CHECK(r.improved);
    CHECK(r.value == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.point.blocks[0][0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(r.point.blocks[0][1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.step == 1.0); // j = 1 never shrinks

    SUBCASE("constant objective shrinks the step at j > 1") {
        Objective constant = [](const MultiSpherePoint&) { return 3.0; };
        auto rc = iterate(constant, circle, u, 3.0, 1.0, 2, cfg, pool);
        CHECK_FALSE(rc.improved);
        CHECK(same_point(rc.point, u));
        CHECK(rc.step == doctest::Approx(0.5));
    }
    SUBCASE("at the minimizer nothing improves and the step shrinks") {
        auto rm = iterate(f, circle, target, 0.0, 1.0, 2, cfg, pool);
        CHECK_FALSE(rm.improved);
        CHECK(same_point(rm.point, target));
        CHECK(rm.step == doctest::Approx(0.5));
    }
}

TEST_CASE("iterate rejects non-finite objectives") {
    MscorConfig cfg;
    ThreadPool pool(1);
    Objective bad = [](const MultiSpherePoint&) {
        return std::numeric_limits<double>::quiet_NaN();
    };
    MultiSpherePoint u{{{1.0, 0.0}}};
    CHECK_THROWS_AS(iterate(bad, circle, u, 0.0, 1.0, 1, cfg, pool),
                    ObjectiveNonFinite);
}

TEST_CASE("run descends to the analytic minimum") {
    MscorConfig cfg;
    ThreadPool pool(1);
    MultiSpherePoint target{{{-0.6, 0.8}}};
    Objective f = distance_to(target);
    auto start = random_point(circle, 3);

    auto r = run(f, circle, start, cfg, pool, std::nullopt, 0.0);
    CHECK(r.value <= 1e-8);
    CHECK(f(r.point) <= f(start));

    SUBCASE("starting at the minimizer stays put") {
        auto rm = run(f, circle, target, cfg, pool, std::nullopt, 0.0);
        CHECK(same_point(rm.point, target));
    }
    SUBCASE("max_iter bounds the iteration count") {
        MscorConfig one = cfg;
        one.max_iter = 1;
        auto r1 = run(f, circle, start, one, pool, std::nullopt, 0.0);
        CHECK(r1.iterations == 1);
    }
}

TEST_CASE("optimize terminates by run convergence on a convex objective") {
    MscorConfig cfg;
    MultiSpherePoint target{{{0.0, 0.0, 1.0}}};
    SphereShape shape{{3}};
    Objective f = distance_to(target);
    auto init = random_point(shape, 5);

    auto res = optimize(f, shape, init, cfg);
    CHECK(res.terminated_by == Termination::run_convergence);
    CHECK(res.runs_completed == 2);
    CHECK(res.objective_value <= 1e-8);
    CHECK_FALSE(detect_nonconvexity(res));

    SUBCASE("max_runs = 1 exhausts the run budget") {
        MscorConfig one = cfg;
        one.max_runs = 1;
        auto r1 = optimize(f, shape, init, one);
        CHECK(r1.runs_completed == 1);
        CHECK(r1.terminated_by == Termination::max_runs);
        CHECK_THROWS_AS(detect_nonconvexity(r1), NotConverged);
    }
}

TEST_CASE("run_best_values are non-increasing and results deterministic") {
    MscorConfig cfg;
    cfg.seed = 17;
    SphereShape shape{{4, 3}};
    MultiSpherePoint target = random_point(shape, 100);
    Objective f = distance_to(target);
    auto init = random_point(shape, cfg.seed);

    auto a = optimize(f, shape, init, cfg);
    for (std::size_t i = 1; i < a.run_best_values.size(); ++i)
        CHECK(a.run_best_values[i] <= a.run_best_values[i - 1]);

    auto b = optimize(f, shape, init, cfg);
    CHECK(same_point(a.solution, b.solution));
    CHECK(a.objective_value == b.objective_value);
    CHECK(a.iterations_per_run == b.iterations_per_run);
    CHECK(a.objective_evaluations == b.objective_evaluations);
}

TEST_CASE("serial and parallel execution are bit-identical") {
    SphereShape shape{{5, 5}};
    MultiSpherePoint target = random_point(shape, 2024);
    Objective f = distance_to(target);
    auto init = random_point(shape, 1);

    MscorConfig serial;
    serial.threads = 1;
    MscorConfig parallel;
    parallel.threads = 4;

    auto a = optimize(f, shape, init, serial);
    auto b = optimize(f, shape, init, parallel);
    CHECK(same_point(a.solution, b.solution));
    CHECK(a.objective_value == b.objective_value);
    CHECK(a.iterations_per_run == b.iterations_per_run);
    CHECK(a.run_best_values == b.run_best_values);
    CHECK(a.objective_evaluations == b.objective_evaluations);
}

TEST_CASE("detect_nonconvexity reads the run count") {
    OptResult r;
    r.terminated_by = Termination::run_convergence;
    r.runs_completed = 2;
    CHECK_FALSE(detect_nonconvexity(r));
    r.runs_completed = 7;
    CHECK(detect_nonconvexity(r));
    r.terminated_by = Termination::max_runs;
    CHECK_THROWS_AS(detect_nonconvexity(r), NotConverged);
}

TEST_CASE("time budget returns best-so-far") {
    SphereShape shape{{6}};
    MultiSpherePoint target = random_point(shape, 50);
    // slow objective so the budget bites
    Objective f = [&](const MultiSpherePoint& p) {
        double burn = 0.0;
        for (int i = 0; i < 20000; ++i) burn += std::sin((double)i);
        volatile double sink = burn;
        (void)sink;
        double sq = 0.0;
        for (std::size_t i = 0; i < p.blocks[0].size(); ++i) {
            double d = p.blocks[0][i] - target.blocks[0][i];
            sq += d * d;
        }
        return sq;
    };
    MscorConfig cfg;
    cfg.time_budget_seconds = 0.05;
    auto init = random_point(shape, 9);
    auto res = optimize(f, shape, init, cfg);
    CHECK(res.terminated_by == Termination::time_budget);
    CHECK(res.objective_value <= f(init));
}
