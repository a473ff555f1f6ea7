#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smartmc/sphere.hpp"

namespace smartmc {

class ThreadPool;

struct MscorConfig {
    double s_initial = 1.0;
    double rho = 2.0;
    double phi = 1e-6;
    double lambda = 0.0;
    double tau1 = 1e-8;
    double tau2 = 1e-4;
    int max_iter = 10000;
    int max_runs = 100;
    std::optional<double> time_budget_seconds;
    int threads = 1;
    std::uint64_t seed = 0;

    void validate() const;
    static MscorConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
};

enum class Termination { run_convergence, max_runs, time_budget };

const char* to_string(Termination t);

struct OptResult {
    MultiSpherePoint solution;
    double objective_value = 0.0;
    int runs_completed = 0;
    std::vector<int> iterations_per_run;
    long long objective_evaluations = 0;
    std::vector<double> run_best_values;
    Termination terminated_by = Termination::max_runs;

    int total_iterations() const;
};

// Minimized black-box objective. Must be a pure, deterministic function of
// the point and safe to call concurrently on distinct points.
using Objective = std::function<double(const MultiSpherePoint&)>;

// One pattern-search sweep over all 2M coordinate moves at global step s.
// Returns the accepted point (unchanged if no strict improvement), the
// possibly shrunk step, and the objective value at the returned point.
struct IterateResult {
    MultiSpherePoint point;
    double value = 0.0;
    double step = 0.0;
    bool improved = false;
    long long evaluations = 0;
};

IterateResult iterate(const Objective& f, const SphereShape& shape,
                      const MultiSpherePoint& current, double current_value,
                      double step, int iteration, const MscorConfig& config,
                      ThreadPool& pool);

// One run: iterates from s_initial until the step falls to phi or max_iter.
struct RunResult {
    MultiSpherePoint point;
    double value = 0.0;
    int iterations = 0;
    long long evaluations = 0;
    bool hit_time_budget = false;
};

RunResult run(const Objective& f, const SphereShape& shape,
              const MultiSpherePoint& start, const MscorConfig& config,
              ThreadPool& pool, const std::optional<double>& deadline_seconds,
              double elapsed_at_start);

// Chains runs, each seeded with the previous solution, until consecutive
// solutions are within tau2, max_runs is hit, or the time budget expires.
OptResult optimize(const Objective& f, const SphereShape& shape,
                   const MultiSpherePoint& init, const MscorConfig& config);

// True when convergence needed more than two runs, i.e. at least one escape
// from a local solution happened. Throws NotConverged on budget termination.
bool detect_nonconvexity(const OptResult& result);

} // namespace smartmc
