#include "smartmc/mscor.hpp"

#include <chrono>
#include <cmath>
#include <json.hpp>

#include "smartmc/thread_pool.hpp"

namespace smartmc {

using json = nlohmann::json;

void MscorConfig::validate() const {
    if (s_initial <= 0.0) throw DataError("s_initial must be > 0");
    if (rho <= 1.0) throw DataError("rho must be > 1");
    if (phi <= 0.0 || phi >= s_initial)
        throw DataError("phi must satisfy 0 < phi < s_initial");
    if (lambda < 0.0) throw DataError("lambda must be >= 0");
    if (tau1 <= 0.0) throw DataError("tau1 must be > 0");
    if (tau2 <= 0.0) throw DataError("tau2 must be > 0");
    if (max_iter < 1) throw DataError("max_iter must be >= 1");
    if (max_runs < 1) throw DataError("max_runs must be >= 1");
    if (threads < 1) throw DataError("threads must be >= 1");
    if (time_budget_seconds && *time_budget_seconds <= 0.0)
        throw DataError("time_budget_seconds must be > 0");
}

MscorConfig MscorConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad mscor config: ") + e.what(), 0);
    }
    MscorConfig c;
    if (j.contains("s_initial")) c.s_initial = j["s_initial"].get<double>();
    if (j.contains("rho")) c.rho = j["rho"].get<double>();
    if (j.contains("phi")) c.phi = j["phi"].get<double>();
    if (j.contains("lambda")) c.lambda = j["lambda"].get<double>();
    if (j.contains("tau1")) c.tau1 = j["tau1"].get<double>();
    if (j.contains("tau2")) c.tau2 = j["tau2"].get<double>();
    if (j.contains("max_iter")) c.max_iter = j["max_iter"].get<int>();
    if (j.contains("max_runs")) c.max_runs = j["max_runs"].get<int>();
    if (j.contains("time_budget_seconds") && !j["time_budget_seconds"].is_null())
        c.time_budget_seconds = j["time_budget_seconds"].get<double>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    c.validate();
    return c;
}

std::string MscorConfig::to_json_text() const {
    json j;
    j["s_initial"] = s_initial;
    j["rho"] = rho;
    j["phi"] = phi;
    j["lambda"] = lambda;
    j["tau1"] = tau1;
    j["tau2"] = tau2;
    j["max_iter"] = max_iter;
    j["max_runs"] = max_runs;
    if (time_budget_seconds)
        j["time_budget_seconds"] = *time_budget_seconds;
    else
        j["time_budget_seconds"] = nullptr;
    j["threads"] = threads;
    j["seed"] = seed;
    return j.dump(2);
}

const char* to_string(Termination t) {
    switch (t) {
        case Termination::run_convergence: return "run_convergence";
        case Termination::max_runs: return "max_runs";
        case Termination::time_budget: return "time_budget";
    }
    return "unknown";
}

int OptResult::total_iterations() const {
    int n = 0;
    for (int it : iterations_per_run) n += it;
    return n;
}

namespace {

struct Candidate {
    int block = 0;
    std::vector<double> data; // empty when the move produced no candidate
    double value = 0.0;
};

double checked_eval(const Objective& f, const MultiSpherePoint& p) {
    double v = f(p);
    if (!std::isfinite(v))
        throw ObjectiveNonFinite("objective returned a non-finite value");
    return v;
}

} // namespace

IterateResult iterate(const Objective& f, const SphereShape& shape,
                      const MultiSpherePoint& current, double current_value,
                      double step, int iteration, const MscorConfig& config,
                      ThreadPool& pool) {
    const int n_blocks = (int)shape.block_lengths.size();
    const double f1 = current_value;

    // Fixed slot per movement (b, i, direction): odd slots negative, even
    // positive, matching the scan order used by the argmin below.
    std::vector<Candidate> slots;
    slots.reserve(2 * shape.total_params());
    for (int b = 0; b < n_blocks; ++b) {
        for (int i = 0; i < shape.block_lengths[b]; ++i) {
            for (int dir = 0; dir < 2; ++dir) {
                Candidate c;
                c.block = b;
                MoveSpec move{i, dir == 1, step, config.lambda};
                std::vector<double> out;
                if (propose_move(current.blocks[b], move, config.rho,
                                 config.phi, out))
                    c.data = std::move(out);
                c.value = f1; // reused when the move produced no candidate
                slots.push_back(std::move(c));
            }
        }
    }

    long long evals = 0;
    std::exception_ptr eval_error;
    std::mutex error_mu;
    pool.parallel_for((int)slots.size(), [&](int idx) {
        Candidate& c = slots[idx];
        if (c.data.empty()) return;
        try {
            MultiSpherePoint trial = current;
            trial.blocks[c.block] = c.data;
            c.value = checked_eval(f, trial);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (!eval_error) eval_error = std::current_exception();
        }
    });
    if (eval_error) std::rethrow_exception(eval_error);
    for (const Candidate& c : slots)
        if (!c.data.empty()) ++evals;

    // Argmin over slots in scan order; first minimum wins the tie.
    int best = 0;
    for (int idx = 1; idx < (int)slots.size(); ++idx)
        if (slots[idx].value < slots[best].value) best = idx;
    const double f2 = slots[best].value;

    IterateResult result;
    result.point = current;
    result.value = f1;
    result.evaluations = evals;
    if (f2 < f1) {
        result.point.blocks[slots[best].block] = slots[best].data;
        result.value = f2;
        result.improved = true;
    }
    result.step = step;
    if (iteration > 1) {
        if (std::abs(f1 - std::min(f1, f2)) < config.tau1 && step > config.phi)
            result.step = step / config.rho;
    }
    return result;
}

RunResult run(const Objective& f, const SphereShape& shape,
              const MultiSpherePoint& start, const MscorConfig& config,
              ThreadPool& pool, const std::optional<double>& deadline_seconds,
              double elapsed_at_start) {
    RunResult r;
    r.point = start;
    r.value = checked_eval(f, start);
    r.evaluations = 1;

    auto t0 = std::chrono::steady_clock::now();
    double s = config.s_initial;
    int j = 1;
    while (j <= config.max_iter && s > config.phi) {
        if (deadline_seconds) {
            double elapsed =
                elapsed_at_start +
                std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
            if (elapsed >= *deadline_seconds) {
                r.hit_time_budget = true;
                break;
            }
        }
        IterateResult it =
            iterate(f, shape, r.point, r.value, s, j, config, pool);
        r.point = std::move(it.point);
        r.value = it.value;
        r.evaluations += it.evaluations;
        s = it.step;
        ++r.iterations;
        ++j;
    }
    return r;
}

OptResult optimize(const Objective& f, const SphereShape& shape,
                   const MultiSpherePoint& init, const MscorConfig& config) {
    config.validate();
    validate_point(init, shape);
    ThreadPool pool(config.threads);

    auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t0)
            .count();
    };

    OptResult result;
    MultiSpherePoint previous = init;
    MultiSpherePoint current = init;
    result.terminated_by = Termination::max_runs;

    for (int r = 1; r <= config.max_runs; ++r) {
        RunResult rr = run(f, shape, current, config, pool,
                           config.time_budget_seconds, elapsed());
        ++result.runs_completed;
        result.iterations_per_run.push_back(rr.iterations);
        result.objective_evaluations += rr.evaluations;
        result.run_best_values.push_back(rr.value);
        previous = current;
        current = rr.point;
        result.solution = current;
        result.objective_value = rr.value;

        if (rr.hit_time_budget ||
            (config.time_budget_seconds && elapsed() >= *config.time_budget_seconds)) {
            result.terminated_by = Termination::time_budget;
            return result;
        }
        if (r >= 2 && current.distance_to(previous) < config.tau2) {
            result.terminated_by = Termination::run_convergence;
            return result;
        }
    }
    result.terminated_by = Termination::max_runs;
    return result;
}

bool detect_nonconvexity(const OptResult& result) {
    if (result.terminated_by != Termination::run_convergence)
        throw NotConverged("optimizer did not terminate by run convergence");
    return result.runs_completed > 2;
}

} // namespace smartmc
