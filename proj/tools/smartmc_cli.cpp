#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "smartmc/benchmarks.hpp"
#include "smartmc/data_io.hpp"
#include "smartmc/model.hpp"

using json = nlohmann::json;
using namespace smartmc;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int default_threads() {
    if (const char* env = std::getenv("SMARTMC_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? (int)hc : 1;
}

MscorConfig load_mscor_config(const std::string& path, int threads,
                              long long seed) {
    MscorConfig cfg;
    if (!path.empty()) cfg = MscorConfig::from_json_text(read_file(path));
    if (threads > 0) cfg.threads = threads;
    if (seed >= 0) cfg.seed = (std::uint64_t)seed;
    return cfg;
}

std::vector<double> apply_standardization(
    const std::vector<CovariateStandardization>& params,
    const std::vector<double>& raw) {
    if (params.empty()) return raw;
    if (params.size() != raw.size())
        throw SchemaMismatch("covariate count does not match the fitted model");
    std::vector<double> x = raw;
    for (std::size_t c = 0; c < x.size(); ++c)
        if (params[c].continuous) x[c] = (x[c] - params[c].mean) / params[c].sd;
    return x;
}

int run_simulate(const std::string& config_path, const std::string& out_seq,
                 const std::string& out_cov, const std::string& out_truth) {
    SimConfig cfg = SimConfig::from_json_text(read_file(config_path));
    SimulatedData sim = simulate_dataset(cfg);
    save_sequences_csv(sim.dataset, {}, out_seq);
    save_covariates_csv(sim.dataset, {}, {}, out_cov);
    if (!out_truth.empty()) save_truth(sim, out_truth);
    return 0;
}

int run_reduce(const std::string& events_path, int window_days,
               const std::string& out_path) {
    auto events = load_events(events_path);
    if (events.empty()) throw EmptyLog("events file has no rows");

    std::map<std::string, std::vector<RawEvent>> by_subject;
    std::vector<std::string> order;
    for (auto& e : events) {
        if (by_subject[e.subject_id].empty()) order.push_back(e.subject_id);
        by_subject[e.subject_id].push_back(e);
    }
    std::map<std::string, std::vector<std::string>> reduced;
    std::map<std::string, int> alphabet; // label -> 1-based state, sorted order
    for (const auto& id : order) {
        reduced[id] = reduce_sequence(by_subject[id], window_days);
        for (const auto& label : reduced[id]) alphabet[label] = 0;
    }
    int next = 1;
    for (auto& [label, idx] : alphabet) idx = next++;

    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write " + out_path);
    out << "subject_id,t,state\n";
    for (const auto& id : order) {
        const auto& seq = reduced[id];
        for (std::size_t t = 0; t < seq.size(); ++t)
            out << id << ',' << (t + 1) << ',' << alphabet[seq[t]] << '\n';
    }
    return 0;
}

int run_fit(const std::string& seq_path, const std::string& cov_path, int tol,
            const std::string& mscor_path, int threads, long long seed,
            bool standardize, const std::string& out_path) {
    LoadedDataset loaded = load_dataset(seq_path, cov_path);
    MscorConfig cfg = load_mscor_config(mscor_path, threads, seed);

    std::vector<CovariateStandardization> params;
    if (standardize && loaded.dataset.n_covariates() > 0) {
        std::vector<std::vector<double>> raw;
        raw.reserve(loaded.dataset.subjects.size());
        for (const auto& s : loaded.dataset.subjects) raw.push_back(s.covariates);
        // columns with more than two distinct values are treated as continuous
        std::vector<bool> continuous(loaded.dataset.n_covariates(), false);
        for (std::size_t c = 0; c < continuous.size(); ++c) {
            std::map<double, int> distinct;
            for (const auto& row : raw)
                if (distinct.emplace(row[c], 0).second && distinct.size() > 2)
                    break;
            continuous[c] = distinct.size() > 2;
        }
        auto std_cov = standardize_covariates(raw, continuous,
                                              loaded.covariate_names);
        for (std::size_t k = 0; k < loaded.dataset.subjects.size(); ++k)
            loaded.dataset.subjects[k].covariates = std_cov.values[k];
        params = std_cov.params;
    }

    FitResult result = fit(loaded.dataset, tol, cfg);
    result.standardization = params;
    result.state_labels.clear();
    for (int v = 1; v <= result.n_states; ++v)
        result.state_labels.push_back(std::to_string(v));
    save_fit(result, out_path);
    return 0;
}

int run_predict(const std::string& fit_path, const std::string& cov_path,
                const std::string& out_path) {
    FitResult model = load_fit(fit_path);
    LoadedCovariates cov = load_covariates(cov_path);
    json subjects = json::object();
    for (std::size_t k = 0; k < cov.subject_ids.size(); ++k) {
        auto x = apply_standardization(model.standardization, cov.values[k]);
        std::vector<bool> inactive;
        auto m = patient_transition_matrix(model.coefficients, model.mask,
                                           model.empirical, x, &inactive);
        json rows = json::array();
        for (const auto& row : m) rows.push_back(row);
        subjects[cov.subject_ids[k]] = {{"matrix", rows},
                                        {"inactive_rows", inactive}};
    }
    json out = {{"n_states", model.n_states}, {"subjects", subjects}};
    std::ofstream f(out_path);
    if (!f) throw DataError("cannot write " + out_path);
    f << out.dump(2) << '\n';
    return 0;
}

int run_odds(const std::string& fit_path, int from_state,
             const std::string& profile_path, bool use_odds,
             const std::string& out_path) {
    FitResult model = load_fit(fit_path);
    json profile = json::parse(read_file(profile_path));
    std::vector<double> raw = profile.at("covariates").get<std::vector<double>>();
    auto x = apply_standardization(model.standardization, raw);
    std::vector<int> to_states;
    for (int v = 1; v <= model.n_states; ++v) to_states.push_back(v);
    auto ors = odds_ratios(model, x, from_state, to_states, use_odds);

    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write " + out_path);
    out << "from,to,odds_ratio\n";
    out.precision(17);
    for (std::size_t i = 0; i < to_states.size(); ++i)
        out << from_state << ',' << to_states[i] << ',' << ors[i] << '\n';
    return 0;
}

int run_bootstrap(const std::string& seq_path, const std::string& cov_path,
                  int tol, const std::string& mscor_path, int n_boot,
                  int threads, long long seed, const std::string& out_path) {
    LoadedDataset loaded = load_dataset(seq_path, cov_path);
    MscorConfig cfg = load_mscor_config(mscor_path, threads, -1);
    std::uint64_t boot_seed = seed >= 0 ? (std::uint64_t)seed : cfg.seed;
    BootstrapResult boot = bootstrap_se(loaded.dataset, tol, cfg, n_boot,
                                        boot_seed);
    json se = json::object();
    for (const auto& e : boot.standard_errors.entries)
        se[std::to_string(e.u) + "," + std::to_string(e.v + 1)] = e.beta;
    json out = {{"n_boot", n_boot},
                {"replicates_used", boot.replicates_used},
                {"replicates_failed", boot.replicates_failed},
                {"standard_errors", se}};
    std::ofstream f(out_path);
    if (!f) throw DataError("cannot write " + out_path);
    f << out.dump(2) << '\n';
    return 0;
}

int run_benchmark(const std::string& function, int blocks, int dim, int repeats,
                  double time_budget, int threads, long long seed,
                  const std::string& out_path) {
    BenchmarkFunction fn = make_benchmark(benchmark_from_string(function),
                                          blocks, dim);
    MscorConfig cfg;
    cfg.threads = threads > 0 ? threads : default_threads();
    if (time_budget > 0) cfg.time_budget_seconds = time_budget / repeats;
    Objective objective = [&fn](const MultiSpherePoint& p) {
        return eval_benchmark(fn, p);
    };

    std::vector<double> values;
    std::vector<double> times;
    std::uint64_t base_seed = seed >= 0 ? (std::uint64_t)seed : 0;
    for (int r = 0; r < repeats; ++r) {
        MultiSpherePoint start = random_point(fn.shape, base_seed + (std::uint64_t)r);
        auto t0 = std::chrono::steady_clock::now();
        OptResult res = optimize(objective, fn.shape, start, cfg);
        times.push_back(std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count());
        values.push_back(res.objective_value);
    }
    double best = values[0], mean_v = 0.0, mean_t = 0.0;
    for (double v : values) {
        best = std::min(best, v);
        mean_v += v;
    }
    mean_v /= (double)values.size();
    for (double t : times) mean_t += t;
    mean_t /= (double)times.size();
    double se = 0.0;
    if (values.size() > 1) {
        for (double v : values) se += (v - mean_v) * (v - mean_v);
        se = std::sqrt(se / (double)(values.size() - 1)) /
             std::sqrt((double)values.size());
    }

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw DataError("cannot write " + out_path);
        out = &file;
    }
    out->precision(10);
    *out << "function,blocks,dim,repeats,min_value,se,mean_time_sec\n"
         << function << ',' << blocks << ',' << dim << ',' << repeats << ','
         << best << ',' << se << ',' << mean_t << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SMART-MC: covariate-based Markov transition models with the "
                 "MSCOR spherically constrained optimizer"};
    app.require_subcommand(1);

    // simulate
    std::string sim_config, sim_seq, sim_cov, sim_truth;
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
    simulate->add_option("--config", sim_config)->required();
    simulate->add_option("--out-seq", sim_seq)->required();
    simulate->add_option("--out-cov", sim_cov)->required();
    simulate->add_option("--out-truth", sim_truth);

    // reduce
    std::string red_events, red_out;
    int red_window = 91;
    auto* reduce = app.add_subcommand("reduce", "reduce an event log to sequences");
    reduce->add_option("--events", red_events)->required();
    reduce->add_option("--window-days", red_window);
    reduce->add_option("--out", red_out)->required();

    // fit
    std::string fit_seq, fit_cov, fit_mscor, fit_out;
    int fit_tol = 0, fit_threads = 0;
    long long fit_seed = -1;
    bool fit_standardize = false;
    auto* fit_cmd = app.add_subcommand("fit", "fit the model");
    fit_cmd->add_option("--sequences", fit_seq)->required();
    fit_cmd->add_option("--covariates", fit_cov)->required();
    fit_cmd->add_option("--tol", fit_tol)->required();
    fit_cmd->add_option("--mscor", fit_mscor);
    fit_cmd->add_option("--threads", fit_threads);
    fit_cmd->add_option("--seed", fit_seed);
    fit_cmd->add_flag("--standardize", fit_standardize);
    fit_cmd->add_option("--out", fit_out)->required();

    // predict
    std::string pred_fit, pred_cov, pred_out;
    auto* predict = app.add_subcommand("predict", "per-subject transition matrices");
    predict->add_option("--fit", pred_fit)->required();
    predict->add_option("--covariates", pred_cov)->required();
    predict->add_option("--out", pred_out)->required();

    // odds
    std::string odds_fit, odds_profile, odds_out;
    int odds_from = 0;
    bool odds_true_odds = false;
    auto* odds = app.add_subcommand("odds", "odds ratios vs staying put");
    odds->add_option("--fit", odds_fit)->required();
    odds->add_option("--from", odds_from)->required();
    odds->add_option("--profile", odds_profile)->required();
    odds->add_flag("--true-odds", odds_true_odds,
                   "use p/(1-p) odds instead of the probability ratio");
    odds->add_option("--out", odds_out)->required();

    // bootstrap
    std::string boot_seq, boot_cov, boot_mscor, boot_out;
    int boot_tol = 0, boot_n = 0, boot_threads = 0;
    long long boot_seed = -1;
    auto* bootstrap = app.add_subcommand("bootstrap", "bootstrap standard errors");
    bootstrap->add_option("--sequences", boot_seq)->required();
    bootstrap->add_option("--covariates", boot_cov)->required();
    bootstrap->add_option("--tol", boot_tol)->required();
    bootstrap->add_option("--mscor", boot_mscor);
    bootstrap->add_option("--n-boot", boot_n)->required();
    bootstrap->add_option("--threads", boot_threads);
    bootstrap->add_option("--seed", boot_seed);
    bootstrap->add_option("--out", boot_out)->required();

    // benchmark
    std::string bench_fn, bench_out;
    int bench_blocks = 5, bench_dim = 5, bench_repeats = 10, bench_threads = 0;
    double bench_budget = 0.0;
    long long bench_seed = 0;
    auto* benchmark = app.add_subcommand("benchmark", "optimize a test function");
    benchmark->add_option("--function", bench_fn)->required();
    benchmark->add_option("--blocks", bench_blocks);
    benchmark->add_option("--dim", bench_dim);
    benchmark->add_option("--repeats", bench_repeats);
    benchmark->add_option("--time-budget", bench_budget);
    benchmark->add_option("--threads", bench_threads);
    benchmark->add_option("--seed", bench_seed);
    benchmark->add_option("--out", bench_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (simulate->parsed())
            return run_simulate(sim_config, sim_seq, sim_cov, sim_truth);
        if (reduce->parsed()) return run_reduce(red_events, red_window, red_out);
        if (fit_cmd->parsed())
            return run_fit(fit_seq, fit_cov, fit_tol, fit_mscor,
                           fit_threads > 0 ? fit_threads : default_threads(),
                           fit_seed, fit_standardize, fit_out);
        if (predict->parsed()) return run_predict(pred_fit, pred_cov, pred_out);
        if (odds->parsed())
            return run_odds(odds_fit, odds_from, odds_profile, odds_true_odds,
                            odds_out);
        if (bootstrap->parsed())
            return run_bootstrap(boot_seq, boot_cov, boot_tol, boot_mscor,
                                 boot_n,
                                 boot_threads > 0 ? boot_threads
                                                  : default_threads(),
                                 boot_seed, boot_out);
        if (benchmark->parsed())
            return run_benchmark(bench_fn, bench_blocks, bench_dim,
                                 bench_repeats, bench_budget, bench_threads,
                                 bench_seed, bench_out);
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
