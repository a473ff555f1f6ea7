#include "smartmc/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <mutex>
#include <random>
#include <unordered_map>

namespace smartmc {

int Dataset::n_covariates() const {
    return subjects.empty() ? 0 : (int)subjects[0].covariates.size();
}

void Dataset::validate() const {
    if (n_states < 1) throw DataError("dataset must have at least one state");
    if (subjects.empty()) throw DataError("dataset must have at least one subject");
    const int p = n_covariates();
    for (const Subject& s : subjects) {
        if (s.sequence.empty())
            throw DataError("every subject needs a sequence of length >= 1");
        if ((int)s.covariates.size() != p)
            throw DataError("covariate vectors must all have the same length");
        for (int y : s.sequence)
            if (y < 1 || y > n_states)
                throw DataError("state " + std::to_string(y) +
                                " outside 1.." + std::to_string(n_states));
    }
}

int NonRareMask::masked_count() const {
    int n = 0;
    for (const auto& row : mask)
        for (bool m : row)
            if (m) ++n;
    return n;
}

bool NonRareMask::unidentified(int u) const {
    int n = 0;
    for (bool m : mask[u])
        if (m) ++n;
    return n == 1;
}

const std::vector<double>* CoefficientMatrix::find(int u, int v) const {
    for (const Entry& e : entries)
        if (e.u == u && e.v == v) return &e.beta;
    return nullptr;
}

CountMatrix count_matrix(const Dataset& data) {
    data.validate();
    const int N = data.n_states;
    CountMatrix cm;
    cm.counts.assign(N + 1, std::vector<long long>(N, 0));
    for (const Subject& s : data.subjects) {
        cm.counts[0][s.sequence[0] - 1] += 1;
        for (std::size_t t = 0; t + 1 < s.sequence.size(); ++t)
            cm.counts[s.sequence[t]][s.sequence[t + 1] - 1] += 1;
    }
    return cm;
}

EmpiricalMatrix empirical_matrix(const CountMatrix& counts) {
    EmpiricalMatrix em;
    const int N = counts.n_states();
    em.probs.assign(counts.counts.size(), std::vector<double>(N, 0.0));
    em.active_rows.assign(counts.counts.size(), false);
    for (std::size_t u = 0; u < counts.counts.size(); ++u) {
        long long total = 0;
        for (long long c : counts.counts[u]) total += c;
        if (total == 0) continue;
        em.active_rows[u] = true;
        for (int v = 0; v < N; ++v)
            em.probs[u][v] = (double)counts.counts[u][v] / (double)total;
    }
    return em;
}

NonRareMask nonrare_mask(const CountMatrix& counts, int tol, int p) {
    if (tol < p + 1)
        throw TolTooSmall("tol must be at least p + 1 = " + std::to_string(p + 1));
    NonRareMask nm;
    nm.tol = tol;
    nm.mask.assign(counts.counts.size(),
                   std::vector<bool>(counts.n_states(), false));
    for (std::size_t u = 0; u < counts.counts.size(); ++u)
        for (int v = 0; v < counts.n_states(); ++v)
            nm.mask[u][v] = counts.counts[u][v] >= tol;
    return nm;
}

namespace {

constexpr double kScoreLimit = 700.0;

double score(const std::vector<double>& xprime, const std::vector<double>& beta) {
    if (beta.size() != xprime.size())
        throw ShapeMismatch("coefficient vector length does not match p + 1");
    double s = 0.0;
    for (std::size_t i = 0; i < beta.size(); ++i) s += xprime[i] * beta[i];
    if (!std::isfinite(s) || std::abs(s) > kScoreLimit)
        throw OverflowGuard("softmax score out of range");
    return s;
}

std::vector<double> augment(const std::vector<double>& x) {
    std::vector<double> xprime(x.size() + 1);
    xprime[0] = 1.0;
    std::copy(x.begin(), x.end(), xprime.begin() + 1);
    return xprime;
}

// Sufficient statistics of a dataset against a fixed mask/empirical pair.
// The log-likelihood splits into a constant (rare observations and rest-mass
// factors) plus a softmax part that depends only on masked-entry scores.
struct LikelihoodCache {
    int n_states = 0;
    int p = 0;
    std::vector<std::pair<int, int>> entries;    // masked (u, v) in scan order
    std::vector<std::vector<int>> row_entries;   // entry indices per row
    double const_term = 0.0;

    struct SubjRow {
        int u = 0;
        // (position within row_entries[u], count)
        std::vector<std::pair<int, long long>> observed;
        long long total = 0; // sum of counts
    };
    struct Subj {
        std::vector<double> xprime;
        std::vector<SubjRow> rows;
    };
    std::vector<Subj> subjects;
    // per row: (subject xprime, that subject's row record)
    std::vector<std::vector<std::pair<const std::vector<double>*, const SubjRow*>>>
        row_data;

    LikelihoodCache(const Dataset& data, const NonRareMask& mask,
                    const EmpiricalMatrix& empirical) {
        n_states = data.n_states;
        p = data.n_covariates();
        const int N = n_states;
        if ((int)mask.mask.size() != N + 1 || (int)empirical.probs.size() != N + 1)
            throw ShapeMismatch("mask/empirical rows do not match dataset states");

        std::vector<int> entry_index((N + 1) * N, -1);
        row_entries.assign(N + 1, {});
        for (int u = 0; u <= N; ++u)
            for (int v = 0; v < N; ++v)
                if (mask.mask[u][v]) {
                    entry_index[u * N + v] = (int)entries.size();
                    row_entries[u].push_back((int)entries.size());
                    entries.emplace_back(u, v);
                }

        // log(1 - sum of rare empirical mass) per row, used once per masked
        // observation.
        std::vector<double> log_restmass(N + 1, 0.0);
        std::vector<bool> restmass_ok(N + 1, false);
        for (int u = 0; u <= N; ++u) {
            if (row_entries[u].empty()) continue;
            double rare = 0.0;
            for (int v = 0; v < N; ++v)
                if (!mask.mask[u][v]) rare += empirical.probs[u][v];
            double rest = 1.0 - rare;
            if (rest > 0.0) {
                log_restmass[u] = std::log(rest);
                restmass_ok[u] = true;
            }
        }

        subjects.reserve(data.subjects.size());
        std::vector<long long> obs((N + 1) * N, 0);
        std::vector<int> touched;
        for (const Subject& s : data.subjects) {
            touched.clear();
            auto tally = [&](int u, int v) {
                int idx = u * N + v;
                if (obs[idx] == 0) touched.push_back(idx);
                obs[idx] += 1;
            };
            tally(0, s.sequence[0] - 1);
            for (std::size_t t = 0; t + 1 < s.sequence.size(); ++t)
                tally(s.sequence[t], s.sequence[t + 1] - 1);
            std::sort(touched.begin(), touched.end());

            Subj subj;
            subj.xprime = augment(s.covariates);
            for (int idx : touched) {
                int u = idx / N, v = idx % N;
                long long n = obs[idx];
                obs[idx] = 0;
                if (mask.mask[u][v]) {
                    if (!restmass_ok[u])
                        throw ZeroProbability(
                            "masked row has no probability mass left");
                    if (subj.rows.empty() || subj.rows.back().u != u)
                        subj.rows.push_back(SubjRow{u, {}, 0});
                    const auto& es = row_entries[u];
                    int local = (int)(std::lower_bound(es.begin(), es.end(),
                                                       entry_index[idx]) -
                                      es.begin());
                    subj.rows.back().observed.emplace_back(local, n);
                    subj.rows.back().total += n;
                    const_term += (double)n * log_restmass[u];
                } else {
                    double m = empirical.probs[u][v];
                    if (m <= 0.0)
                        throw ZeroProbability(
                            "observed transition has empirical probability 0");
                    const_term += (double)n * std::log(m);
                }
            }
            subjects.push_back(std::move(subj));
        }

        row_data.assign(N + 1, {});
        for (const Subj& s : subjects)
            for (const SubjRow& row : s.rows)
                row_data[row.u].push_back({&s.xprime, &row});
        memos.reserve(N + 1);
        for (int u = 0; u <= N; ++u)
            memos.push_back(std::make_unique<RowMemo>());
    }

    LikelihoodCache(const LikelihoodCache&) = delete;
    LikelihoodCache& operator=(const LikelihoodCache&) = delete;

    // betas[e] is the coefficient vector for entries[e].
    double eval(const std::vector<const std::vector<double>*>& betas) const {
        double acc = const_term;
        std::vector<double> scores;
        for (const Subj& subj : subjects)
            for (const SubjRow& row : subj.rows)
                acc += subj_row_value(subj.xprime, row, betas, scores);
        return acc;
    }

    double subj_row_value(const std::vector<double>& xprime, const SubjRow& row,
                          const std::vector<const std::vector<double>*>& betas,
                          std::vector<double>& scores) const {
        const auto& es = row_entries[row.u];
        scores.resize(es.size());
        double max_s = -kScoreLimit;
        for (std::size_t i = 0; i < es.size(); ++i) {
            scores[i] = score(xprime, *betas[es[i]]);
            if (scores[i] > max_s) max_s = scores[i];
        }
        double sum_exp = 0.0;
        for (double sc : scores) sum_exp += std::exp(sc - max_s);
        double lse = max_s + std::log(sum_exp);
        double row_acc = 0.0;
        for (auto [i, n] : row.observed) row_acc += (double)n * scores[i];
        return row_acc - (double)row.total * lse;
    }

    // Memoized per-row evaluation for the optimizer's candidate sweeps: most
    // candidates share every row's coefficients with the current point except
    // one, so per-row contributions keyed by the row's coefficient contents
    // are reused. The memo never changes a value, only caches it, so results
    // are identical to eval() up to summation order (rows instead of
    // subjects) and deterministic under any thread interleaving.
    struct RowMemo {
        std::mutex mu;
        std::unordered_map<std::uint64_t,
                           std::vector<std::pair<std::vector<double>, double>>>
            vals;
        std::size_t size = 0;
    };
    mutable std::vector<std::unique_ptr<RowMemo>> memos;

    double row_value(int u, const MultiSpherePoint& point) const {
        const auto& es = row_entries[u];
        std::uint64_t h = 1469598103934665603ull; // FNV-1a over the raw bits
        for (int e : es)
            for (double d : point.blocks[e]) {
                std::uint64_t bits;
                std::memcpy(&bits, &d, sizeof bits);
                for (int b = 0; b < 8; ++b) {
                    h ^= (bits >> (8 * b)) & 0xffu;
                    h *= 1099511628211ull;
                }
            }

        RowMemo& memo = *memos[u];
        {
            std::lock_guard<std::mutex> lock(memo.mu);
            auto it = memo.vals.find(h);
            if (it != memo.vals.end())
                for (const auto& [key, value] : it->second) {
                    std::size_t off = 0;
                    bool same = true;
                    for (int e : es) {
                        const auto& blk = point.blocks[e];
                        if (std::memcmp(key.data() + off, blk.data(),
                                        blk.size() * sizeof(double)) != 0) {
                            same = false;
                            break;
                        }
                        off += blk.size();
                    }
                    if (same) return value;
                }
        }

        std::vector<const std::vector<double>*> betas(entries.size(), nullptr);
        for (int e : es) betas[e] = &point.blocks[e];
        std::vector<double> scores;
        double acc = 0.0;
        for (auto [xprime, row] : row_data[u])
            acc += subj_row_value(*xprime, *row, betas, scores);

        std::vector<double> key;
        for (int e : es)
            key.insert(key.end(), point.blocks[e].begin(), point.blocks[e].end());
        std::lock_guard<std::mutex> lock(memo.mu);
        if (memo.size > 8192) { // bound the memo; entries are cheap to redo
            memo.vals.clear();
            memo.size = 0;
        }
        memo.vals[h].emplace_back(std::move(key), acc);
        ++memo.size;
        return acc;
    }

    double eval_point_memo(const MultiSpherePoint& point) const {
        if (point.blocks.size() != entries.size())
            throw ShapeMismatch("point has wrong number of blocks");
        double acc = const_term;
        for (std::size_t u = 0; u < row_entries.size(); ++u)
            if (!row_data[u].empty()) acc += row_value((int)u, point);
        return acc;
    }

    double eval_point(const MultiSpherePoint& point) const {
        std::vector<const std::vector<double>*> betas(entries.size());
        for (std::size_t e = 0; e < entries.size(); ++e)
            betas[e] = &point.blocks[e];
        return eval(betas);
    }

    double eval_coeffs(const CoefficientMatrix& coeffs) const {
        std::vector<const std::vector<double>*> betas(entries.size());
        for (std::size_t e = 0; e < entries.size(); ++e) {
            betas[e] = coeffs.find(entries[e].first, entries[e].second);
            if (!betas[e])
                throw MissingCoefficient(
                    "no coefficient vector for masked entry (" +
                    std::to_string(entries[e].first) + "," +
                    std::to_string(entries[e].second) + ")");
        }
        return eval(betas);
    }
};

} // namespace

std::vector<std::vector<double>> patient_transition_matrix(
    const CoefficientMatrix& coeffs, const NonRareMask& mask,
    const EmpiricalMatrix& empirical, const std::vector<double>& x,
    std::vector<bool>* inactive) {
    const int rows = (int)empirical.probs.size();
    const int N = rows - 1;
    if ((int)mask.mask.size() != rows)
        throw ShapeMismatch("mask and empirical matrix disagree on shape");
    std::vector<double> xprime = augment(x);
    std::vector<std::vector<double>> m(rows, std::vector<double>(N, 0.0));
    if (inactive) inactive->assign(rows, false);

    std::vector<double> scores;
    std::vector<int> masked;
    for (int u = 0; u < rows; ++u) {
        if (!empirical.active_rows[u]) {
            // Unobservable row; identity convention with self-transition 1.
            if (inactive) (*inactive)[u] = true;
            if (u >= 1) m[u][u - 1] = 1.0;
            continue;
        }
        masked.clear();
        double rare_mass = 0.0;
        for (int v = 0; v < N; ++v) {
            if (mask.mask[u][v]) {
                masked.push_back(v);
            } else {
                m[u][v] = empirical.probs[u][v]; // pinned, bit-exact
                rare_mass += empirical.probs[u][v];
            }
        }
        if (masked.empty()) continue;

        scores.resize(masked.size());
        double max_s = -kScoreLimit;
        for (std::size_t i = 0; i < masked.size(); ++i) {
            const std::vector<double>* beta = coeffs.find(u, masked[i]);
            if (!beta)
                throw MissingCoefficient(
                    "no coefficient vector for masked entry (" +
                    std::to_string(u) + "," + std::to_string(masked[i] + 1) + ")");
            scores[i] = score(xprime, *beta);
            if (scores[i] > max_s) max_s = scores[i];
        }
        double sum_exp = 0.0;
        for (std::size_t i = 0; i < masked.size(); ++i) {
            scores[i] = std::exp(scores[i] - max_s);
            sum_exp += scores[i];
        }
        const double rest = 1.0 - rare_mass;
        for (std::size_t i = 0; i < masked.size(); ++i)
            m[u][masked[i]] = rest * scores[i] / sum_exp;
    }
    return m;
}

double log_likelihood(const CoefficientMatrix& coeffs, const Dataset& data,
                      const NonRareMask& mask, const EmpiricalMatrix& empirical) {
    LikelihoodCache cache(data, mask, empirical);
    return cache.eval_coeffs(coeffs);
}

FitResult fit(const Dataset& data, int tol, const MscorConfig& mscor_config,
              const CoefficientMatrix* warm_start) {
    data.validate();
    const int p = data.n_covariates();
    CountMatrix counts = count_matrix(data);
    EmpiricalMatrix empirical = empirical_matrix(counts);
    NonRareMask mask = nonrare_mask(counts, tol, p);
    LikelihoodCache cache(data, mask, empirical);

    FitResult result;
    result.n_states = data.n_states;
    result.tol = tol;
    result.mask = mask;
    result.empirical = empirical;

    if (cache.entries.empty()) {
        // Nothing to optimize: the likelihood is the empirical plug-in value.
        result.log_likelihood = cache.const_term;
        return result;
    }

    SphereShape shape;
    shape.block_lengths.assign(cache.entries.size(), p + 1);
    MultiSpherePoint init;
    if (warm_start) {
        for (auto [u, v] : cache.entries) {
            const std::vector<double>* beta = warm_start->find(u, v);
            if (!beta)
                throw MissingCoefficient(
                    "warm start lacks a vector for masked entry (" +
                    std::to_string(u) + "," + std::to_string(v + 1) + ")");
            init.blocks.push_back(*beta);
        }
        validate_point(init, shape);
    } else {
        init = random_point(shape, mscor_config.seed);
    }
    Objective objective = [&cache](const MultiSpherePoint& point) {
        return -cache.eval_point_memo(point);
    };
    OptResult opt = optimize(objective, shape, init, mscor_config);

    for (std::size_t e = 0; e < cache.entries.size(); ++e)
        result.coefficients.entries.push_back(
            {cache.entries[e].first, cache.entries[e].second,
             opt.solution.blocks[e]});
    result.log_likelihood = -opt.objective_value;
    result.optimizer = {opt.runs_completed, opt.total_iterations(),
                        opt.objective_evaluations};
    return result;
}

double coefficient_mad(const CoefficientMatrix& est,
                       const CoefficientMatrix& truth,
                       const CountMatrix& counts, int top_k) {
    // Rank transitions (rows u >= 1) by empirical count, row-major on ties.
    struct Ranked {
        long long count;
        int u, v;
    };
    std::vector<Ranked> ranked;
    const int N = counts.n_states();
    for (std::size_t u = 1; u < counts.counts.size(); ++u)
        for (int v = 0; v < N; ++v)
            if (counts.counts[u][v] > 0)
                ranked.push_back({counts.counts[u][v], (int)u, v});
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) {
                         if (a.count != b.count) return a.count > b.count;
                         if (a.u != b.u) return a.u < b.u;
                         return a.v < b.v;
                     });
    if ((int)ranked.size() < top_k)
        throw DataError("fewer observed transitions than top_k");

    double acc = 0.0;
    long long terms = 0;
    for (int i = 0; i < top_k; ++i) {
        const std::vector<double>* a = est.find(ranked[i].u, ranked[i].v);
        const std::vector<double>* b = truth.find(ranked[i].u, ranked[i].v);
        if (!a || !b)
            throw MissingCoefficient(
                "selected transition lacks a coefficient vector");
        if (a->size() != b->size())
            throw ShapeMismatch("coefficient vectors differ in length");
        for (std::size_t c = 0; c < a->size(); ++c) {
            acc += std::abs((*a)[c] - (*b)[c]);
            ++terms;
        }
    }
    return acc / (double)terms;
}

BootstrapResult bootstrap_se(const Dataset& data, int tol,
                             const MscorConfig& mscor_config, int n_boot,
                             std::uint64_t seed) {
    if (n_boot < 2) throw DataError("n_boot must be >= 2");
    data.validate();
    const int p = data.n_covariates();
    CountMatrix full_counts = count_matrix(data);
    NonRareMask mask = nonrare_mask(full_counts, tol, p); // held fixed

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, data.subjects.size() - 1);

    const int B = mask.masked_count();
    SphereShape shape;
    shape.block_lengths.assign(B, p + 1);

    std::vector<std::vector<std::vector<double>>> draws; // per used replicate
    int failed = 0;
    for (int r = 0; r < n_boot; ++r) {
        Dataset resampled;
        resampled.n_states = data.n_states;
        resampled.subjects.reserve(data.subjects.size());
        for (std::size_t k = 0; k < data.subjects.size(); ++k)
            resampled.subjects.push_back(data.subjects[pick(rng)]);

        try {
            CountMatrix counts = count_matrix(resampled);
            EmpiricalMatrix empirical = empirical_matrix(counts);
            LikelihoodCache cache(resampled, mask, empirical);
            std::vector<std::vector<double>> betas;
            if (B > 0) {
                // shared optimizer seed: replicate spread reflects resampling
                // variation only
                const MscorConfig& cfg = mscor_config;
                MultiSpherePoint init = random_point(shape, cfg.seed);
                Objective objective = [&cache](const MultiSpherePoint& point) {
                    return -cache.eval_point_memo(point);
                };
                OptResult opt = optimize(objective, shape, init, cfg);
                if (opt.terminated_by != Termination::run_convergence) {
                    ++failed;
                    continue;
                }
                betas = opt.solution.blocks;
            }
            draws.push_back(std::move(betas));
        } catch (const NumericError&) {
            ++failed;
        }
    }
    if (draws.size() < 2)
        throw NotConverged("fewer than two bootstrap replicates converged");

    BootstrapResult result;
    result.replicates_used = (int)draws.size();
    result.replicates_failed = failed;

    int e = 0;
    for (std::size_t u = 0; u < mask.mask.size(); ++u)
        for (std::size_t v = 0; v < mask.mask[u].size(); ++v)
            if (mask.mask[u][v]) {
                std::vector<double> se(p + 1, 0.0);
                for (int c = 0; c <= p; ++c) {
                    double mean = 0.0;
                    for (const auto& d : draws) mean += d[e][c];
                    mean /= (double)draws.size();
                    double sq = 0.0;
                    for (const auto& d : draws) {
                        double diff = d[e][c] - mean;
                        sq += diff * diff;
                    }
                    se[c] = std::sqrt(sq / (double)(draws.size() - 1));
                }
                result.standard_errors.entries.push_back(
                    {(int)u, (int)v, std::move(se)});
                ++e;
            }
    return result;
}

std::vector<double> odds_ratios(const FitResult& fit, const std::vector<double>& x,
                                int from_state, const std::vector<int>& to_states,
                                bool use_odds) {
    if (from_state < 1 || from_state > fit.n_states)
        throw DataError("from_state must be in 1..N");
    auto m = patient_transition_matrix(fit.coefficients, fit.mask,
                                       fit.empirical, x);
    if (!fit.empirical.active_rows[from_state])
        throw DataError("from_state row is inactive");
    const double self = m[from_state][from_state - 1];
    if (self <= 0.0)
        throw ZeroSelfTransition("self-transition probability is 0");
    std::vector<double> out;
    out.reserve(to_states.size());
    for (int v : to_states) {
        if (v < 1 || v > fit.n_states) throw DataError("to_state must be in 1..N");
        double pv = m[from_state][v - 1];
        if (use_odds) {
            if (pv >= 1.0 || self >= 1.0)
                throw NumericError("odds undefined at probability 1");
            out.push_back((pv / (1.0 - pv)) / (self / (1.0 - self)));
        } else {
            out.push_back(pv / self);
        }
    }
    return out;
}

} // namespace smartmc
