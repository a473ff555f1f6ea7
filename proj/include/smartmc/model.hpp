#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smartmc/mscor.hpp"

namespace smartmc {

struct Subject {
    std::vector<int> sequence;      // states in 1..N, length >= 1
    std::vector<double> covariates; // length p
};

struct Dataset {
    int n_states = 0;              // N
    std::vector<Subject> subjects; // K records

    int n_covariates() const;
    void validate() const;
};

// (N+1) x N empirical counts; row 0 holds initial-state counts.
struct CountMatrix {
    std::vector<std::vector<long long>> counts;

    int n_states() const { return counts.empty() ? 0 : (int)counts[0].size(); }
};

// Row-normalized counts. Rows whose count total is zero are flagged
// inactive and left all-zero.
struct EmpiricalMatrix {
    std::vector<std::vector<double>> probs;
    std::vector<bool> active_rows;
};

// I(u,v) = 1 iff the empirical count reaches tol; such entries are modeled
// as functions of covariates, the rest stay pinned to empirical frequencies.
struct NonRareMask {
    std::vector<std::vector<bool>> mask;
    int tol = 0;

    int masked_count() const;
    // Exactly one masked entry in the row: its softmax is degenerate and the
    // coefficient vector carries no information.
    bool unidentified(int u) const;
};

// One unit-norm coefficient vector of length p+1 (intercept first) per
// masked (u, v), stored in row-major scan order of the mask.
struct CoefficientMatrix {
    struct Entry {
        int u = 0;
        int v = 0;
        std::vector<double> beta;
    };
    std::vector<Entry> entries;

    const std::vector<double>* find(int u, int v) const;
};

struct CovariateStandardization {
    std::string name;
    bool continuous = false;
    double mean = 0.0;
    double sd = 1.0;
};

struct OptSummary {
    int runs = 0;
    int iterations = 0;
    long long evaluations = 0;
};

struct FitResult {
    int n_states = 0;
    std::vector<std::string> state_labels;
    int tol = 0;
    NonRareMask mask;
    EmpiricalMatrix empirical;
    CoefficientMatrix coefficients;
    double log_likelihood = 0.0;
    OptSummary optimizer;
    std::vector<CovariateStandardization> standardization;
};

CountMatrix count_matrix(const Dataset& data);
EmpiricalMatrix empirical_matrix(const CountMatrix& counts);
NonRareMask nonrare_mask(const CountMatrix& counts, int tol, int p);

// The (N+1) x N probability matrix for one covariate vector: rare entries
// pinned to empirical probabilities, masked entries sharing the remaining
// row mass through a softmax of x' * beta scores. Inactive rows are emitted
// as self-transition-1 rows; pass `inactive` to receive the per-row flags.
std::vector<std::vector<double>> patient_transition_matrix(
    const CoefficientMatrix& coeffs, const NonRareMask& mask,
    const EmpiricalMatrix& empirical, const std::vector<double>& x,
    std::vector<bool>* inactive = nullptr);

double log_likelihood(const CoefficientMatrix& coeffs, const Dataset& data,
                      const NonRareMask& mask, const EmpiricalMatrix& empirical);

// Default initialization is a seeded random point. An explicit `init` warm
// start (one unit vector per masked entry) overrides it; useful when the
// masked softmax is likelihood-invariant under row-level shifts and a
// specific representative is wanted.
FitResult fit(const Dataset& data, int tol, const MscorConfig& mscor_config,
              const CoefficientMatrix* init = nullptr);

// Mean absolute coefficient deviation over the top_k most frequent masked
// transitions (rows u >= 1; ties by row-major order).
double coefficient_mad(const CoefficientMatrix& est,
                       const CoefficientMatrix& truth,
                       const CountMatrix& counts, int top_k);

struct BootstrapResult {
    CoefficientMatrix standard_errors; // same layout as the fitted coefficients
    int replicates_used = 0;
    int replicates_failed = 0;
};

BootstrapResult bootstrap_se(const Dataset& data, int tol,
                             const MscorConfig& mscor_config, int n_boot,
                             std::uint64_t seed);

// m(u,v) / m(u,u) for each requested v. With use_odds, the p/(1-p) odds
// ratio is returned instead of the probability ratio.
std::vector<double> odds_ratios(const FitResult& fit, const std::vector<double>& x,
                                int from_state, const std::vector<int>& to_states,
                                bool use_odds = false);

} // namespace smartmc
