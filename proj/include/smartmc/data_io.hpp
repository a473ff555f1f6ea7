#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smartmc/model.hpp"

namespace smartmc {

struct RawEvent {
    std::string subject_id;
    std::string date;        // ISO-8601 calendar date, YYYY-MM-DD
    std::string state_label;
};

// Days since the civil epoch; throws ParseError on malformed dates.
long long parse_date_days(const std::string& iso_date, int line = 0);

// Buckets one subject's events into consecutive windows of `window_days`
// starting at the first event date, collapsing consecutive duplicate states
// within each window. Events are sorted by date first.
std::vector<std::string> reduce_sequence(std::vector<RawEvent> events,
                                         int window_days = 91);

struct StandardizedCovariates {
    std::vector<std::vector<double>> values; // K x p
    std::vector<CovariateStandardization> params;
};

// Continuous columns become (x - mean) / sd with the sample sd (divisor
// K - 1); other columns pass through unchanged.
StandardizedCovariates standardize_covariates(
    const std::vector<std::vector<double>>& raw,
    const std::vector<bool>& continuous_mask,
    const std::vector<std::string>& names = {});

struct SimConfig {
    int n_states = 10;
    int n_subjects = 1000;
    int seq_length = 20;
    int n_covariates = 5;
    double sparsity_fraction = 0.67;
    double coeff_sd = 10.0;
    std::uint64_t seed = 0;

    static SimConfig from_json_text(const std::string& text);
};

struct SimulatedData {
    Dataset dataset;
    CoefficientMatrix truth;                // one unit vector per supported entry
    std::vector<std::vector<bool>> support; // (N+1) x N generator support
};

// Synthetic generator: standard-normal covariates, a sparse support matrix
// whose rows keep the diagonal and at least two nonzeros, unit-norm
// coefficients on the support, sequences drawn from the support-restricted
// softmax of x' * beta.
SimulatedData simulate_dataset(const SimConfig& config);

struct LoadedDataset {
    Dataset dataset;
    std::vector<std::string> subject_ids;     // row order of the dataset
    std::vector<std::string> covariate_names;
};

// sequences CSV: subject_id,t,state (t 1-based position, state 1-based).
// covariates CSV: subject_id,<name1>,...,<namep>.
LoadedDataset load_dataset(const std::string& sequences_path,
                           const std::string& covariates_path);

void save_sequences_csv(const Dataset& data,
                        const std::vector<std::string>& subject_ids,
                        const std::string& path);
void save_covariates_csv(const Dataset& data,
                         const std::vector<std::string>& subject_ids,
                         const std::vector<std::string>& names,
                         const std::string& path);

// covariates CSV (same format as above) without sequences, for prediction.
struct LoadedCovariates {
    std::vector<std::string> subject_ids;
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;
};
LoadedCovariates load_covariates(const std::string& path);

std::vector<RawEvent> load_events(const std::string& path);

void save_fit(const FitResult& fit, const std::string& path);
FitResult load_fit(const std::string& path);

std::string fit_to_json_text(const FitResult& fit);
FitResult fit_from_json_text(const std::string& text);

void save_truth(const SimulatedData& sim, const std::string& path);
CoefficientMatrix load_truth(const std::string& path);

} // namespace smartmc
