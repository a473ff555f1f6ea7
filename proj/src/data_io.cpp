#include "smartmc/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

namespace smartmc {

using json = nlohmann::json;

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
long long days_from_civil(long long y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = (unsigned)(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + (long long)doe - 719468;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

long long parse_int(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("expected an integer, got '" + s + "'", line);
    }
}

double parse_real(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("expected a number, got '" + s + "'", line);
    }
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    return out;
}

} // namespace

long long parse_date_days(const std::string& iso_date, int line) {
    int y, m, d;
    char dash1, dash2;
    std::istringstream in(iso_date);
    if (!(in >> y >> dash1 >> m >> dash2 >> d) || dash1 != '-' ||
        dash2 != '-' || !in.eof() || m < 1 || m > 12 || d < 1 || d > 31)
        throw ParseError("bad ISO date '" + iso_date + "'", line);
    return days_from_civil(y, (unsigned)m, (unsigned)d);
}

std::vector<std::string> reduce_sequence(std::vector<RawEvent> events,
                                         int window_days) {
    if (events.empty()) throw EmptyLog("no events for subject");
    if (window_days < 1) throw DataError("window_days must be >= 1");
    std::vector<std::pair<long long, std::size_t>> order(events.size());
    for (std::size_t i = 0; i < events.size(); ++i)
        order[i] = {parse_date_days(events[i].date), i};
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    const long long base = order[0].first;
    std::vector<std::string> out;
    long long current_window = -1;
    for (const auto& [day, idx] : order) {
        long long w = (day - base) / window_days;
        const std::string& label = events[idx].state_label;
        // duplicates collapse within a window only
        if (w != current_window || out.back() != label) out.push_back(label);
        current_window = w;
    }
    return out;
}

StandardizedCovariates standardize_covariates(
    const std::vector<std::vector<double>>& raw,
    const std::vector<bool>& continuous_mask,
    const std::vector<std::string>& names) {
    StandardizedCovariates out;
    out.values = raw;
    if (raw.empty()) return out;
    const std::size_t p = raw[0].size();
    if (continuous_mask.size() != p)
        throw ShapeMismatch("continuous mask length does not match columns");
    const std::size_t k = raw.size();
    for (std::size_t c = 0; c < p; ++c) {
        CovariateStandardization param;
        param.name = c < names.size() ? names[c] : "x" + std::to_string(c + 1);
        param.continuous = continuous_mask[c];
        if (continuous_mask[c]) {
            if (k < 2) throw DegenerateColumn("need at least two rows to scale");
            double mean = 0.0;
            for (const auto& row : raw) mean += row[c];
            mean /= (double)k;
            double sq = 0.0;
            for (const auto& row : raw) {
                double d = row[c] - mean;
                sq += d * d;
            }
            double sd = std::sqrt(sq / (double)(k - 1)); // sample sd
            if (sd <= 0.0)
                throw DegenerateColumn("column " + param.name + " is constant");
            param.mean = mean;
            param.sd = sd;
            for (auto& row : out.values) row[c] = (row[c] - mean) / sd;
        }
        out.params.push_back(param);
    }
    return out;
}

static void validate_sim_config(const SimConfig& c) {
    if (c.n_states < 2 || c.n_subjects < 1 || c.seq_length < 1 ||
        c.n_covariates < 0 || c.sparsity_fraction < 0.0 ||
        c.sparsity_fraction >= 1.0)
        throw DataError("invalid simulation config");
}

SimConfig SimConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad sim config: ") + e.what(), 0);
    }
    SimConfig c;
    if (j.contains("n_states")) c.n_states = j["n_states"].get<int>();
    if (j.contains("n_subjects")) c.n_subjects = j["n_subjects"].get<int>();
    if (j.contains("seq_length")) c.seq_length = j["seq_length"].get<int>();
    if (j.contains("n_covariates")) c.n_covariates = j["n_covariates"].get<int>();
    if (j.contains("sparsity_fraction"))
        c.sparsity_fraction = j["sparsity_fraction"].get<double>();
    if (j.contains("coeff_sd")) c.coeff_sd = j["coeff_sd"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    validate_sim_config(c);
    return c;
}

SimulatedData simulate_dataset(const SimConfig& config) {
    const int N = config.n_states;
    const int p = config.n_covariates;
    validate_sim_config(config);

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SimulatedData sim;
    sim.support.assign(N + 1, std::vector<bool>(N, false));

    // Per-row support: diagonal always kept (rows 1..N), at least two
    // nonzeros, the rest drawn uniformly to hit the target density.
    const int target =
        std::max(2, (int)std::lround((1.0 - config.sparsity_fraction) * N));
    for (int u = 0; u <= N; ++u) {
        std::vector<int> others;
        if (u >= 1) {
            sim.support[u][u - 1] = true;
            for (int v = 0; v < N; ++v)
                if (v != u - 1) others.push_back(v);
        } else {
            for (int v = 0; v < N; ++v) others.push_back(v);
        }
        int need = std::min(target, N) - (u >= 1 ? 1 : 0);
        for (int i = 0; i < need && !others.empty(); ++i) {
            std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
            std::size_t j = pick(rng);
            sim.support[u][others[j]] = true;
            others.erase(others.begin() + (long)j);
        }
    }

    for (int u = 0; u <= N; ++u)
        for (int v = 0; v < N; ++v)
            if (sim.support[u][v]) {
                std::vector<double> beta(p + 1);
                double norm = 0.0;
                for (double& b : beta) {
                    b = config.coeff_sd * gauss(rng);
                    norm += b * b;
                }
                norm = std::sqrt(norm);
                if (norm < 1e-100) {
                    beta.assign(p + 1, 0.0);
                    beta[0] = 1.0;
                } else {
                    for (double& b : beta) b /= norm;
                }
                sim.truth.entries.push_back({u, v, std::move(beta)});
            }

    // Support-restricted softmax over row u for covariate vector xprime.
    auto sample_state = [&](int u, const std::vector<double>& xprime,
                            double unif) {
        double max_s = -1e300;
        std::vector<std::pair<int, double>> scored;
        for (int v = 0; v < N; ++v) {
            if (!sim.support[u][v]) continue;
            const std::vector<double>& beta = *sim.truth.find(u, v);
            double s = 0.0;
            for (int i = 0; i <= p; ++i) s += xprime[i] * beta[i];
            scored.emplace_back(v, s);
            if (s > max_s) max_s = s;
        }
        double total = 0.0;
        for (auto& [v, s] : scored) {
            s = std::exp(s - max_s);
            total += s;
        }
        double acc = 0.0;
        for (const auto& [v, s] : scored) {
            acc += s / total;
            if (unif < acc) return v + 1;
        }
        return scored.back().first + 1;
    };

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    sim.dataset.n_states = N;
    sim.dataset.subjects.reserve(config.n_subjects);
    for (int k = 0; k < config.n_subjects; ++k) {
        Subject subj;
        subj.covariates.resize(p);
        for (double& x : subj.covariates) x = gauss(rng);
        std::vector<double> xprime(p + 1);
        xprime[0] = 1.0;
        std::copy(subj.covariates.begin(), subj.covariates.end(),
                  xprime.begin() + 1);
        subj.sequence.reserve(config.seq_length);
        int state = sample_state(0, xprime, unif(rng));
        subj.sequence.push_back(state);
        for (int t = 1; t < config.seq_length; ++t) {
            state = sample_state(state, xprime, unif(rng));
            subj.sequence.push_back(state);
        }
        sim.dataset.subjects.push_back(std::move(subj));
    }
    return sim;
}

LoadedDataset load_dataset(const std::string& sequences_path,
                           const std::string& covariates_path) {
    LoadedCovariates cov = load_covariates(covariates_path);
    std::map<std::string, std::size_t> cov_index;
    for (std::size_t i = 0; i < cov.subject_ids.size(); ++i)
        cov_index[cov.subject_ids[i]] = i;

    std::ifstream in = open_input(sequences_path);
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line) || split_csv_line(line)[0] != "subject_id")
        throw ParseError("sequences file must start with header subject_id,t,state",
                         1);
    ++lineno;

    std::map<std::string, std::map<long long, int>> by_subject;
    std::vector<std::string> order;
    int n_states = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw ParseError("expected subject_id,t,state", lineno);
        long long t = parse_int(fields[1], lineno);
        long long state = parse_int(fields[2], lineno);
        if (t < 1) throw ParseError("position t must be >= 1", lineno);
        if (state < 1) throw ParseError("states are 1-based", lineno);
        auto& seq = by_subject[fields[0]];
        if (seq.empty()) order.push_back(fields[0]);
        if (!seq.emplace(t, (int)state).second)
            throw ParseError("duplicate position for subject " + fields[0],
                             lineno);
        n_states = std::max(n_states, (int)state);
    }
    if (by_subject.empty()) throw DataError("sequences file has no rows");

    LoadedDataset out;
    out.dataset.n_states = n_states;
    out.covariate_names = cov.names;
    for (const std::string& id : order) {
        auto it = cov_index.find(id);
        if (it == cov_index.end())
            throw SchemaMismatch("subject " + id + " has no covariate row");
        Subject subj;
        subj.covariates = cov.values[it->second];
        const auto& seq = by_subject[id];
        long long expected = 1;
        for (const auto& [t, state] : seq) {
            if (t != expected)
                throw SchemaMismatch("subject " + id +
                                     " has a gap in sequence positions");
            subj.sequence.push_back(state);
            ++expected;
        }
        out.dataset.subjects.push_back(std::move(subj));
        out.subject_ids.push_back(id);
    }
    return out;
}

LoadedCovariates load_covariates(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("covariates file is empty", 1);
    auto header = split_csv_line(line);
    if (header.empty() || header[0] != "subject_id")
        throw ParseError("covariates header must start with subject_id", 1);
    LoadedCovariates out;
    out.names.assign(header.begin() + 1, header.end());
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError("wrong number of covariate fields", lineno);
        out.subject_ids.push_back(fields[0]);
        std::vector<double> row(fields.size() - 1);
        for (std::size_t c = 1; c < fields.size(); ++c)
            row[c - 1] = parse_real(fields[c], lineno);
        out.values.push_back(std::move(row));
    }
    return out;
}

std::vector<RawEvent> load_events(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line)[0] != "subject_id")
        throw ParseError("events header must be subject_id,date,state_label", 1);
    std::vector<RawEvent> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw ParseError("expected subject_id,date,state_label", lineno);
        parse_date_days(fields[1], lineno); // validate early
        out.push_back({fields[0], fields[1], fields[2]});
    }
    return out;
}

void save_sequences_csv(const Dataset& data,
                        const std::vector<std::string>& subject_ids,
                        const std::string& path) {
    std::ofstream out = open_output(path);
    out << "subject_id,t,state\n";
    for (std::size_t k = 0; k < data.subjects.size(); ++k) {
        const std::string& id =
            k < subject_ids.size() ? subject_ids[k] : "s" + std::to_string(k + 1);
        for (std::size_t t = 0; t < data.subjects[k].sequence.size(); ++t)
            out << id << ',' << (t + 1) << ',' << data.subjects[k].sequence[t]
                << '\n';
    }
}

void save_covariates_csv(const Dataset& data,
                         const std::vector<std::string>& subject_ids,
                         const std::vector<std::string>& names,
                         const std::string& path) {
    std::ofstream out = open_output(path);
    out << "subject_id";
    const int p = data.n_covariates();
    for (int c = 0; c < p; ++c)
        out << ',' << (c < (int)names.size() ? names[c] : "x" + std::to_string(c + 1));
    out << '\n';
    out.precision(17);
    for (std::size_t k = 0; k < data.subjects.size(); ++k) {
        out << (k < subject_ids.size() ? subject_ids[k]
                                       : "s" + std::to_string(k + 1));
        for (double x : data.subjects[k].covariates) out << ',' << x;
        out << '\n';
    }
}

namespace {

json matrix_to_json(const std::vector<std::vector<double>>& m) {
    json rows = json::array();
    for (const auto& row : m) rows.push_back(row);
    return rows;
}

json mask_to_json(const std::vector<std::vector<bool>>& m) {
    json rows = json::array();
    for (const auto& row : m) {
        json r = json::array();
        for (bool b : row) r.push_back(b ? 1 : 0);
        rows.push_back(r);
    }
    return rows;
}

std::string entry_key(int u, int v) {
    return std::to_string(u) + "," + std::to_string(v + 1);
}

} // namespace

std::string fit_to_json_text(const FitResult& fit) {
    json j;
    j["n_states"] = fit.n_states;
    j["state_labels"] = fit.state_labels;
    j["tol"] = fit.tol;
    j["mask"] = mask_to_json(fit.mask.mask);
    j["empirical"] = matrix_to_json(fit.empirical.probs);
    json inactive = json::array();
    for (bool a : fit.empirical.active_rows) inactive.push_back(a ? 0 : 1);
    j["inactive_rows"] = inactive;
    json coeffs = json::object();
    for (const auto& e : fit.coefficients.entries)
        coeffs[entry_key(e.u, e.v)] = e.beta;
    j["coefficients"] = coeffs;
    j["log_likelihood"] = fit.log_likelihood;
    j["optimizer"] = {{"runs", fit.optimizer.runs},
                      {"iterations", fit.optimizer.iterations},
                      {"evaluations", fit.optimizer.evaluations}};
    json standardization = json::array();
    for (const auto& s : fit.standardization)
        standardization.push_back({{"name", s.name},
                                   {"continuous", s.continuous},
                                   {"mean", s.mean},
                                   {"sd", s.sd}});
    j["standardization"] = standardization;
    return j.dump(2);
}

FitResult fit_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad fit file: ") + e.what(), 0);
    }
    try {
        FitResult fit;
        fit.n_states = j.at("n_states").get<int>();
        fit.state_labels = j.at("state_labels").get<std::vector<std::string>>();
        fit.tol = j.at("tol").get<int>();
        fit.mask.tol = fit.tol;
        for (const auto& row : j.at("mask")) {
            std::vector<bool> r;
            for (const auto& v : row) r.push_back(v.get<int>() != 0);
            fit.mask.mask.push_back(std::move(r));
        }
        for (const auto& row : j.at("empirical"))
            fit.empirical.probs.push_back(row.get<std::vector<double>>());
        for (const auto& v : j.at("inactive_rows"))
            fit.empirical.active_rows.push_back(v.get<int>() == 0);
        const json& coeffs = j.at("coefficients");
        for (std::size_t u = 0; u < fit.mask.mask.size(); ++u)
            for (std::size_t v = 0; v < fit.mask.mask[u].size(); ++v)
                if (fit.mask.mask[u][v]) {
                    auto it = coeffs.find(entry_key((int)u, (int)v));
                    if (it == coeffs.end())
                        throw SchemaMismatch("missing coefficients for " +
                                             entry_key((int)u, (int)v));
                    fit.coefficients.entries.push_back(
                        {(int)u, (int)v, it->get<std::vector<double>>()});
                }
        fit.log_likelihood = j.at("log_likelihood").get<double>();
        fit.optimizer.runs = j.at("optimizer").at("runs").get<int>();
        fit.optimizer.iterations = j.at("optimizer").at("iterations").get<int>();
        fit.optimizer.evaluations =
            j.at("optimizer").at("evaluations").get<long long>();
        for (const auto& s : j.at("standardization"))
            fit.standardization.push_back({s.at("name").get<std::string>(),
                                           s.at("continuous").get<bool>(),
                                           s.at("mean").get<double>(),
                                           s.at("sd").get<double>()});
        return fit;
    } catch (const json::exception& e) {
        throw SchemaMismatch(std::string("fit file schema: ") + e.what());
    }
}

void save_fit(const FitResult& fit, const std::string& path) {
    std::ofstream out = open_output(path);
    out << fit_to_json_text(fit) << '\n';
}

FitResult load_fit(const std::string& path) {
    std::ifstream in = open_input(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return fit_from_json_text(buf.str());
}

void save_truth(const SimulatedData& sim, const std::string& path) {
    json j;
    j["n_states"] = sim.dataset.n_states;
    j["support"] = mask_to_json(sim.support);
    json coeffs = json::object();
    for (const auto& e : sim.truth.entries)
        coeffs[entry_key(e.u, e.v)] = e.beta;
    j["coefficients"] = coeffs;
    std::ofstream out = open_output(path);
    out << j.dump(2) << '\n';
}

CoefficientMatrix load_truth(const std::string& path) {
    std::ifstream in = open_input(path);
    std::stringstream buf;
    buf << in.rdbuf();
    json j;
    try {
        j = json::parse(buf.str());
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad truth file: ") + e.what(), 0);
    }
    CoefficientMatrix truth;
    const json& support = j.at("support");
    const json& coeffs = j.at("coefficients");
    for (std::size_t u = 0; u < support.size(); ++u)
        for (std::size_t v = 0; v < support[u].size(); ++v)
            if (support[u][v].get<int>() != 0)
                truth.entries.push_back(
                    {(int)u, (int)v,
                     coeffs.at(entry_key((int)u, (int)v))
                         .get<std::vector<double>>()});
    return truth;
}

} // namespace smartmc
