#include "smartmc/sphere.hpp"

#include <cmath>
#include <random>

namespace smartmc {

int SphereShape::total_params() const {
    int m = 0;
    for (int n : block_lengths) m += n;
    return m;
}

void SphereShape::validate() const {
    if (block_lengths.empty())
        throw ShapeMismatch("shape must contain at least one block");
    for (int n : block_lengths)
        if (n < 2) throw ShapeMismatch("every block length must be >= 2");
}

double MultiSpherePoint::distance_to(const MultiSpherePoint& other) const {
    double sq = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b)
        for (std::size_t i = 0; i < blocks[b].size(); ++i) {
            double d = blocks[b][i] - other.blocks[b][i];
            sq += d * d;
        }
    return std::sqrt(sq);
}

static double block_norm(const std::vector<double>& x) {
    double sq = 0.0;
    for (double v : x) sq += v * v;
    return std::sqrt(sq);
}

void validate_point(const MultiSpherePoint& point, const SphereShape& shape) {
    shape.validate();
    if (point.blocks.size() != shape.block_lengths.size())
        throw ShapeMismatch("block count does not match shape");
    for (std::size_t b = 0; b < point.blocks.size(); ++b) {
        if ((int)point.blocks[b].size() != shape.block_lengths[b])
            throw ShapeMismatch("block " + std::to_string(b) +
                                " length does not match shape");
        double n = block_norm(point.blocks[b]);
        if (std::abs(n - 1.0) > kNormTol) throw NormViolation((int)b, n);
    }
}

MultiSpherePoint random_point(const SphereShape& shape, std::uint64_t seed) {
    shape.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MultiSpherePoint p;
    p.blocks.reserve(shape.block_lengths.size());
    for (int n : shape.block_lengths) {
        std::vector<double> block(n);
        double norm = 0.0;
        int attempts = 0;
        do {
            for (double& v : block) v = gauss(rng);
            norm = block_norm(block);
        } while (norm < 1e-100 && ++attempts < 64);
        if (norm < 1e-100) throw ZeroVector("failed to sample a nonzero vector");
        for (double& v : block) v /= norm;
        p.blocks.push_back(std::move(block));
    }
    return p;
}

std::optional<Adjustment> adjustment_step(const std::vector<double>& block,
                                          int coord, double signed_step,
                                          double lambda) {
    const int n = (int)block.size();
    Adjustment adj;
    double sum_gamma = 0.0;   // sum over significant coords
    double sumsq_lambda = 0.0; // freed mass from zeroed coords
    for (int k = 0; k < n; ++k) {
        if (k == coord) continue;
        if (std::abs(block[k]) < lambda) {
            sumsq_lambda += block[k] * block[k];
        } else {
            adj.significant.push_back(k);
            sum_gamma += block[k];
        }
    }
    if (adj.significant.empty()) return std::nullopt;

    const double xi = block[coord];
    const double s = signed_step;
    const double g = (double)adj.significant.size();
    adj.discriminant =
        (2.0 * sum_gamma) * (2.0 * sum_gamma) -
        4.0 * g * (2.0 * s * xi + s * s - sumsq_lambda);
    if (adj.discriminant < 0.0) return std::nullopt;
    adj.t = (-2.0 * sum_gamma + std::sqrt(adj.discriminant)) / (2.0 * g);
    return adj;
}

bool propose_move(const std::vector<double>& block, const MoveSpec& move,
                  double rho, double phi, std::vector<double>& out) {
    double s = move.positive ? move.step : -move.step;
    auto adj = adjustment_step(block, move.coord, s, move.sparsity);
    while (!adj && std::abs(s) > phi) {
        s /= rho;
        adj = adjustment_step(block, move.coord, s, move.sparsity);
    }
    if (!adj) return false;

    out.assign(block.size(), 0.0); // insignificant coordinates end up exactly 0
    out[move.coord] = block[move.coord] + s;
    for (int k : adj->significant) out[k] = block[k] + adj->t;

    // Renormalize to keep rounding drift from accumulating over many moves.
    double norm = 0.0;
    for (double v : out) norm += v * v;
    norm = std::sqrt(norm);
    if (norm < 1e-100) return false;
    for (double& v : out) v /= norm;
    return true;
}

} // namespace smartmc
