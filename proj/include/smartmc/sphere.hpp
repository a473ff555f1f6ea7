#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "smartmc/errors.hpp"

namespace smartmc {

// Unit-norm tolerance used everywhere a point is validated.
inline constexpr double kNormTol = 1e-12;

// Search space: a Cartesian product of B unit spheres, block b living in
// R^{n_b} with n_b >= 2.
struct SphereShape {
    std::vector<int> block_lengths;

    int total_params() const;
    void validate() const; // throws ShapeMismatch on bad block lengths
};

// A point on the product of spheres: one unit vector per block.
struct MultiSpherePoint {
    std::vector<std::vector<double>> blocks;

    // Euclidean distance over all concatenated coordinates.
    double distance_to(const MultiSpherePoint& other) const;
};

void validate_point(const MultiSpherePoint& point, const SphereShape& shape);

// Each block is an i.i.d. standard normal vector normalized to unit norm.
// Deterministic for a fixed seed.
MultiSpherePoint random_point(const SphereShape& shape, std::uint64_t seed);

// One of the 2n coordinate moves within a block.
struct MoveSpec {
    int coord = 0;          // 0-based coordinate index within the block
    bool positive = true;   // direction of the coordinate step
    double step = 1.0;      // unsigned step size s > 0
    double sparsity = 0.0;  // lambda: coordinates below this are zeroed
};

// Solution of the norm-restoring quadratic for a signed coordinate step.
struct Adjustment {
    double t = 0.0;                 // common shift applied to significant coords
    std::vector<int> significant;   // Gamma: indexes (!= coord) with |x| >= lambda
    double discriminant = 0.0;
};

// Shift t applied to the significant coordinates so that moving `coord`
// by `signed_step` keeps the block on the unit sphere, with coordinates
// below `lambda` zeroed. Returns nullopt when the quadratic has no real
// root (or no significant coordinate exists); the caller shrinks the step.
std::optional<Adjustment> adjustment_step(const std::vector<double>& block,
                                          int coord, double signed_step,
                                          double lambda);

// Builds the candidate block for one move, shrinking the step by rho while
// the adjustment quadratic has no solution and |step| > phi. Returns false
// (out untouched) when no feasible candidate exists.
bool propose_move(const std::vector<double>& block, const MoveSpec& move,
                  double rho, double phi, std::vector<double>& out);

} // namespace smartmc
