#pragma once

#include <string>

#include "smartmc/sphere.hpp"

namespace smartmc {

enum class BenchmarkName { ackley, griewank, neg_sum_squares, rastrigin };

BenchmarkName benchmark_from_string(const std::string& name);
const char* to_string(BenchmarkName name);

// A sphere-constrained test function: the standard zero-at-origin form of
// the named function, applied blockwise to the displacement from a feasible
// anchor point. Minimum value 0 is attained exactly at the anchor.
struct BenchmarkFunction {
    BenchmarkName name;
    SphereShape shape;
    MultiSpherePoint anchor;
};

// Anchor defaults to e1 = (1, 0, ..., 0) in every block.
BenchmarkFunction make_benchmark(BenchmarkName name, int blocks, int dim);
BenchmarkFunction make_benchmark(BenchmarkName name, const SphereShape& shape,
                                 const MultiSpherePoint& anchor);

double eval_benchmark(const BenchmarkFunction& fn, const MultiSpherePoint& point);

} // namespace smartmc
