#include "smartmc/benchmarks.hpp"

#include <cmath>
#include <numbers>

namespace smartmc {

BenchmarkName benchmark_from_string(const std::string& name) {
    if (name == "ackley") return BenchmarkName::ackley;
    if (name == "griewank") return BenchmarkName::griewank;
    if (name == "neg_sum_squares") return BenchmarkName::neg_sum_squares;
    if (name == "rastrigin") return BenchmarkName::rastrigin;
    throw DataError("unknown benchmark function: " + name);
}

const char* to_string(BenchmarkName name) {
    switch (name) {
        case BenchmarkName::ackley: return "ackley";
        case BenchmarkName::griewank: return "griewank";
        case BenchmarkName::neg_sum_squares: return "neg_sum_squares";
        case BenchmarkName::rastrigin: return "rastrigin";
    }
    return "unknown";
}

BenchmarkFunction make_benchmark(BenchmarkName name, int blocks, int dim) {
    SphereShape shape;
    shape.block_lengths.assign(blocks, dim);
    shape.validate();
    MultiSpherePoint anchor;
    for (int b = 0; b < blocks; ++b) {
        std::vector<double> e(dim, 0.0);
        e[0] = 1.0;
        anchor.blocks.push_back(std::move(e));
    }
    return BenchmarkFunction{name, shape, std::move(anchor)};
}

BenchmarkFunction make_benchmark(BenchmarkName name, const SphereShape& shape,
                                 const MultiSpherePoint& anchor) {
    validate_point(anchor, shape);
    return BenchmarkFunction{name, shape, anchor};
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double block_value(BenchmarkName name, const std::vector<double>& z) {
    const int n = (int)z.size();
    switch (name) {
        case BenchmarkName::neg_sum_squares: {
            double s = 0.0;
            for (double v : z) s += v * v;
            return s;
        }
        case BenchmarkName::rastrigin: {
            double s = 0.0;
            for (double v : z)
                s += v * v - 10.0 * std::cos(kTwoPi * v) + 10.0;
            return s;
        }
        case BenchmarkName::ackley: {
            double sq = 0.0, c = 0.0;
            for (double v : z) {
                sq += v * v;
                c += std::cos(kTwoPi * v);
            }
            return -20.0 * std::exp(-0.2 * std::sqrt(sq / n)) -
                   std::exp(c / n) + 20.0 + std::numbers::e;
        }
        case BenchmarkName::griewank: {
            double sq = 0.0, prod = 1.0;
            for (int q = 0; q < n; ++q) {
                sq += z[q] * z[q];
                prod *= std::cos(z[q] / std::sqrt((double)(q + 1)));
            }
            return 1.0 + sq / 4000.0 - prod;
        }
    }
    return 0.0;
}

} // namespace

double eval_benchmark(const BenchmarkFunction& fn, const MultiSpherePoint& point) {
    if (point.blocks.size() != fn.shape.block_lengths.size())
        throw ShapeMismatch("point does not match benchmark shape");
    double total = 0.0;
    std::vector<double> z;
    for (std::size_t b = 0; b < point.blocks.size(); ++b) {
        if ((int)point.blocks[b].size() != fn.shape.block_lengths[b])
            throw ShapeMismatch("point does not match benchmark shape");
        z.resize(point.blocks[b].size());
        for (std::size_t i = 0; i < z.size(); ++i)
            z[i] = point.blocks[b][i] - fn.anchor.blocks[b][i];
        total += block_value(fn.name, z);
    }
    return total;
}

} // namespace smartmc
