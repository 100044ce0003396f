#pragma once

// Data-parallel inner loops. The default entry points are OpenMP-parallel;
// `serial::` holds the straightforward reference loops used by the tests and
// the benchmark.
//
// Reductions split the input into fixed blocks of kReduceBlock elements,
// reduce each block left-to-right and then sum the block partials in block
// order. The partition does not depend on the thread count, so results are
// bit-identical for any OMP_NUM_THREADS. For n <= kReduceBlock the result is
// bit-identical to the serial reference.

#include <cstddef>
#include <span>
#include <vector>

namespace easycache::kernels {

inline constexpr std::size_t kReduceBlock = 4096;

double abs_sum(std::span<const double> a);
double abs_diff_sum(std::span<const double> a, std::span<const double> b);
double sq_diff_sum(std::span<const double> a, std::span<const double> b);

/// out = x + h * v. `out` may alias `x`.
void axpy(std::span<double> out, std::span<const double> x, std::span<const double> v, double h);

/// out_i = sum_j ||x - scale * anchors_j||^2 for every anchor j.
void scaled_sq_distances(std::span<const double> x, const std::vector<std::vector<double>>& anchors, double scale,
                         std::span<double> out);

/// out = sum_j weights_j * anchors_j.
void weighted_combination(const std::vector<std::vector<double>>& anchors, std::span<const double> weights,
                          std::span<double> out);

/// Number of threads the parallel kernels would use.
int max_threads();
void set_threads(int n);

namespace serial {

double abs_sum(std::span<const double> a);
double abs_diff_sum(std::span<const double> a, std::span<const double> b);
double sq_diff_sum(std::span<const double> a, std::span<const double> b);
void axpy(std::span<double> out, std::span<const double> x, std::span<const double> v, double h);
void scaled_sq_distances(std::span<const double> x, const std::vector<std::vector<double>>& anchors, double scale,
                         std::span<double> out);
void weighted_combination(const std::vector<std::vector<double>>& anchors, std::span<const double> weights,
                          std::span<double> out);

}  // namespace serial

}  // namespace easycache::kernels
