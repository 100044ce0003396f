#include "easycache/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

namespace easycache::kernels {

namespace {

// Below this many elements an elementwise loop is not worth a parallel region.
constexpr std::size_t kParallelElems = 16384;

template <class BlockFn>
double block_reduce(std::size_t n, BlockFn&& block) {
    const std::size_t nblocks = (n + kReduceBlock - 1) / kReduceBlock;
    if (nblocks <= 1) return n == 0 ? 0.0 : block(0, n);

    std::vector<double> partial(nblocks);
    const auto nb = static_cast<std::ptrdiff_t>(nblocks);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < nb; ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kReduceBlock;
        const std::size_t hi = std::min(n, lo + kReduceBlock);
        partial[static_cast<std::size_t>(b)] = block(lo, hi);
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) { omp_set_num_threads(n < 1 ? 1 : n); }

double abs_sum(std::span<const double> a) {
    return block_reduce(a.size(), [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += std::abs(a[i]);
        return s;
    });
}

double abs_diff_sum(std::span<const double> a, std::span<const double> b) {
    return block_reduce(a.size(), [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += std::abs(a[i] - b[i]);
        return s;
    });
}

double sq_diff_sum(std::span<const double> a, std::span<const double> b) {
    return block_reduce(a.size(), [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
        return s;
    });
}

void axpy(std::span<double> out, std::span<const double> x, std::span<const double> v, double h) {
    const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (out.size() >= kParallelElems)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = x[i] + h * v[i];
}

void scaled_sq_distances(std::span<const double> x, const std::vector<std::vector<double>>& anchors, double scale,
                         std::span<double> out) {
    const auto k = static_cast<std::ptrdiff_t>(anchors.size());
    const std::size_t d = x.size();
    // One anchor per iteration; each distance is a serial sum, so the
    // result does not depend on how anchors are spread over threads.
#pragma omp parallel for schedule(static) if (d * anchors.size() >= kParallelElems)
    for (std::ptrdiff_t j = 0; j < k; ++j) {
        const auto& y = anchors[static_cast<std::size_t>(j)];
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double r = x[i] - scale * y[i];
            s += r * r;
        }
        out[static_cast<std::size_t>(j)] = s;
    }
}

void weighted_combination(const std::vector<std::vector<double>>& anchors, std::span<const double> weights,
                          std::span<double> out) {
    const auto d = static_cast<std::ptrdiff_t>(out.size());
    const std::size_t k = anchors.size();
#pragma omp parallel for schedule(static) if (out.size() * k >= kParallelElems)
    for (std::ptrdiff_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += weights[j] * anchors[j][static_cast<std::size_t>(i)];
        out[i] = s;
    }
}

namespace serial {

double abs_sum(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += std::abs(v);
    return s;
}

double abs_diff_sum(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

double sq_diff_sum(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy(std::span<double> out, std::span<const double> x, std::span<const double> v, double h) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + h * v[i];
}

void scaled_sq_distances(std::span<const double> x, const std::vector<std::vector<double>>& anchors, double scale,
                         std::span<double> out) {
    for (std::size_t j = 0; j < anchors.size(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = x[i] - scale * anchors[j][i];
            s += r * r;
        }
        out[j] = s;
    }
}

void weighted_combination(const std::vector<std::vector<double>>& anchors, std::span<const double> weights,
                          std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < anchors.size(); ++j) s += weights[j] * anchors[j][i];
        out[i] = s;
    }
}

}  // namespace serial

}  // namespace easycache::kernels
