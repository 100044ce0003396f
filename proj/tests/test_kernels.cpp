#include <doctest.h>

#include <vector>

#include "easycache/kernels.hpp"
#include "easycache/rng.hpp"

using namespace easycache;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    std::vector<double> v(n);
    for (double& e : v) e = rng.normal();
    return v;
}

}  // namespace

TEST_CASE("reductions match the serial reference") {
    for (std::size_t n : {1u, 7u, 4096u, 4097u, 100000u}) {
        const auto a = random_vector(n, n);
        const auto b = random_vector(n, n + 1);
        if (n <= kernels::kReduceBlock) {
            CHECK(kernels::abs_sum(a) == kernels::serial::abs_sum(a));
            CHECK(kernels::abs_diff_sum(a, b) == kernels::serial::abs_diff_sum(a, b));
            CHECK(kernels::sq_diff_sum(a, b) == kernels::serial::sq_diff_sum(a, b));
        } else {
            CHECK(kernels::abs_sum(a) == doctest::Approx(kernels::serial::abs_sum(a)).epsilon(1e-12));
            CHECK(kernels::abs_diff_sum(a, b) == doctest::Approx(kernels::serial::abs_diff_sum(a, b)).epsilon(1e-12));
            CHECK(kernels::sq_diff_sum(a, b) == doctest::Approx(kernels::serial::sq_diff_sum(a, b)).epsilon(1e-12));
        }
    }
}

TEST_CASE("reductions are bit-identical across thread counts") {
    const auto a = random_vector(200000, 1);
    const auto b = random_vector(200000, 2);
    const int before = kernels::max_threads();
    kernels::set_threads(1);
    const double s1 = kernels::abs_diff_sum(a, b), q1 = kernels::sq_diff_sum(a, b);
    kernels::set_threads(3);
    const double s3 = kernels::abs_diff_sum(a, b), q3 = kernels::sq_diff_sum(a, b);
    kernels::set_threads(8);
    const double s8 = kernels::abs_diff_sum(a, b), q8 = kernels::sq_diff_sum(a, b);
    kernels::set_threads(before);
    CHECK(s1 == s3);
    CHECK(s1 == s8);
    CHECK(q1 == q3);
    CHECK(q1 == q8);
}

TEST_CASE("elementwise kernels equal the serial reference exactly") {
    const auto x = random_vector(50000, 3);
    const auto v = random_vector(50000, 4);
    std::vector<double> par(x.size()), ser(x.size());
    kernels::axpy(par, x, v, 0.0196);
    kernels::serial::axpy(ser, x, v, 0.0196);
    CHECK(par == ser);

    std::vector<double> inplace = x;
    kernels::axpy(inplace, inplace, v, 0.0196);
    CHECK(inplace == ser);

    std::vector<std::vector<double>> anchors;
    for (int k = 0; k < 5; ++k) anchors.push_back(random_vector(50000, 10 + k));
    std::vector<double> dp(5), ds(5);
    kernels::scaled_sq_distances(x, anchors, 0.7, dp);
    kernels::serial::scaled_sq_distances(x, anchors, 0.7, ds);
    for (std::size_t k = 0; k < 5; ++k) CHECK(dp[k] == doctest::Approx(ds[k]).epsilon(1e-12));

    const std::vector<double> w{0.1, 0.2, 0.3, 0.15, 0.25};
    std::vector<double> cp(x.size()), cs(x.size());
    kernels::weighted_combination(anchors, w, cp);
    kernels::serial::weighted_combination(anchors, w, cs);
    CHECK(cp == cs);
}
