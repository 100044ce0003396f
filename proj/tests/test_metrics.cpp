#include <doctest.h>

#include <cmath>

#include "easycache/fields.hpp"
#include "easycache/metrics.hpp"
#include "easycache/rng.hpp"
#include "oracles.hpp"

using namespace easycache;

namespace {

Tensor1D noisy(const Tensor1D& a, double sigma, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    Tensor1D b = a;
    for (double& v : b) v += sigma * rng.normal();
    return b;
}

}  // namespace

TEST_CASE("psnr examples") {
    const Tensor1D grid{0, 1, 1, 0, 1, 0, 0, 1};
    CHECK(psnr(grid, grid) == 99.0);
    Tensor1D plus_one = grid;
    for (double& v : plus_one) v += 1.0;
    CHECK(std::abs(psnr(grid, plus_one)) <= 1e-12);
    CHECK(psnr(Tensor1D{0, 2}, Tensor1D{0, 1}) == doctest::Approx(9.030899869919).epsilon(1e-12));
    CHECK_THROWS_AS(psnr(Tensor1D{0, 1}, Tensor1D{0}), ContractError);
}

TEST_CASE("psnr uses the range of the reference, not the test") {
    const Tensor1D a{0, 4}, b{0, 2};
    CHECK(psnr(a, b) != psnr(b, a));
    CHECK(psnr(a, b) == doctest::Approx(10.0 * std::log10(16.0 / 2.0)));
    // Constant reference falls back to MAX = 1.
    CHECK(psnr(Tensor1D{3, 3}, Tensor1D{3, 4}) == doctest::Approx(10.0 * std::log10(2.0)));
    CHECK(psnr(Tensor1D{0, 1}, Tensor1D{0, 1 + 1e-60}) == 99.0);
}

TEST_CASE("ssim examples") {
    const AnchorSet digits = make_preset("digits-16x16");
    const GridShape g = *digits.grid;
    for (const auto& a : digits.anchors) CHECK(ssim(a, a, g) == 1.0);

    // Same mean, negated fluctuations: luminance term near 1, structure term negative.
    const Tensor1D base = noisy(Tensor1D(256, 10.0), 1.0, 7);
    Tensor1D mirrored = base;
    for (double& v : mirrored) v = 20.0 - v;
    CHECK(ssim(base, mirrored, g) <= 0.0);

    CHECK_THROWS_AS(ssim(Tensor1D(49, 0.0), Tensor1D(49, 0.0), GridShape{7, 7}), ConfigError);
    CHECK_THROWS_AS(ssim(Tensor1D(64, 0.0), Tensor1D(63, 0.0), GridShape{8, 8}), ContractError);
    CHECK_THROWS_AS(ssim(Tensor1D(64, 0.0), Tensor1D(64, 0.0), GridShape{8, 9}), ContractError);
}

TEST_CASE("ssim agrees with the direct-summation oracle") {
    const AnchorSet digits = make_preset("digits-16x16");
    const GridShape g = *digits.grid;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Tensor1D& a = digits.anchors[seed % 16];
        const Tensor1D b = noisy(a, 0.1, seed);
        CHECK(std::abs(ssim(a, b, g) - oracle::ssim(a, b, 16, 16)) <= 1e-9);
    }
    // Non-square grid and a different window.
    const Tensor1D a = noisy(Tensor1D(20 * 11, 0.0), 1.0, 1);
    const Tensor1D b = noisy(a, 0.5, 2);
    CHECK(std::abs(ssim(a, b, GridShape{20, 11}, 5) - oracle::ssim(a, b, 20, 11, 5)) <= 1e-9);
}

TEST_CASE("ssim stays within [-1, 1] on random pairs") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Tensor1D a = noisy(Tensor1D(256, 0.0), 1.0, seed);
        const Tensor1D b = noisy(Tensor1D(256, 0.0), 0.1 + seed * 0.05, seed + 500);
        const double s = ssim(a, b, GridShape{16, 16});
        CHECK(s <= 1.0);
        CHECK(s >= -1.0);
    }
}

TEST_CASE("mae triangle inequality") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const Tensor1D a = noisy(Tensor1D(33, 0.0), 1.0, seed);
        const Tensor1D b = noisy(a, 2.0, seed + 1000);
        const Tensor1D c = noisy(b, 0.5, seed + 2000);
        CHECK(mae(a, c) <= mae(a, b) + mae(b, c) + 1e-12);
    }
    CHECK(mae(Tensor1D{1, 2}, Tensor1D{1, 2}) == 0.0);
}

TEST_CASE("fidelity report") {
    const Tensor1D a{0, 1, 2, 3};
    const FidelityReport same = fidelity(a, a, std::nullopt);
    CHECK(same.psnr_db == 99.0);
    CHECK(same.mae == 0.0);
    CHECK(!same.ssim);
    CHECK(same.dynamic_range == 3.0);
    const auto j = to_json(same);
    CHECK(j["ssim"].is_null());

    const AnchorSet digits = make_preset("digits-16x16");
    const FidelityReport g = fidelity(digits.anchors[0], digits.anchors[0], digits.grid);
    REQUIRE(g.ssim);
    CHECK(*g.ssim == 1.0);
}

TEST_CASE("trace_stats") {
    SUBCASE("all full computations give zero-length reuse runs") {
        RunConfig c;
        c.field = FieldSpec::affine(0.5, {1.0});
        c.steps = 12;
        c.policy.tau = 0.0;
        const TraceStats s = trace_stats(run_cached(c));
        CHECK(s.full_count == 12);
        CHECK(s.reuse_count == 0);
        CHECK(s.reuse_runs == std::vector<int>(11, 0));
    }
    SUBCASE("constant k has zero CV") {
        CHECK(phase_stats(std::vector<double>(7, 2.5)).cv == 0.0);
        CHECK(phase_stats(std::vector<double>(7, 0.0)).cv == 0.0);
        const PhaseStats p = phase_stats(std::vector<double>{1, 3});
        CHECK(p.mean == 2.0);
        CHECK(p.cv == 0.5);
    }
    SUBCASE("phases and reuse runs") {
        TrajectoryTrace t;
        t.nominal_steps = 10;
        const Action F = Action::FullCompute, U = Action::Reuse;
        const Action pattern[10] = {F, F, U, U, F, U, F, F, U, F};
        for (int i = 0; i < 10; ++i) {
            StepRecord r;
            r.t = i;
            r.action = pattern[i];
            r.reason = pattern[i] == U ? Reason::Stable : Reason::ThresholdExceeded;
            r.epsilon = 0.75;
            r.k = i;
            t.steps.push_back(r);
        }
        const TraceStats s = trace_stats(t);
        CHECK(s.reuse_runs == std::vector<int>{0, 2, 1, 0, 1});
        CHECK(s.k_early.count == 2);  // t in [1, 2]
        CHECK(s.k_early.mean == 1.5);
        CHECK(s.k_late.count == 5);  // t in [5, 9]
        CHECK(s.k_late.mean == 7.0);
        CHECK(s.epsilon_counts[1] == 10);
    }
    SUBCASE("two-point-1d full run, late-phase CV of k") {
        RunConfig c;
        c.field = FieldSpec::preset("two-point-1d");
        const TraceStats s = trace_stats(run_full(c));
        CHECK(s.k_late.count == 25);
        // Fixed from the first full-run execution.
        CHECK(s.k_late.cv == doctest::Approx(0.204923222855).epsilon(1e-6));
    }
}
