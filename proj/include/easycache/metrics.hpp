#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "easycache/core.hpp"
#include "easycache/engine.hpp"

namespace easycache {

inline constexpr double kPsnrCap = 99.0;
inline constexpr std::size_t kSsimWindow = 8;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// max(ref) - min(ref), or 1.0 when ref is constant.
double dynamic_range(std::span<const double> ref);

/// 10 log10(MAX^2 / MSE) with MAX = dynamic_range(ref), capped at 99 dB.
double psnr(std::span<const double> ref, std::span<const double> test);

/// Mean local SSIM over every window x window patch (stride 1), uniform
/// weights, population moments, L = dynamic_range(ref).
double ssim(std::span<const double> ref, std::span<const double> test, GridShape grid,
            std::size_t window = kSsimWindow);

double mae(std::span<const double> a, std::span<const double> b);

struct FidelityReport {
    double psnr_db = kPsnrCap;
    std::optional<double> ssim;  // absent for fields without a grid
    double mae = 0.0;
    double dynamic_range = 1.0;
};

FidelityReport fidelity(std::span<const double> ref, std::span<const double> test, std::optional<GridShape> grid);
nlohmann::json to_json(const FidelityReport& report);

struct PhaseStats {
    int count = 0;
    double mean = 0.0;
    double cv = 0.0;  // population std / |mean|; 0 for a constant series
};

struct TraceStats {
    PhaseStats k_early;  // measured k over t in [1, floor(0.2 T)]
    PhaseStats k_late;   // measured k over the last floor(T / 2) steps
    std::vector<double> epsilon_edges;  // histogram bin lower edges, last bin open
    std::vector<int> epsilon_counts;
    std::vector<int> reuse_runs;  // reuses between consecutive full computations
    int full_count = 0;
    int reuse_count = 0;
    int k_from_approx_count = 0;
};

PhaseStats phase_stats(std::span<const double> values);
TraceStats trace_stats(const TrajectoryTrace& trace);
nlohmann::json to_json(const TraceStats& stats);

}  // namespace easycache
