#include "easycache/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "easycache/kernels.hpp"

namespace easycache {

double dynamic_range(std::span<const double> ref) {
    if (ref.empty()) throw ContractError("dynamic_range: empty tensor");
    const auto [lo, hi] = std::minmax_element(ref.begin(), ref.end());
    const double range = *hi - *lo;
    return range > 0.0 ? range : 1.0;
}

double psnr(std::span<const double> ref, std::span<const double> test) {
    require_same_length(ref, test, "psnr");
    if (ref.empty()) throw ContractError("psnr: empty tensor");
    const double mse = kernels::sq_diff_sum(ref, test) / static_cast<double>(ref.size());
    if (mse == 0.0) return kPsnrCap;
    const double max = dynamic_range(ref);
    return std::min(kPsnrCap, 10.0 * std::log10(max * max / mse));
}

double ssim(std::span<const double> ref, std::span<const double> test, GridShape grid, std::size_t window) {
    require_same_length(ref, test, "ssim");
    if (ref.size() != grid.size()) throw ContractError("ssim: tensor length != width * height");
    if (window < 1 || grid.width < window || grid.height < window) {
        throw ConfigError("ssim: grid " + std::to_string(grid.width) + "x" + std::to_string(grid.height) +
                          " is smaller than the " + std::to_string(window) + "x" + std::to_string(window) +
                          " window");
    }
    const double range = dynamic_range(ref);
    const double c1 = (kSsimK1 * range) * (kSsimK1 * range);
    const double c2 = (kSsimK2 * range) * (kSsimK2 * range);
    const std::size_t rows = grid.height - window + 1;
    const std::size_t cols = grid.width - window + 1;
    const double n = static_cast<double>(window * window);

    // One partial per window row, summed in order afterwards.
    std::vector<double> row_sums(rows, 0.0);
#pragma omp parallel for schedule(static) if (rows * cols > 1024)
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            double sa = 0.0, sb = 0.0;
            for (std::size_t i = 0; i < window; ++i) {
                const std::size_t base = (r + i) * grid.width + c;
                for (std::size_t j = 0; j < window; ++j) {
                    sa += ref[base + j];
                    sb += test[base + j];
                }
            }
            const double ma = sa / n, mb = sb / n;
            double vaa = 0.0, vbb = 0.0, vab = 0.0;
            for (std::size_t i = 0; i < window; ++i) {
                const std::size_t base = (r + i) * grid.width + c;
                for (std::size_t j = 0; j < window; ++j) {
                    const double da = ref[base + j] - ma, db = test[base + j] - mb;
                    vaa += da * da;
                    vbb += db * db;
                    vab += da * db;
                }
            }
            vaa /= n;
            vbb /= n;
            vab /= n;
            acc += ((2.0 * ma * mb + c1) * (2.0 * vab + c2)) / ((ma * ma + mb * mb + c1) * (vaa + vbb + c2));
        }
        row_sums[r] = acc;
    }
    double total = 0.0;
    for (double s : row_sums) total += s;
    return total / static_cast<double>(rows * cols);
}

double mae(std::span<const double> a, std::span<const double> b) { return l1_mean_diff(a, b); }

FidelityReport fidelity(std::span<const double> ref, std::span<const double> test, std::optional<GridShape> grid) {
    FidelityReport r;
    r.psnr_db = psnr(ref, test);
    r.mae = mae(ref, test);
    r.dynamic_range = dynamic_range(ref);
    if (grid) r.ssim = ssim(ref, test, *grid);
    return r;
}

nlohmann::json to_json(const FidelityReport& r) {
    return {{"psnr_db", r.psnr_db},
            {"ssim", r.ssim ? nlohmann::json(*r.ssim) : nlohmann::json(nullptr)},
            {"mae", r.mae},
            {"dynamic_range", r.dynamic_range}};
}

PhaseStats phase_stats(std::span<const double> values) {
    PhaseStats p;
    p.count = static_cast<int>(values.size());
    if (values.empty()) return p;
    double sum = 0.0;
    for (double v : values) sum += v;
    p.mean = sum / p.count;
    double var = 0.0;
    for (double v : values) var += (v - p.mean) * (v - p.mean);
    const double sd = std::sqrt(var / p.count);
    if (sd == 0.0) p.cv = 0.0;
    else p.cv = p.mean != 0.0 ? sd / std::abs(p.mean) : INFINITY;
    return p;
}

TraceStats trace_stats(const TrajectoryTrace& trace) {
    TraceStats st;
    const int steps = static_cast<int>(trace.steps.size());

    std::vector<double> early, late;
    const int early_end = steps / 5;
    const int late_begin = steps - steps / 2;
    for (const auto& r : trace.steps) {
        if (r.t >= 1 && r.t <= early_end) early.push_back(r.k);
        if (r.t >= late_begin) late.push_back(r.k);
    }
    st.k_early = phase_stats(early);
    st.k_late = phase_stats(late);

    st.epsilon_edges = {0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0};
    st.epsilon_counts.assign(st.epsilon_edges.size(), 0);
    int run = 0;
    bool seen_full = false;
    for (const auto& r : trace.steps) {
        if (r.reason == Reason::Stable || r.reason == Reason::ThresholdExceeded) {
            const auto bin = std::upper_bound(st.epsilon_edges.begin(), st.epsilon_edges.end(), r.epsilon) -
                             st.epsilon_edges.begin() - 1;
            ++st.epsilon_counts[static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, bin))];
        }
        if (r.action == Action::FullCompute) {
            ++st.full_count;
            if (seen_full) st.reuse_runs.push_back(run);
            seen_full = true;
            run = 0;
        } else {
            ++st.reuse_count;
            ++run;
        }
        if (r.k_from_approx) ++st.k_from_approx_count;
    }
    return st;
}

nlohmann::json to_json(const TraceStats& s) {
    auto phase = [](const PhaseStats& p) {
        return nlohmann::json{{"count", p.count}, {"mean", p.mean}, {"cv", std::isfinite(p.cv) ? nlohmann::json(p.cv) : nlohmann::json(nullptr)}};
    };
    return {{"k_early", phase(s.k_early)},
            {"k_late", phase(s.k_late)},
            {"epsilon_edges", s.epsilon_edges},
            {"epsilon_counts", s.epsilon_counts},
            {"reuse_runs", s.reuse_runs},
            {"full_count", s.full_count},
            {"reuse_count", s.reuse_count},
            {"k_from_approx_count", s.k_from_approx_count}};
}

}  // namespace easycache
