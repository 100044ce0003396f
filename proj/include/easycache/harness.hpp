#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "easycache/engine.hpp"
#include "easycache/metrics.hpp"

namespace easycache {

// Exit-code contract of every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

struct RunReport {
    std::string id;
    RunConfig config;
    double speedup = 1.0;
    std::uint64_t eval_count = 0;
    FidelityReport fidelity;  // against run_full under the same config
    TraceStats stats;
    TrajectoryTrace trace;
    std::string trace_path;
    double wall_clock_ms = 0.0;
};

/// "<field>_<variant>_seed<seed>".
std::string run_id(const RunConfig& config);

/// run_cached plus a fresh run_full of the same config; no files written.
RunReport execute_run(const RunConfig& config);

/// Report JSON. Floating-point values are rounded to 12 significant digits.
nlohmann::json to_json(const RunReport& report, bool include_wall_clock = true);

/// Writes <out_dir>/<id>.json and <out_dir>/<id>_trace.csv; returns the report.
RunReport cmd_run(const RunConfig& config, const std::string& out_dir, std::ostream& out);

/// One line: id, eval_count, speedup, psnr, ssim, mae.
std::string summary_line(const RunReport& report);

enum class SweepAxis { Tau, R, Variant, KUpdate };

std::string to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& s);

struct SweepSpec {
    RunConfig base;
    SweepAxis axis = SweepAxis::Tau;
    std::vector<nlohmann::json> values;  // numbers for tau / R, strings for variant / k_update
    std::vector<std::uint64_t> seeds{0};
    /// Variant axis only: tune each baseline's knob so its mean speedup is
    /// within kMatchTolerance of the EasyCache mean speedup.
    bool match_speedup = false;
};

inline constexpr double kMatchTolerance = 0.05;

SweepSpec sweep_spec_from_json(const nlohmann::json& j);
SweepSpec load_sweep_spec(const std::string& path);

/// Config of axis value `value` applied to `base`.
RunConfig apply_axis(const RunConfig& base, SweepAxis axis, const nlohmann::json& value);

struct SweepCell {
    int index = 0;
    std::string value;  // axis value as text
    std::uint64_t seed = 0;
    RunConfig config;
    bool ok = false;
    std::string error;
    double speedup = 0.0;
    std::uint64_t eval_count = 0;
    FidelityReport fidelity;
};

struct SweepMean {
    std::string value;
    RunConfig config;  // knob values used (seed of the first cell)
    int ok_cells = 0;
    double speedup = 0.0;
    double psnr_db = 0.0;
    std::optional<double> ssim;
    double mae = 0.0;
    bool matched = true;  // within kMatchTolerance when matching was requested
};

struct SweepResult {
    SweepSpec spec;
    std::vector<SweepCell> cells;  // value-major, seed-minor
    std::vector<SweepMean> means;  // one per axis value
};

/// Runs every (value, seed) cell with up to `jobs` concurrent cells. A
/// failing cell is recorded and the sweep continues.
SweepResult run_sweep(const SweepSpec& spec, int jobs = 1);

/// Mean speedup / fidelity of `config` over `seeds`; cells run concurrently.
SweepMean evaluate_mean(const RunConfig& config, const std::vector<std::uint64_t>& seeds, int jobs = 1);

/// Adjusts the knob of `config.policy.variant` by bisection so the mean
/// speedup over `seeds` is as close as possible to `target`. Returns the
/// tuned config and its mean; `matched` reports whether it landed within
/// kMatchTolerance.
SweepMean match_speedup(const RunConfig& config, const std::vector<std::uint64_t>& seeds, double target,
                        int jobs = 1);

void write_sweep_csv(const SweepResult& result, std::ostream& out);
nlohmann::json to_json(const SweepResult& result);

/// Runs the sweep and writes <out_dir>/sweep.csv or sweep.json; echoes the table to `out`.
SweepResult cmd_sweep(const SweepSpec& spec, const std::string& out_dir, int jobs, const std::string& format,
                      std::ostream& out);

/// Writes <out_dir>/<id>_trace.csv of the full run, or of the cached run when `cached`.
TrajectoryTrace cmd_trace(const RunConfig& config, const std::string& out_dir, bool cached, std::ostream& out);

void cmd_presets(std::ostream& out);

/// Runs `body`, mapping ConfigError (and DomainError) to 2, NumericError to 3
/// and anything else to 1. The message goes to `err`.
int guarded(const std::function<void()>& body, std::ostream& err);

/// Rounds every floating-point number in `j` to 12 significant digits.
nlohmann::json round_numbers(const nlohmann::json& j);

}  // namespace easycache
