#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "easycache/core.hpp"
#include "easycache/fields.hpp"
#include "easycache/policies.hpp"

namespace easycache {

/// Where the velocity oracle comes from.
struct FieldSpec {
    enum class Kind { Preset, JsonFile, Affine };
    Kind kind = Kind::Preset;
    std::string name = "two-point-1d";  // preset name or JSON path
    double gain = 1.0;                  // Affine
    Tensor1D bias;                      // Affine; its length is the dim

    static FieldSpec preset(std::string name);
    static FieldSpec json_file(std::string path);
    static FieldSpec affine(double gain, Tensor1D bias);

    /// Short label for reports: the preset name, the file path, or "affine".
    std::string label() const;
};

nlohmann::json to_json(const FieldSpec& spec);
FieldSpec field_from_json(const nlohmann::json& j);
std::unique_ptr<VelocityOracle> make_field(const FieldSpec& spec);

struct RunConfig {
    FieldSpec field;
    std::size_t dim = 0;  // 0 = take it from the field; otherwise must match
    int steps = 50;       // T
    double delta_end = 0.02;
    std::uint64_t seed = 0;
    PolicyConfig policy;

    /// Throws ConfigError on invalid schedule or policy knobs.
    void validate() const;
};

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

struct StepRecord {
    int t = 0;
    double s = 0.0;
    Action action = Action::FullCompute;
    Reason reason = Reason::Scheduled;
    double x_norm = 0.0;
    double v_norm = 0.0;
    double k = 0.0;      // rate measured from (x_t, v_t) and (x_{t-1}, v_{t-1}); 0 at t = 0
    double k_ref = 0.0;  // controller k_i in force after this step
    double epsilon = 0.0;
    double accumulated = 0.0;  // E after this step
    bool approximated = false;
    bool k_from_approx = false;  // full step whose k sample used an approximated v_{t-1}
};

struct TrajectoryTrace {
    int nominal_steps = 0;  // T of the configured schedule
    std::vector<StepRecord> steps;
    Tensor1D final_x;
    std::uint64_t eval_count = 0;

    // Per-step x_t and v_t, filled only when RunOptions::keep_states is set.
    std::vector<Tensor1D> xs;
    std::vector<Tensor1D> vs;
    std::vector<Tensor1D> deltas;  // Delta_i in force at each step (empty before the first refresh)
};

struct RunOptions {
    bool keep_states = false;
    std::optional<Tensor1D> x0;  // replaces sample_initial(dim, seed)
};

std::size_t resolve_dim(const RunConfig& config, const VelocityOracle& field);

/// Evaluates the oracle at every step of the configured schedule.
TrajectoryTrace run_full(const RunConfig& config, const VelocityOracle& field, RunOptions options = {});
TrajectoryTrace run_full(const RunConfig& config, RunOptions options = {});

/// Runs config.policy. Reuse steps use v_t = x_t + Delta_i with no oracle
/// call; StepReduction integrates a shorter uniform schedule with full
/// computation. Throws NumericError if the state stops being finite.
TrajectoryTrace run_cached(const RunConfig& config, const VelocityOracle& field, RunOptions options = {});
TrajectoryTrace run_cached(const RunConfig& config, RunOptions options = {});

/// nominal T / oracle evaluations.
double step_speedup(const TrajectoryTrace& trace);

void write_trace_csv(const TrajectoryTrace& trace, std::ostream& out);
void write_trace_csv(const TrajectoryTrace& trace, const std::string& path);

}  // namespace easycache
