#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "easycache/core.hpp"
#include "easycache/rng.hpp"

namespace easycache {

enum class KUpdate {
    Local,           // consecutive-step pair at the refresh step
    LocalFull,       // the two most recent fully computed steps
    Ema,             // k <- 0.9 k + 0.1 k_new
    HistoryAverage,  // mean of all samples since the end of warm-up
};

enum class Variant { EasyCache, Static, Probabilistic, OutputRelative, NoRecompute, StepReduction };

enum class Action { FullCompute, Reuse };

enum class Reason {
    WarmUp,
    FinalStep,
    ThresholdExceeded,
    Stable,
    Scheduled,   // baseline rule asked for a compute
    Degenerate,  // ||v_{t-1}|| vanished; forced compute
};

std::string to_string(KUpdate k);
std::string to_string(Variant v);
std::string to_string(Action a);
std::string to_string(Reason r);
KUpdate k_update_from_string(std::string_view s);
Variant variant_from_string(std::string_view s);

inline constexpr double kEmaWeight = 0.1;
inline constexpr double kZeroNorm = 1e-12;

struct PolicyConfig {
    Variant variant = Variant::EasyCache;
    double tau = 5.0;  // percent; EasyCache and OutputRelative
    int warmup = 10;   // R
    KUpdate k_update = KUpdate::Local;
    double interval = 2.0;      // Static
    double probability = 0.5;   // Probabilistic: chance of reusing an eligible step
    std::uint64_t seed = 0;     // Probabilistic, mixed with the run seed
    int recompute_warmup = 20;  // NoRecompute
    double fraction = 0.5;      // StepReduction

    /// Throws ConfigError on out-of-range knobs.
    void validate() const;
};

nlohmann::json to_json(const PolicyConfig& config);
PolicyConfig policy_from_json(const nlohmann::json& j);

/// Controller memory. Owned and refreshed by the engine; policies read it.
struct CacheState {
    Tensor1D delta;     // Delta_i = v_i - x_i
    int ref_step = -1;  // i
    double k = 0.0;     // k_i
    double accumulated = 0.0;  // E

    Tensor1D prev_x;  // x_{t-1}
    Tensor1D prev_v;  // v_{t-1}, approximated on reuse steps
    bool prev_v_approximated = false;

    Tensor1D full_x;  // most recent fully computed pair
    Tensor1D full_v;

    // Update history for Ema / HistoryAverage.
    double k_ema = 0.0;
    double k_sum = 0.0;
    int k_count = 0;
};

/// Runtime observations available before deciding step t.
struct StepProbe {
    bool has_prev = false;       // t >= 1
    bool has_prev2 = false;      // t >= 2
    double dx_norm = 0.0;        // l1_mean(x_t - x_{t-1})
    double v_prev_norm = 0.0;    // l1_mean(v_{t-1})
    double v_prev_change = 0.0;  // l1_mean(v_{t-1} - v_{t-2})
};

struct StepDecision {
    Action action = Action::FullCompute;
    double epsilon = 0.0;      // indicator for this step, percent
    double accumulated = 0.0;  // E after this step
    Reason reason = Reason::WarmUp;
};

/// k = l1_mean(v_a - v_b) / l1_mean(x_a - x_b). Returns `held` when the
/// input difference is below kZeroNorm.
double transform_rate(std::span<const double> v_a, std::span<const double> v_b, std::span<const double> x_a,
                      std::span<const double> x_b, double held = 0.0);

/// 100 * k * dx_norm / v_prev_norm. nullopt when v_prev_norm < kZeroNorm,
/// which the controller turns into a forced full computation.
std::optional<double> local_stability_indicator(double k, double dx_norm, double v_prev_norm);

inline double accumulate(double accumulated, double epsilon) { return accumulated + epsilon; }

StepDecision easycache_decide(int t, int steps, const PolicyConfig& config, const CacheState& cache,
                              const StepProbe& probe);

/// New k_i after a full computation at step t with (x_t, v_t). Updates the
/// Ema / HistoryAverage history kept in `cache`; the caller assigns the
/// result to cache.k. Reads cache.prev_x / prev_v (or full_x / full_v for
/// LocalFull), which must still describe the steps before t.
double update_k(const PolicyConfig& config, CacheState& cache, std::span<const double> new_x,
                std::span<const double> new_v, int t);

/// Steps the accumulate-and-reset rule would reuse on a frozen indicator
/// trace. epsilon[t] for t < warmup is ignored.
std::vector<int> replay_skip_set(std::span<const double> epsilon, double tau, int warmup, int steps);

class StepPolicy {
public:
    virtual ~StepPolicy() = default;
    virtual StepDecision decide(int t, int steps, const CacheState& cache, const StepProbe& probe) = 0;
};

/// Policy for every variant except StepReduction, which the engine runs as a
/// shorter full-computation schedule.
std::unique_ptr<StepPolicy> make_policy(const PolicyConfig& config, std::uint64_t run_seed);

/// Number of steps a StepReduction run integrates over: ceil(fraction * T), at least 2.
int reduced_steps(double fraction, int steps);

}  // namespace easycache
