#include "easycache/policies.hpp"

#include <cmath>
#include <limits>

namespace easycache {

std::string to_string(KUpdate k) {
    switch (k) {
        case KUpdate::Local: return "local";
        case KUpdate::LocalFull: return "local-full";
        case KUpdate::Ema: return "ema";
        case KUpdate::HistoryAverage: return "avg";
    }
    return "?";
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::EasyCache: return "easycache";
        case Variant::Static: return "static";
        case Variant::Probabilistic: return "probabilistic";
        case Variant::OutputRelative: return "output-relative";
        case Variant::NoRecompute: return "no-recompute";
        case Variant::StepReduction: return "step-reduction";
    }
    return "?";
}

std::string to_string(Action a) { return a == Action::FullCompute ? "full" : "reuse"; }

std::string to_string(Reason r) {
    switch (r) {
        case Reason::WarmUp: return "warmup";
        case Reason::FinalStep: return "final";
        case Reason::ThresholdExceeded: return "threshold";
        case Reason::Stable: return "stable";
        case Reason::Scheduled: return "scheduled";
        case Reason::Degenerate: return "degenerate";
    }
    return "?";
}

KUpdate k_update_from_string(std::string_view s) {
    if (s == "local") return KUpdate::Local;
    if (s == "local-full") return KUpdate::LocalFull;
    if (s == "ema") return KUpdate::Ema;
    if (s == "avg" || s == "history-average") return KUpdate::HistoryAverage;
    throw ConfigError("unknown k_update '" + std::string(s) + "' (expected local, local-full, ema, avg)");
}

Variant variant_from_string(std::string_view s) {
    for (Variant v : {Variant::EasyCache, Variant::Static, Variant::Probabilistic, Variant::OutputRelative,
                      Variant::NoRecompute, Variant::StepReduction}) {
        if (s == to_string(v)) return v;
    }
    throw ConfigError("unknown variant '" + std::string(s) + "'");
}

void PolicyConfig::validate() const {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("policy: tau must be a finite percent >= 0");
    if (warmup < 1) throw ConfigError("policy: R must be >= 1");
    if (!(interval >= 1.0) || !std::isfinite(interval)) throw ConfigError("policy: static interval must be >= 1");
    if (!(probability >= 0.0 && probability <= 1.0)) throw ConfigError("policy: p must lie in [0, 1]");
    if (recompute_warmup < 1) throw ConfigError("policy: no-recompute warm-up must be >= 1");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("policy: step fraction must lie in (0, 1]");
}

nlohmann::json to_json(const PolicyConfig& c) {
    nlohmann::json j;
    j["variant"] = to_string(c.variant);
    switch (c.variant) {
        case Variant::EasyCache:
            j["tau"] = c.tau;
            j["R"] = c.warmup;
            j["k_update"] = to_string(c.k_update);
            break;
        case Variant::Static:
            j["interval"] = c.interval;
            j["R"] = c.warmup;
            break;
        case Variant::Probabilistic:
            j["p"] = c.probability;
            j["seed"] = c.seed;
            j["R"] = c.warmup;
            break;
        case Variant::OutputRelative:
            j["tau"] = c.tau;
            j["R"] = c.warmup;
            break;
        case Variant::NoRecompute:
            j["warmup"] = c.recompute_warmup;
            break;
        case Variant::StepReduction:
            j["fraction"] = c.fraction;
            break;
    }
    return j;
}

PolicyConfig policy_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("policy: expected a JSON object");
    PolicyConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "variant") c.variant = variant_from_string(value.get<std::string>());
            else if (key == "tau") c.tau = value.get<double>();
            else if (key == "R") c.warmup = value.get<int>();
            else if (key == "k_update") c.k_update = k_update_from_string(value.get<std::string>());
            else if (key == "interval") c.interval = value.get<double>();
            else if (key == "p") c.probability = value.get<double>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "warmup") c.recompute_warmup = value.get<int>();
            else if (key == "fraction") c.fraction = value.get<double>();
            else throw ConfigError("policy: unknown key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("policy: ") + e.what());
    }
    c.validate();
    return c;
}

double transform_rate(std::span<const double> v_a, std::span<const double> v_b, std::span<const double> x_a,
                      std::span<const double> x_b, double held) {
    require_same_length(v_a, v_b, "transform_rate");
    require_same_length(x_a, x_b, "transform_rate");
    require_same_length(v_a, x_a, "transform_rate");
    const double dx = l1_mean_diff(x_a, x_b);
    if (dx < kZeroNorm) return held;
    return l1_mean_diff(v_a, v_b) / dx;
}

std::optional<double> local_stability_indicator(double k, double dx_norm, double v_prev_norm) {
    if (v_prev_norm < kZeroNorm) return std::nullopt;
    return 100.0 * k * dx_norm / v_prev_norm;
}

namespace {

// Shared warm-up / final-step forcing. Returns a decision when forced.
std::optional<StepDecision> forced(int t, int steps, int warmup) {
    if (t < warmup) return StepDecision{Action::FullCompute, 0.0, 0.0, Reason::WarmUp};
    if (t == steps - 1) return StepDecision{Action::FullCompute, 0.0, 0.0, Reason::FinalStep};
    return std::nullopt;
}

StepDecision compute(Reason reason, double epsilon = 0.0) {
    return StepDecision{Action::FullCompute, epsilon, 0.0, reason};
}

StepDecision reuse(double epsilon, double accumulated) {
    return StepDecision{Action::Reuse, epsilon, accumulated, Reason::Stable};
}

}  // namespace

StepDecision easycache_decide(int t, int steps, const PolicyConfig& config, const CacheState& cache,
                              const StepProbe& probe) {
    if (auto d = forced(t, steps, config.warmup)) return *d;
    if (!probe.has_prev || cache.delta.empty()) return compute(Reason::Degenerate);

    const auto eps = local_stability_indicator(cache.k, probe.dx_norm, probe.v_prev_norm);
    if (!eps) return compute(Reason::Degenerate);

    const double e = accumulate(cache.accumulated, *eps);
    if (e >= config.tau) return compute(Reason::ThresholdExceeded, *eps);
    return reuse(*eps, e);
}

double update_k(const PolicyConfig& config, CacheState& cache, std::span<const double> new_x,
                std::span<const double> new_v, int t) {
    if (t == 0) return 0.0;

    const bool full_pair = config.k_update == KUpdate::LocalFull;
    const Tensor1D& ref_x = full_pair ? cache.full_x : cache.prev_x;
    const Tensor1D& ref_v = full_pair ? cache.full_v : cache.prev_v;
    if (ref_x.empty()) return cache.k;
    if (l1_mean_diff(new_x, ref_x) < kZeroNorm) return cache.k;
    const double sample = transform_rate(new_v, ref_v, new_x, ref_x, cache.k);

    switch (config.k_update) {
        case KUpdate::Local:
        case KUpdate::LocalFull:
            return sample;
        case KUpdate::Ema:
            if (t < config.warmup - 1) return sample;
            cache.k_ema = cache.k_count == 0 ? sample : (1.0 - kEmaWeight) * cache.k_ema + kEmaWeight * sample;
            ++cache.k_count;
            return cache.k_ema;
        case KUpdate::HistoryAverage:
            if (t < config.warmup - 1) return sample;
            cache.k_sum += sample;
            ++cache.k_count;
            return cache.k_sum / cache.k_count;
    }
    return sample;
}

std::vector<int> replay_skip_set(std::span<const double> epsilon, double tau, int warmup, int steps) {
    if (static_cast<int>(epsilon.size()) != steps) throw ContractError("replay_skip_set: trace length != T");
    std::vector<int> reused;
    double acc = 0.0;
    for (int t = 0; t < steps; ++t) {
        if (t < warmup || t == steps - 1) {
            acc = 0.0;
            continue;
        }
        const double e = acc + epsilon[static_cast<std::size_t>(t)];
        if (e >= tau) {
            acc = 0.0;
        } else {
            acc = e;
            reused.push_back(t);
        }
    }
    return reused;
}

namespace {

class EasyCachePolicy final : public StepPolicy {
public:
    explicit EasyCachePolicy(PolicyConfig c) : config_(c) {}
    StepDecision decide(int t, int steps, const CacheState& cache, const StepProbe& probe) override {
        return easycache_decide(t, steps, config_, cache, probe);
    }

private:
    PolicyConfig config_;
};

class StaticPolicy final : public StepPolicy {
public:
    explicit StaticPolicy(PolicyConfig c) : config_(c) {}
    StepDecision decide(int t, int steps, const CacheState&, const StepProbe&) override {
        if (auto d = forced(t, steps, config_.warmup)) return *d;
        const double n = config_.interval;
        if (std::floor(t / n) > std::floor((t - 1) / n)) return compute(Reason::Scheduled);
        return reuse(0.0, 0.0);
    }

private:
    PolicyConfig config_;
};

class ProbabilisticPolicy final : public StepPolicy {
public:
    ProbabilisticPolicy(PolicyConfig c, std::uint64_t run_seed) : config_(c), rng_(mix_seeds(c.seed, run_seed)) {}
    StepDecision decide(int t, int steps, const CacheState&, const StepProbe&) override {
        if (auto d = forced(t, steps, config_.warmup)) return *d;
        if (rng_.uniform() < config_.probability) return reuse(0.0, 0.0);
        return compute(Reason::Scheduled);
    }

private:
    PolicyConfig config_;
    Xoshiro256 rng_;
};

// Criterion from recent output history: running sum of
// 100 * ||v_{t-1} - v_{t-2}|| / ||v_{t-1}|| since the last refresh.
class OutputRelativePolicy final : public StepPolicy {
public:
    explicit OutputRelativePolicy(PolicyConfig c) : config_(c) {}
    StepDecision decide(int t, int steps, const CacheState& cache, const StepProbe& probe) override {
        if (auto d = forced(t, steps, config_.warmup)) return *d;
        if (!probe.has_prev2) return compute(Reason::Scheduled);
        if (probe.v_prev_norm < kZeroNorm) return compute(Reason::Degenerate);
        const double eps = 100.0 * probe.v_prev_change / probe.v_prev_norm;
        const double e = accumulate(cache.accumulated, eps);
        if (e >= config_.tau) return compute(Reason::ThresholdExceeded, eps);
        return reuse(eps, e);
    }

private:
    PolicyConfig config_;
};

class NoRecomputePolicy final : public StepPolicy {
public:
    explicit NoRecomputePolicy(PolicyConfig c) : config_(c) {}
    StepDecision decide(int t, int steps, const CacheState&, const StepProbe&) override {
        if (auto d = forced(t, steps, config_.recompute_warmup)) return *d;
        return reuse(0.0, 0.0);
    }

private:
    PolicyConfig config_;
};

}  // namespace

std::unique_ptr<StepPolicy> make_policy(const PolicyConfig& config, std::uint64_t run_seed) {
    config.validate();
    switch (config.variant) {
        case Variant::EasyCache: return std::make_unique<EasyCachePolicy>(config);
        case Variant::Static: return std::make_unique<StaticPolicy>(config);
        case Variant::Probabilistic: return std::make_unique<ProbabilisticPolicy>(config, run_seed);
        case Variant::OutputRelative: return std::make_unique<OutputRelativePolicy>(config);
        case Variant::NoRecompute: return std::make_unique<NoRecomputePolicy>(config);
        case Variant::StepReduction: break;
    }
    throw ConfigError("step-reduction has no per-step policy; run it through the engine");
}

int reduced_steps(double fraction, int steps) {
    const auto n = static_cast<int>(std::ceil(fraction * steps - 1e-9));
    return std::max(2, n);
}

}  // namespace easycache
