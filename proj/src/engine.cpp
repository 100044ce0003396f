#include "easycache/engine.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "easycache/kernels.hpp"

namespace easycache {

FieldSpec FieldSpec::preset(std::string name) {
    FieldSpec f;
    f.kind = Kind::Preset;
    f.name = std::move(name);
    return f;
}

FieldSpec FieldSpec::json_file(std::string path) {
    FieldSpec f;
    f.kind = Kind::JsonFile;
    f.name = std::move(path);
    return f;
}

FieldSpec FieldSpec::affine(double gain, Tensor1D bias) {
    FieldSpec f;
    f.kind = Kind::Affine;
    f.name = "affine";
    f.gain = gain;
    f.bias = std::move(bias);
    return f;
}

std::string FieldSpec::label() const { return kind == Kind::Affine ? std::string("affine") : name; }

nlohmann::json to_json(const FieldSpec& spec) {
    switch (spec.kind) {
        case FieldSpec::Kind::Preset: return {{"preset", spec.name}};
        case FieldSpec::Kind::JsonFile: return {{"json", spec.name}};
        case FieldSpec::Kind::Affine: return {{"affine", {{"gain", spec.gain}, {"bias", spec.bias}}}};
    }
    return {};
}

FieldSpec field_from_json(const nlohmann::json& j) {
    try {
        if (j.is_string()) return FieldSpec::preset(j.get<std::string>());
        if (!j.is_object() || j.size() != 1) {
            throw ConfigError("field: expected a preset name or one of {preset, json, affine}");
        }
        if (j.contains("preset")) return FieldSpec::preset(j["preset"].get<std::string>());
        if (j.contains("json")) return FieldSpec::json_file(j["json"].get<std::string>());
        if (j.contains("affine")) {
            const auto& a = j["affine"];
            return FieldSpec::affine(a.value("gain", 1.0), a.at("bias").get<Tensor1D>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("field: ") + e.what());
    }
    throw ConfigError("field: expected one of {preset, json, affine}");
}

std::unique_ptr<VelocityOracle> make_field(const FieldSpec& spec) {
    switch (spec.kind) {
        case FieldSpec::Kind::Preset: return std::make_unique<MixtureFlowField>(make_preset(spec.name));
        case FieldSpec::Kind::JsonFile: return std::make_unique<MixtureFlowField>(load_anchor_set(spec.name));
        case FieldSpec::Kind::Affine: return std::make_unique<AffineField>(spec.gain, spec.bias);
    }
    throw ConfigError("field: unknown kind");
}

void RunConfig::validate() const {
    (void)Schedule::uniform(steps, delta_end);
    policy.validate();
}

nlohmann::json to_json(const RunConfig& c) {
    return {{"field", to_json(c.field)}, {"dim", c.dim},   {"T", c.steps},
            {"delta_end", c.delta_end},  {"seed", c.seed}, {"policy", to_json(c.policy)}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("run config: expected a JSON object");
    RunConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "field") c.field = field_from_json(value);
            else if (key == "preset") c.field = FieldSpec::preset(value.get<std::string>());
            else if (key == "field_json") c.field = FieldSpec::json_file(value.get<std::string>());
            else if (key == "dim") c.dim = value.get<std::size_t>();
            else if (key == "T") c.steps = value.get<int>();
            else if (key == "delta_end") c.delta_end = value.get<double>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "policy") c.policy = policy_from_json(value);
            else throw ConfigError("run config: unknown key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return run_config_from_json(j);
}

std::size_t resolve_dim(const RunConfig& config, const VelocityOracle& field) {
    if (config.dim != 0 && config.dim != field.dim()) {
        throw ConfigError("dim " + std::to_string(config.dim) + " does not match the field dim " +
                          std::to_string(field.dim()));
    }
    return field.dim();
}

namespace {

Tensor1D subtract(std::span<const double> a, std::span<const double> b) {
    Tensor1D out(a.size());
    kernels::axpy(out, a, b, -1.0);
    return out;
}

Tensor1D add(std::span<const double> a, std::span<const double> b) {
    Tensor1D out(a.size());
    kernels::axpy(out, a, b, 1.0);
    return out;
}

void check_finite(std::span<const double> a, const char* what, int t) {
    for (double v : a) {
        if (!std::isfinite(v)) throw NumericError(std::string(what) + " became non-finite at step " + std::to_string(t));
    }
}

Tensor1D starting_point(const RunConfig& config, const VelocityOracle& field, const RunOptions& options) {
    const std::size_t dim = resolve_dim(config, field);
    if (!options.x0) return sample_initial(dim, config.seed);
    if (options.x0->size() != dim) throw ConfigError("x0 length does not match the field dim");
    return *options.x0;
}

TrajectoryTrace full_loop(const RunConfig& config, const VelocityOracle& field, const Schedule& schedule,
                          RunOptions options) {
    const std::uint64_t evals_before = field.eval_count();
    TrajectoryTrace trace;
    trace.nominal_steps = config.steps;

    LatentState state = initial_state(starting_point(config, field, options), schedule);
    Tensor1D prev_x, prev_v;
    double k = 0.0;
    for (int t = 0; t < schedule.steps(); ++t) {
        Tensor1D v = field.evaluate(state.x, state.time);
        check_finite(v, "velocity", t);
        if (t > 0) k = transform_rate(v, prev_v, state.x, prev_x, k);

        StepRecord r;
        r.t = t;
        r.s = state.time;
        r.reason = Reason::Scheduled;
        r.x_norm = l1_mean(state.x);
        r.v_norm = l1_mean(v);
        r.k = k;
        r.k_ref = k;
        trace.steps.push_back(r);
        if (options.keep_states) {
            trace.xs.push_back(state.x);
            trace.vs.push_back(v);
            trace.deltas.push_back(subtract(v, state.x));
        }

        prev_x = state.x;
        prev_v = std::move(v);
        state = euler_step(state, prev_v, schedule);
        check_finite(state.x, "state", t);
    }
    trace.final_x = std::move(state.x);
    trace.eval_count = field.eval_count() - evals_before;
    return trace;
}

}  // namespace

TrajectoryTrace run_full(const RunConfig& config, const VelocityOracle& field, RunOptions options) {
    return full_loop(config, field, Schedule::uniform(config.steps, config.delta_end), options);
}

TrajectoryTrace run_full(const RunConfig& config, RunOptions options) {
    const auto field = make_field(config.field);
    return run_full(config, *field, options);
}

TrajectoryTrace run_cached(const RunConfig& config, const VelocityOracle& field, RunOptions options) {
    config.validate();
    const int steps = config.steps;
    if (config.policy.variant == Variant::StepReduction) {
        const Schedule shorter = Schedule::uniform(reduced_steps(config.policy.fraction, steps), config.delta_end);
        return full_loop(config, field, shorter, options);
    }

    const Schedule schedule = Schedule::uniform(steps, config.delta_end);
    const std::uint64_t evals_before = field.eval_count();
    auto policy = make_policy(config.policy, config.seed);

    TrajectoryTrace trace;
    trace.nominal_steps = steps;
    trace.steps.reserve(static_cast<std::size_t>(steps));

    LatentState state = initial_state(starting_point(config, field, options), schedule);
    CacheState cache;
    Tensor1D prev2_v;
    double k_measured = 0.0;

    for (int t = 0; t < steps; ++t) {
        const Tensor1D& x = state.x;

        StepProbe probe;
        probe.has_prev = t >= 1;
        probe.has_prev2 = t >= 2;
        if (probe.has_prev) {
            probe.dx_norm = l1_mean_diff(x, cache.prev_x);
            probe.v_prev_norm = l1_mean(cache.prev_v);
        }
        if (probe.has_prev2) probe.v_prev_change = l1_mean_diff(cache.prev_v, prev2_v);

        const StepDecision d = policy->decide(t, steps, cache, probe);

        StepRecord r;
        r.t = t;
        r.s = state.time;
        r.action = d.action;
        r.reason = d.reason;
        r.epsilon = d.epsilon;

        Tensor1D v;
        if (d.action == Action::FullCompute) {
            v = field.evaluate(x, state.time);
            check_finite(v, "velocity", t);
            const bool full_pair = config.policy.k_update == KUpdate::LocalFull;
            r.k_from_approx = t >= 1 && !full_pair && cache.prev_v_approximated;
            cache.k = update_k(config.policy, cache, x, v, t);
            cache.delta = subtract(v, x);
            cache.ref_step = t;
            cache.accumulated = 0.0;
            cache.full_x = x;
            cache.full_v = v;
        } else {
            if (cache.delta.empty() || cache.ref_step >= t) throw ContractError("engine: reuse without a cached delta");
            v = add(x, cache.delta);
            cache.accumulated = d.accumulated;
            r.approximated = true;
        }
        if (t > 0) k_measured = transform_rate(v, cache.prev_v, x, cache.prev_x, k_measured);

        r.x_norm = l1_mean(x);
        r.v_norm = l1_mean(v);
        r.k = k_measured;
        r.k_ref = cache.k;
        r.accumulated = cache.accumulated;
        trace.steps.push_back(r);
        if (options.keep_states) {
            trace.xs.push_back(x);
            trace.vs.push_back(v);
            trace.deltas.push_back(cache.delta);
        }

        prev2_v = std::move(cache.prev_v);
        cache.prev_x = x;
        cache.prev_v = v;
        cache.prev_v_approximated = r.approximated;
        state = euler_step(state, v, schedule);
        check_finite(state.x, "state", t);
    }
    trace.final_x = std::move(state.x);
    trace.eval_count = field.eval_count() - evals_before;
    return trace;
}

TrajectoryTrace run_cached(const RunConfig& config, RunOptions options) {
    const auto field = make_field(config.field);
    return run_cached(config, *field, options);
}

double step_speedup(const TrajectoryTrace& trace) {
    if (trace.eval_count == 0) throw ContractError("step_speedup: trace has no oracle evaluations");
    return static_cast<double>(trace.nominal_steps) / static_cast<double>(trace.eval_count);
}

void write_trace_csv(const TrajectoryTrace& trace, std::ostream& out) {
    out << "t,s,decision,reason,x_norm,v_norm,k,epsilon,E,approx\n";
    for (const auto& r : trace.steps) {
        out << r.t << ',' << format_number(r.s) << ',' << to_string(r.action) << ',' << to_string(r.reason) << ','
            << format_number(r.x_norm) << ',' << format_number(r.v_norm) << ',' << format_number(r.k) << ','
            << format_number(r.epsilon) << ',' << format_number(r.accumulated) << ',' << (r.approximated ? 1 : 0)
            << '\n';
    }
}

void write_trace_csv(const TrajectoryTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write trace '" + path + "'");
    write_trace_csv(trace, out);
}

}  // namespace easycache
