#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "easycache/harness.hpp"

using namespace easycache;

namespace {

// Flags shared by `run` and `trace`. Unset flags leave the config file (or
// the defaults) alone.
struct RunFlags {
    std::string config;
    std::optional<std::string> preset;
    std::optional<std::string> field_json;
    std::optional<std::size_t> dim;
    std::optional<int> steps;
    std::optional<double> delta_end;
    std::optional<std::uint64_t> seed;
    std::optional<double> tau;
    std::optional<int> warmup;
    std::optional<std::string> k_update;
    std::optional<std::string> variant;
    std::optional<double> interval;
    std::optional<double> probability;
    std::optional<double> fraction;
    std::optional<int> recompute_warmup;
    std::string out_dir = "out";

    void attach(CLI::App* app) {
        app->add_option("--config", config, "RunConfig JSON file");
        app->add_option("--preset", preset, "built-in anchor set");
        app->add_option("--field-json", field_json, "anchor set JSON file");
        app->add_option("--dim", dim, "expected sample dimension (0 = from field)");
        app->add_option("--T", steps, "number of steps");
        app->add_option("--delta-end", delta_end, "terminal time clamp");
        app->add_option("--seed", seed, "initial-noise seed");
        app->add_option("--tau", tau, "threshold in percent");
        app->add_option("--R", warmup, "warm-up steps");
        app->add_option("--k-update", k_update, "local | local-full | ema | avg");
        app->add_option("--variant", variant,
                        "easycache | static | probabilistic | output-relative | no-recompute | step-reduction");
        app->add_option("--interval", interval, "static: compute every n steps");
        app->add_option("--probability", probability, "probabilistic: reuse probability");
        app->add_option("--fraction", fraction, "step-reduction: fraction of T");
        app->add_option("--recompute-warmup", recompute_warmup, "no-recompute: full steps before reuse");
        app->add_option("--out-dir", out_dir, "output directory");
    }

    RunConfig build() const {
        RunConfig c = config.empty() ? RunConfig{} : load_run_config(config);
        if (preset && field_json) throw ConfigError("give either --preset or --field-json, not both");
        if (preset) c.field = FieldSpec::preset(*preset);
        if (field_json) c.field = FieldSpec::json_file(*field_json);
        if (dim) c.dim = *dim;
        if (steps) c.steps = *steps;
        if (delta_end) c.delta_end = *delta_end;
        if (seed) c.seed = *seed;
        if (tau) c.policy.tau = *tau;
        if (warmup) c.policy.warmup = *warmup;
        if (k_update) c.policy.k_update = k_update_from_string(*k_update);
        if (variant) c.policy.variant = variant_from_string(*variant);
        if (interval) c.policy.interval = *interval;
        if (probability) c.policy.probability = *probability;
        if (fraction) c.policy.fraction = *fraction;
        if (recompute_warmup) c.policy.recompute_warmup = *recompute_warmup;
        c.validate();
        return c;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EasyCache step-caching sampler harness"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "cached run plus matched full run; writes report JSON and trace CSV");
    run_flags.attach(run);

    RunFlags trace_flags;
    bool cached = false;
    auto* trace = app.add_subcommand("trace", "per-step CSV of x_norm, v_norm, k (full run by default)");
    trace_flags.attach(trace);
    trace->add_flag("--cached", cached, "trace the cached run instead");

    std::string spec_path;
    std::string sweep_out = "out";
    std::string format = "csv";
    int jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "grid over one axis and several seeds");
    sweep->add_option("spec", spec_path, "SweepSpec JSON file")->required();
    sweep->add_option("--out-dir", sweep_out, "output directory");
    sweep->add_option("--jobs", jobs, "concurrent cells")->check(CLI::PositiveNumber);
    sweep->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

    auto* presets = app.add_subcommand("presets", "list built-in anchor sets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    return guarded(
        [&] {
            if (*run) cmd_run(run_flags.build(), run_flags.out_dir, std::cout);
            else if (*trace) cmd_trace(trace_flags.build(), trace_flags.out_dir, cached, std::cout);
            else if (*sweep) cmd_sweep(load_sweep_spec(spec_path), sweep_out, jobs, format, std::cout);
            else if (*presets) cmd_presets(std::cout);
        },
        std::cerr);
}
