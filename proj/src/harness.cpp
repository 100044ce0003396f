#include "easycache/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace easycache {

namespace fs = std::filesystem;

namespace {

std::string value_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return format_number(v.get<double>());
    return v.dump();
}

fs::path prepare_dir(const std::string& out_dir) {
    fs::path dir(out_dir.empty() ? "." : out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
}

// The knob a baseline is tuned on when matching speedups.
struct Knob {
    double lo = 0.0;
    double hi = 1.0;
    bool integer = false;
    bool increasing = true;  // speedup grows with the knob
};

Knob knob_for(const RunConfig& c) {
    const double steps = c.steps;
    switch (c.policy.variant) {
        case Variant::EasyCache: return {0.0, 200.0, false, true};
        case Variant::OutputRelative: return {0.0, 200.0, false, true};
        case Variant::Static: return {1.0, steps, false, true};
        case Variant::Probabilistic: return {0.0, 1.0, false, true};
        case Variant::NoRecompute: return {1.0, steps - 1.0, true, false};
        case Variant::StepReduction: return {2.0 / steps, 1.0, false, false};
    }
    return {};
}

double knob_value(const RunConfig& c) {
    switch (c.policy.variant) {
        case Variant::EasyCache:
        case Variant::OutputRelative: return c.policy.tau;
        case Variant::Static: return c.policy.interval;
        case Variant::Probabilistic: return c.policy.probability;
        case Variant::NoRecompute: return c.policy.recompute_warmup;
        case Variant::StepReduction: return c.policy.fraction;
    }
    return 0.0;
}

RunConfig with_knob(RunConfig c, double value) {
    switch (c.policy.variant) {
        case Variant::EasyCache:
        case Variant::OutputRelative: c.policy.tau = value; break;
        case Variant::Static: c.policy.interval = value; break;
        case Variant::Probabilistic: c.policy.probability = value; break;
        case Variant::NoRecompute: c.policy.recompute_warmup = static_cast<int>(std::lround(value)); break;
        case Variant::StepReduction: c.policy.fraction = value; break;
    }
    return c;
}

struct CellResult {
    bool ok = false;
    std::string error;
    double speedup = 0.0;
    std::uint64_t eval_count = 0;
    FidelityReport fidelity;
};

CellResult run_cell(const RunConfig& config) {
    CellResult r;
    try {
        const RunReport rep = execute_run(config);
        r.ok = true;
        r.speedup = rep.speedup;
        r.eval_count = rep.eval_count;
        r.fidelity = rep.fidelity;
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    return r;
}

std::vector<CellResult> run_cells(const std::vector<RunConfig>& configs, int jobs) {
    std::vector<CellResult> results(configs.size());
    const int n = static_cast<int>(configs.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, jobs))
    for (int i = 0; i < n; ++i) results[static_cast<std::size_t>(i)] = run_cell(configs[static_cast<std::size_t>(i)]);
    return results;
}

SweepMean mean_of(const RunConfig& config, const std::vector<CellResult>& cells) {
    SweepMean m;
    m.config = config;
    double ssim_sum = 0.0;
    bool all_ssim = true;
    for (const auto& c : cells) {
        if (!c.ok) continue;
        ++m.ok_cells;
        m.speedup += c.speedup;
        m.psnr_db += c.fidelity.psnr_db;
        m.mae += c.fidelity.mae;
        if (c.fidelity.ssim) ssim_sum += *c.fidelity.ssim;
        else all_ssim = false;
    }
    if (m.ok_cells > 0) {
        m.speedup /= m.ok_cells;
        m.psnr_db /= m.ok_cells;
        m.mae /= m.ok_cells;
        if (all_ssim) m.ssim = ssim_sum / m.ok_cells;
    }
    return m;
}

std::vector<RunConfig> seeded(const RunConfig& config, const std::vector<std::uint64_t>& seeds) {
    std::vector<RunConfig> out;
    for (auto s : seeds) {
        RunConfig c = config;
        c.seed = s;
        out.push_back(c);
    }
    return out;
}

}  // namespace

std::string run_id(const RunConfig& config) {
    std::string field = config.field.kind == FieldSpec::Kind::JsonFile ? fs::path(config.field.name).stem().string()
                                                                        : config.field.label();
    return field + "_" + to_string(config.policy.variant) + "_seed" + std::to_string(config.seed);
}

RunReport execute_run(const RunConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    const auto field = make_field(config.field);
    resolve_dim(config, *field);

    RunReport rep;
    rep.id = run_id(config);
    rep.config = config;
    rep.trace = run_cached(config, *field);
    const TrajectoryTrace reference = run_full(config, *field);
    rep.eval_count = rep.trace.eval_count;
    rep.speedup = step_speedup(rep.trace);
    rep.fidelity = fidelity(reference.final_x, rep.trace.final_x, field->grid());
    rep.stats = trace_stats(rep.trace);
    rep.wall_clock_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

nlohmann::json round_numbers(const nlohmann::json& j) {
    if (j.is_number_float()) return std::strtod(format_number(j.get<double>()).c_str(), nullptr);
    if (j.is_array() || j.is_object()) {
        nlohmann::json out = j;
        for (auto it = out.begin(); it != out.end(); ++it) *it = round_numbers(*it);
        return out;
    }
    return j;
}

nlohmann::json to_json(const RunReport& r, bool include_wall_clock) {
    nlohmann::json j;
    j["id"] = r.id;
    j["config"] = to_json(r.config);
    j["step_speedup"] = r.speedup;
    j["eval_count"] = r.eval_count;
    j["steps"] = r.config.steps;
    j["fidelity"] = to_json(r.fidelity);
    j["trace_stats"] = to_json(r.stats);
    j["k_from_approx_count"] = r.stats.k_from_approx_count;
    j["trace_path"] = r.trace_path;
    if (include_wall_clock) j["wall_clock_ms"] = r.wall_clock_ms;
    return round_numbers(j);
}

std::string summary_line(const RunReport& r) {
    std::ostringstream s;
    s << r.id << " eval_count=" << r.eval_count << "/" << r.config.steps << " speedup=" << format_number(r.speedup)
      << " psnr_db=" << format_number(r.fidelity.psnr_db)
      << " ssim=" << (r.fidelity.ssim ? format_number(*r.fidelity.ssim) : std::string("n/a"))
      << " mae=" << format_number(r.fidelity.mae);
    return s.str();
}

RunReport cmd_run(const RunConfig& config, const std::string& out_dir, std::ostream& out) {
    RunReport rep = execute_run(config);
    const fs::path dir = prepare_dir(out_dir);
    rep.trace_path = rep.id + "_trace.csv";
    write_trace_csv(rep.trace, (dir / rep.trace_path).string());
    write_text(dir / (rep.id + ".json"), to_json(rep).dump(2) + "\n");
    out << summary_line(rep) << '\n';
    return rep;
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::Tau: return "tau";
        case SweepAxis::R: return "R";
        case SweepAxis::Variant: return "variant";
        case SweepAxis::KUpdate: return "k_update";
    }
    return "?";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
    for (SweepAxis a : {SweepAxis::Tau, SweepAxis::R, SweepAxis::Variant, SweepAxis::KUpdate}) {
        if (s == to_string(a)) return a;
    }
    throw ConfigError("sweep: unknown axis '" + s + "' (expected tau, R, variant, k_update)");
}

RunConfig apply_axis(const RunConfig& base, SweepAxis axis, const nlohmann::json& value) {
    RunConfig c = base;
    try {
        switch (axis) {
            case SweepAxis::Tau: c.policy.tau = value.get<double>(); break;
            case SweepAxis::R: c.policy.warmup = value.get<int>(); break;
            case SweepAxis::Variant: c.policy.variant = variant_from_string(value.get<std::string>()); break;
            case SweepAxis::KUpdate: c.policy.k_update = k_update_from_string(value.get<std::string>()); break;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("sweep: bad value for axis " + to_string(axis) + ": " + e.what());
    }
    c.validate();
    return c;
}

SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("sweep: expected a JSON object");
    SweepSpec spec;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "base") spec.base = run_config_from_json(value);
            else if (key == "axis") spec.axis = sweep_axis_from_string(value.get<std::string>());
            else if (key == "values") spec.values = value.get<std::vector<nlohmann::json>>();
            else if (key == "seeds") spec.seeds = value.get<std::vector<std::uint64_t>>();
            else if (key == "match_speedup") spec.match_speedup = value.get<bool>();
            else throw ConfigError("sweep: unknown key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("sweep: ") + e.what());
    }
    if (spec.values.empty()) throw ConfigError("sweep: 'values' must be a nonempty list");
    if (spec.seeds.empty()) throw ConfigError("sweep: 'seeds' must be a nonempty list");
    if (spec.match_speedup && spec.axis != SweepAxis::Variant) {
        throw ConfigError("sweep: match_speedup needs the variant axis");
    }
    for (const auto& v : spec.values) (void)apply_axis(spec.base, spec.axis, v);
    return spec;
}

SweepSpec load_sweep_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sweep spec '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("sweep spec '" + path + "': " + e.what());
    }
    return sweep_spec_from_json(j);
}

SweepMean evaluate_mean(const RunConfig& config, const std::vector<std::uint64_t>& seeds, int jobs) {
    return mean_of(config, run_cells(seeded(config, seeds), jobs));
}

SweepMean match_speedup(const RunConfig& config, const std::vector<std::uint64_t>& seeds, double target, int jobs) {
    const Knob knob = knob_for(config);
    auto rel_error = [&](const SweepMean& m) { return std::abs(m.speedup - target) / target; };

    SweepMean best;
    double best_err = INFINITY;
    auto probe = [&](double value) {
        SweepMean m = evaluate_mean(with_knob(config, value), seeds, jobs);
        const double err = m.ok_cells > 0 ? rel_error(m) : INFINITY;
        if (err < best_err) {
            best_err = err;
            best = m;
        }
        return m;
    };

    double lo = knob.lo, hi = knob.hi;
    probe(lo);
    probe(hi);
    for (int iter = 0; iter < 40 && best_err > 1e-3; ++iter) {
        if (knob.integer && hi - lo <= 1.0) break;
        const double mid = knob.integer ? std::floor((lo + hi) / 2.0) : (lo + hi) / 2.0;
        const SweepMean m = probe(mid);
        const bool too_slow = m.speedup < target;
        if (too_slow == knob.increasing) lo = mid;
        else hi = mid;
    }
    best.matched = best_err <= kMatchTolerance;
    return best;
}

SweepResult run_sweep(const SweepSpec& spec, int jobs) {
    SweepResult result;
    result.spec = spec;

    std::vector<RunConfig> value_configs;
    for (const auto& v : spec.values) value_configs.push_back(apply_axis(spec.base, spec.axis, v));

    std::vector<bool> matched(value_configs.size(), true);
    if (spec.match_speedup) {
        RunConfig ours = spec.base;
        ours.policy.variant = Variant::EasyCache;
        const double target = evaluate_mean(ours, spec.seeds, jobs).speedup;
        for (std::size_t i = 0; i < value_configs.size(); ++i) {
            if (value_configs[i].policy.variant == Variant::EasyCache) continue;
            const SweepMean m = match_speedup(value_configs[i], spec.seeds, target, jobs);
            value_configs[i] = m.config;
            matched[i] = m.matched;
        }
    }

    std::vector<RunConfig> configs;
    for (std::size_t i = 0; i < value_configs.size(); ++i) {
        for (auto s : spec.seeds) {
            SweepCell cell;
            cell.index = static_cast<int>(result.cells.size());
            cell.value = value_text(spec.values[i]);
            cell.seed = s;
            cell.config = value_configs[i];
            cell.config.seed = s;
            configs.push_back(cell.config);
            result.cells.push_back(cell);
        }
    }

    const auto outcomes = run_cells(configs, jobs);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        auto& cell = result.cells[i];
        cell.ok = outcomes[i].ok;
        cell.error = outcomes[i].error;
        cell.speedup = outcomes[i].speedup;
        cell.eval_count = outcomes[i].eval_count;
        cell.fidelity = outcomes[i].fidelity;
    }

    const std::size_t per = spec.seeds.size();
    for (std::size_t i = 0; i < value_configs.size(); ++i) {
        const std::vector<CellResult> slice(outcomes.begin() + static_cast<std::ptrdiff_t>(i * per),
                                            outcomes.begin() + static_cast<std::ptrdiff_t>((i + 1) * per));
        SweepMean m = mean_of(value_configs[i], slice);
        m.value = value_text(spec.values[i]);
        m.matched = matched[i];
        result.means.push_back(m);
    }
    return result;
}

namespace {

void write_row_prefix(std::ostream& out, const std::string& row, const std::string& value, const std::string& seed,
                      const RunConfig& c) {
    out << row << ',' << value << ',' << seed << ',' << to_string(c.policy.variant) << ','
        << format_number(c.policy.tau) << ',' << c.policy.warmup << ',' << to_string(c.policy.k_update) << ','
        << format_number(knob_value(c)) << ',';
}

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

void write_sweep_csv(const SweepResult& r, std::ostream& out) {
    out << "row,value,seed,variant,tau,R,k_update,knob,speedup,eval_count,psnr_db,ssim,mae,status\n";
    for (const auto& c : r.cells) {
        write_row_prefix(out, std::to_string(c.index), c.value, std::to_string(c.seed), c.config);
        if (c.ok) {
            out << format_number(c.speedup) << ',' << c.eval_count << ',' << format_number(c.fidelity.psnr_db) << ','
                << optional_number(c.fidelity.ssim) << ',' << format_number(c.fidelity.mae) << ",ok\n";
        } else {
            std::string msg = c.error;
            for (char& ch : msg) {
                if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
            }
            out << ",,,,,error: " << msg << '\n';
        }
    }
    for (const auto& m : r.means) {
        write_row_prefix(out, "mean", m.value, "mean", m.config);
        out << format_number(m.speedup) << ",," << format_number(m.psnr_db) << ',' << optional_number(m.ssim) << ','
            << format_number(m.mae) << ',' << (m.matched ? "ok" : "unmatched") << '\n';
    }
}

nlohmann::json to_json(const SweepResult& r) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells) {
        nlohmann::json j{{"row", c.index},   {"value", c.value},         {"seed", c.seed},
                         {"config", to_json(c.config)}, {"ok", c.ok}};
        if (c.ok) {
            j["speedup"] = c.speedup;
            j["eval_count"] = c.eval_count;
            j["fidelity"] = to_json(c.fidelity);
        } else {
            j["error"] = c.error;
        }
        cells.push_back(j);
    }
    nlohmann::json means = nlohmann::json::array();
    for (const auto& m : r.means) {
        means.push_back({{"value", m.value},
                         {"config", to_json(m.config)},
                         {"ok_cells", m.ok_cells},
                         {"speedup", m.speedup},
                         {"psnr_db", m.psnr_db},
                         {"ssim", m.ssim ? nlohmann::json(*m.ssim) : nlohmann::json(nullptr)},
                         {"mae", m.mae},
                         {"matched", m.matched}});
    }
    return round_numbers({{"axis", to_string(r.spec.axis)}, {"cells", cells}, {"means", means}});
}

SweepResult cmd_sweep(const SweepSpec& spec, const std::string& out_dir, int jobs, const std::string& format,
                      std::ostream& out) {
    if (format != "csv" && format != "json") throw ConfigError("sweep: --format must be csv or json");
    SweepResult result = run_sweep(spec, jobs);
    std::ostringstream text;
    if (format == "csv") write_sweep_csv(result, text);
    else text << to_json(result).dump(2) << '\n';
    write_text(prepare_dir(out_dir) / ("sweep." + format), text.str());
    out << text.str();
    return result;
}

TrajectoryTrace cmd_trace(const RunConfig& config, const std::string& out_dir, bool cached, std::ostream& out) {
    config.validate();
    const auto field = make_field(config.field);
    TrajectoryTrace trace = cached ? run_cached(config, *field) : run_full(config, *field);
    const fs::path path = prepare_dir(out_dir) / (run_id(config) + (cached ? "_trace.csv" : "_full_trace.csv"));
    write_trace_csv(trace, path.string());
    out << path.string() << '\n';
    return trace;
}

void cmd_presets(std::ostream& out) {
    for (const auto& name : preset_names()) {
        const AnchorSet set = make_preset(name);
        out << name << " dim=" << set.dim << " K=" << set.anchors.size();
        if (set.grid) out << " grid=" << set.grid->width << "x" << set.grid->height;
        out << " spread=" << format_number(set.spread) << '\n';
    }
}

int guarded(const std::function<void()>& body, std::ostream& err) {
    try {
        body();
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace easycache
