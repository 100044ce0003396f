#include "easycache/core.hpp"

#include <cmath>
#include <cstdio>

#include "easycache/kernels.hpp"

namespace easycache {

double l1_mean(std::span<const double> a) {
    if (a.empty()) throw ContractError("l1_mean: empty tensor");
    return kernels::abs_sum(a) / static_cast<double>(a.size());
}

double l1_mean_diff(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "l1_mean_diff");
    if (a.empty()) throw ContractError("l1_mean_diff: empty tensor");
    return kernels::abs_diff_sum(a, b) / static_cast<double>(a.size());
}

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw ContractError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()) + ")");
    }
}

void require_finite(std::span<const double> a, const char* what) {
    for (double v : a) {
        if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite value");
    }
}

Schedule::Schedule(std::vector<double> times, double delta_end) : times_(std::move(times)), delta_end_(delta_end) {}

Schedule Schedule::uniform(int steps, double delta_end) {
    if (steps < 2) throw ConfigError("schedule: T must be >= 2, got " + std::to_string(steps));
    if (!(delta_end > 0.0 && delta_end < 0.5)) {
        throw ConfigError("schedule: delta_end must lie in (0, 0.5), got " + format_number(delta_end));
    }
    std::vector<double> times(static_cast<std::size_t>(steps) + 1);
    const double span = 1.0 - delta_end;
    for (int j = 0; j < steps; ++j) times[static_cast<std::size_t>(j)] = j * span / steps;
    times.back() = span;  // j * span / T can round one ulp above span at j = T
    return Schedule(std::move(times), delta_end);
}

double Schedule::step_size(int t) const {
    if (t < 1 || t > steps()) throw ContractError("schedule: step index out of range");
    return times_[static_cast<std::size_t>(t)] - times_[static_cast<std::size_t>(t) - 1];
}

LatentState initial_state(Tensor1D x0, const Schedule& schedule) {
    return LatentState{std::move(x0), 0, schedule.time(0)};
}

LatentState euler_step(const LatentState& state, std::span<const double> v, const Schedule& schedule) {
    if (state.step >= schedule.steps()) throw ContractError("euler_step: state already at final time");
    require_same_length(state.x, v, "euler_step");
    LatentState next;
    next.x.resize(state.x.size());
    kernels::axpy(next.x, state.x, v, schedule.step_size(state.step + 1));
    next.step = state.step + 1;
    next.time = schedule.time(next.step);
    return next;
}

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

}  // namespace easycache
