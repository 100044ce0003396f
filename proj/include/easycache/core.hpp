#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace easycache {

/// Flat sample representation. Grids are stored row-major; the shape lives
/// next to the tensor (see GridShape), not inside it.
using Tensor1D = std::vector<double>;

struct GridShape {
    std::size_t width = 0;
    std::size_t height = 0;

    std::size_t size() const { return width * height; }
    bool operator==(const GridShape&) const = default;
};

// Error taxonomy. The CLI maps ConfigError to exit 2 and NumericError to 3.
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mean absolute value, (sum |a_i|) / d. Throws ContractError on empty input.
double l1_mean(std::span<const double> a);

/// l1_mean(a - b) without materializing the difference.
double l1_mean_diff(std::span<const double> a, std::span<const double> b);

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what);

/// Throws NumericError if any entry is NaN or infinite.
void require_finite(std::span<const double> a, const char* what);

/// Time grid s_0 = 0 < s_1 < ... < s_T <= 1 - delta_end.
class Schedule {
public:
    static Schedule uniform(int steps, double delta_end);

    int steps() const { return static_cast<int>(times_.size()) - 1; }
    double time(int j) const { return times_.at(static_cast<std::size_t>(j)); }
    /// s_t - s_{t-1}, for t in [1, T].
    double step_size(int t) const;
    double delta_end() const { return delta_end_; }
    const std::vector<double>& times() const { return times_; }

private:
    Schedule(std::vector<double> times, double delta_end);

    std::vector<double> times_;
    double delta_end_ = 0.0;
};

inline Schedule uniform_schedule(int steps, double delta_end) {
    return Schedule::uniform(steps, delta_end);
}

struct LatentState {
    Tensor1D x;
    int step = 0;
    double time = 0.0;
};

LatentState initial_state(Tensor1D x0, const Schedule& schedule);

/// x' = x + v * (s_{t+1} - s_t).
LatentState euler_step(const LatentState& state, std::span<const double> v, const Schedule& schedule);

/// printf-style "%.12g", the numeric format of every file the harness writes.
std::string format_number(double value);

}  // namespace easycache
