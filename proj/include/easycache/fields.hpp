#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "easycache/core.hpp"

namespace easycache {

/// The expensive model being accelerated. `evaluate` is the counted entry
/// point the sampler uses; `velocity` is the same pure function without
/// bookkeeping, for tests and oracles.
class VelocityOracle {
public:
    virtual ~VelocityOracle() = default;

    Tensor1D evaluate(std::span<const double> x, double s) const {
        evals_.fetch_add(1, std::memory_order_relaxed);
        return velocity(x, s);
    }
    std::uint64_t eval_count() const noexcept { return evals_.load(std::memory_order_relaxed); }

    virtual Tensor1D velocity(std::span<const double> x, double s) const = 0;
    virtual std::size_t dim() const noexcept = 0;
    virtual std::optional<GridShape> grid() const { return std::nullopt; }

private:
    mutable std::atomic<std::uint64_t> evals_{0};
};

/// A finite set of targets the flow transports noise onto. With spread > 0
/// each anchor is the mean of an isotropic Gaussian component of that
/// standard deviation; spread == 0 gives point anchors.
struct AnchorSet {
    std::string name;
    std::size_t dim = 0;
    std::optional<GridShape> grid;
    std::vector<Tensor1D> anchors;
    Tensor1D priors;
    double spread = 0.0;
};

AnchorSet anchor_set_from_json(const nlohmann::json& j);
nlohmann::json anchor_set_to_json(const AnchorSet& set);
AnchorSet load_anchor_set(const std::string& path);

/// Built-in anchor sets: "two-point-1d", "gauss-grid-2d", "digits-16x16".
std::vector<std::string> preset_names();
AnchorSet make_preset(std::string_view name);

/// Exact marginal velocity of the rectified flow x_s = (1-s) x0 + s y with
/// x0 ~ N(0, I) and y drawn from the anchor mixture:
///   v(x, s) = (E[y | x_s = x] - x) / (1 - s).
/// Component posteriors are computed in the log domain with max-subtraction.
class MixtureFlowField final : public VelocityOracle {
public:
    explicit MixtureFlowField(AnchorSet set);

    Tensor1D velocity(std::span<const double> x, double s) const override;
    std::size_t dim() const noexcept override { return set_.dim; }
    std::optional<GridShape> grid() const override { return set_.grid; }

    /// w_i(x, s), nonnegative and summing to one.
    Tensor1D posterior_weights(std::span<const double> x, double s) const;

    const AnchorSet& anchor_set() const { return set_; }

private:
    AnchorSet set_;
    Tensor1D log_priors_;
};

/// v(x, s) = gain * x + bias, independent of s.
class AffineField final : public VelocityOracle {
public:
    AffineField(double gain, Tensor1D bias);

    Tensor1D velocity(std::span<const double> x, double s) const override;
    std::size_t dim() const noexcept override { return bias_.size(); }

    double gain() const { return gain_; }
    const Tensor1D& bias() const { return bias_; }

private:
    double gain_;
    Tensor1D bias_;
};

inline Tensor1D mixture_velocity(const MixtureFlowField& field, std::span<const double> x, double s) {
    return field.velocity(x, s);
}

inline Tensor1D affine_velocity(const AffineField& field, std::span<const double> x, double s) {
    return field.velocity(x, s);
}

/// Standard-normal vector from Xoshiro256(seed).
Tensor1D sample_initial(std::size_t dim, std::uint64_t seed);

}  // namespace easycache
