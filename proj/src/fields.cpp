#include "easycache/fields.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "easycache/kernels.hpp"
#include "easycache/rng.hpp"

namespace easycache {

namespace {

void validate(const AnchorSet& set) {
    if (set.dim < 1) throw ConfigError("anchor set '" + set.name + "': dim must be >= 1");
    if (set.anchors.empty()) throw ConfigError("anchor set '" + set.name + "': needs at least one anchor");
    if (set.priors.size() != set.anchors.size()) {
        throw ConfigError("anchor set '" + set.name + "': priors and anchors differ in count");
    }
    for (const auto& a : set.anchors) {
        if (a.size() != set.dim) throw ConfigError("anchor set '" + set.name + "': anchor length != dim");
        for (double v : a) {
            if (!std::isfinite(v)) throw ConfigError("anchor set '" + set.name + "': non-finite anchor value");
        }
    }
    double total = 0.0;
    for (double p : set.priors) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("anchor set '" + set.name + "': negative prior");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("anchor set '" + set.name + "': priors must sum to 1");
    if (!(set.spread >= 0.0) || !std::isfinite(set.spread)) {
        throw ConfigError("anchor set '" + set.name + "': spread must be >= 0");
    }
    if (set.grid && set.grid->size() != set.dim) {
        throw ConfigError("anchor set '" + set.name + "': width * height != dim");
    }
}

}  // namespace

AnchorSet anchor_set_from_json(const nlohmann::json& j) {
    AnchorSet set;
    try {
        set.name = j.value("name", std::string("custom"));
        set.dim = j.at("dim").get<std::size_t>();
        const bool has_w = j.contains("width") && !j["width"].is_null();
        const bool has_h = j.contains("height") && !j["height"].is_null();
        if (has_w != has_h) throw ConfigError("anchor set: width and height must be given together");
        if (has_w) set.grid = GridShape{j["width"].get<std::size_t>(), j["height"].get<std::size_t>()};
        set.anchors = j.at("anchors").get<std::vector<Tensor1D>>();
        if (j.contains("priors")) {
            set.priors = j["priors"].get<Tensor1D>();
        } else {
            set.priors.assign(set.anchors.size(), 1.0 / static_cast<double>(std::max<std::size_t>(1, set.anchors.size())));
        }
        set.spread = j.value("spread", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("anchor set: ") + e.what());
    }
    validate(set);
    return set;
}

nlohmann::json anchor_set_to_json(const AnchorSet& set) {
    nlohmann::json j;
    j["name"] = set.name;
    j["dim"] = set.dim;
    j["width"] = set.grid ? nlohmann::json(set.grid->width) : nlohmann::json(nullptr);
    j["height"] = set.grid ? nlohmann::json(set.grid->height) : nlohmann::json(nullptr);
    j["anchors"] = set.anchors;
    j["priors"] = set.priors;
    j["spread"] = set.spread;
    return j;
}

AnchorSet load_anchor_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open anchor file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("anchor file '" + path + "': " + e.what());
    }
    return anchor_set_from_json(j);
}

MixtureFlowField::MixtureFlowField(AnchorSet set) : set_(std::move(set)) {
    validate(set_);
    log_priors_.resize(set_.priors.size());
    std::transform(set_.priors.begin(), set_.priors.end(), log_priors_.begin(),
                   [](double p) { return std::log(p); });  // log(0) = -inf drops the component
}

Tensor1D MixtureFlowField::posterior_weights(std::span<const double> x, double s) const {
    if (!(s >= 0.0 && s < 1.0)) throw DomainError("mixture field: s must lie in [0, 1)");
    if (x.size() != set_.dim) throw ContractError("mixture field: x length != dim");

    const double sig2 = set_.spread * set_.spread;
    const double var = (1.0 - s) * (1.0 - s) + s * s * sig2;

    Tensor1D logw(set_.anchors.size());
    kernels::scaled_sq_distances(x, set_.anchors, s, logw);
    double top = -INFINITY;
    for (std::size_t i = 0; i < logw.size(); ++i) {
        logw[i] = log_priors_[i] - logw[i] / (2.0 * var);
        top = std::max(top, logw[i]);
    }
    double total = 0.0;
    for (double& w : logw) {
        w = std::exp(w - top);
        total += w;
    }
    for (double& w : logw) w /= total;
    return logw;
}

Tensor1D MixtureFlowField::velocity(std::span<const double> x, double s) const {
    const Tensor1D w = posterior_weights(x, s);
    Tensor1D mean(set_.dim);
    kernels::weighted_combination(set_.anchors, w, mean);

    // Per-component posterior mean: y_i + a (x - s y_i), a = s sigma^2 / var.
    const double sig2 = set_.spread * set_.spread;
    const double var = (1.0 - s) * (1.0 - s) + s * s * sig2;
    const double a = s * sig2 / var;
    const double remaining = 1.0 - s;

    Tensor1D v(set_.dim);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double ybar = mean[i] + a * (x[i] - s * mean[i]);
        v[i] = (ybar - x[i]) / remaining;
    }
    return v;
}

AffineField::AffineField(double gain, Tensor1D bias) : gain_(gain), bias_(std::move(bias)) {
    if (bias_.empty()) throw ConfigError("affine field: bias must be nonempty");
    if (!std::isfinite(gain_)) throw ConfigError("affine field: gain must be finite");
    require_finite(bias_, "affine field bias");
}

Tensor1D AffineField::velocity(std::span<const double> x, double) const {
    require_same_length(x, bias_, "affine field");
    Tensor1D v(bias_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = gain_ * x[i] + bias_[i];
    return v;
}

Tensor1D sample_initial(std::size_t dim, std::uint64_t seed) {
    if (dim < 1) throw ConfigError("sample_initial: dim must be >= 1");
    Xoshiro256 rng(seed);
    Tensor1D x(dim);
    for (double& v : x) v = rng.normal();
    return x;
}

}  // namespace easycache
