#include <algorithm>
#include <cmath>
#include <numbers>

#include "easycache/fields.hpp"
#include "easycache/rng.hpp"

namespace easycache {

namespace {

// Glyph generator seed. Fixed so every run sees the same anchors; the run
// seed only drives the initial noise.
constexpr std::uint64_t kDigitsSeed = 0x5EED'D161'75ull;

constexpr double kPresetSpread = 0.5;

Tensor1D uniform_priors(std::size_t k) { return Tensor1D(k, 1.0 / static_cast<double>(k)); }

AnchorSet two_point_1d() {
    AnchorSet set;
    set.name = "two-point-1d";
    set.dim = 1;
    set.anchors = {{3.0}, {-3.0}};
    set.priors = uniform_priors(2);
    set.spread = kPresetSpread;
    return set;
}

AnchorSet gauss_grid_2d() {
    AnchorSet set;
    set.name = "gauss-grid-2d";
    set.dim = 2;
    constexpr int k = 8;
    constexpr double radius = 4.0;
    for (int i = 0; i < k; ++i) {
        const double angle = 2.0 * std::numbers::pi * i / k;
        set.anchors.push_back({radius * std::cos(angle), radius * std::sin(angle)});
    }
    set.priors = uniform_priors(k);
    set.spread = kPresetSpread;
    return set;
}

// Distance from (px, py) to the segment (x0, y0)-(x1, y1).
double segment_distance(double px, double py, double x0, double y0, double x1, double y1) {
    const double dx = x1 - x0, dy = y1 - y0;
    const double len2 = dx * dx + dy * dy;
    double u = len2 > 0.0 ? ((px - x0) * dx + (py - y0) * dy) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    return std::hypot(px - x0 - u * dx, py - y0 - u * dy);
}

// Sixteen 16x16 glyphs, each the union of three soft strokes, mapped to
// [-2, 2] (background -2, stroke core +2).
AnchorSet digits_16x16() {
    constexpr std::size_t side = 16;
    constexpr int glyphs = 16;
    constexpr int strokes = 3;
    constexpr double amplitude = 2.0;

    AnchorSet set;
    set.name = "digits-16x16";
    set.dim = side * side;
    set.grid = GridShape{side, side};

    Xoshiro256 rng(kDigitsSeed);
    for (int g = 0; g < glyphs; ++g) {
        double seg[strokes][4];
        for (auto& s : seg) {
            for (double& c : s) c = 2.0 + 12.0 * rng.uniform();
        }
        Tensor1D img(set.dim);
        for (std::size_t r = 0; r < side; ++r) {
            for (std::size_t c = 0; c < side; ++c) {
                double ink = 0.0;
                for (const auto& s : seg) {
                    const double d = segment_distance(static_cast<double>(c), static_cast<double>(r), s[0], s[1], s[2], s[3]);
                    ink = std::max(ink, std::exp(-0.5 * d * d));
                }
                img[r * side + c] = amplitude * (2.0 * ink - 1.0);
            }
        }
        set.anchors.push_back(std::move(img));
    }
    set.priors = uniform_priors(glyphs);
    set.spread = kPresetSpread;
    return set;
}

}  // namespace

std::vector<std::string> preset_names() { return {"two-point-1d", "gauss-grid-2d", "digits-16x16"}; }

AnchorSet make_preset(std::string_view name) {
    if (name == "two-point-1d") return two_point_1d();
    if (name == "gauss-grid-2d") return gauss_grid_2d();
    if (name == "digits-16x16") return digits_16x16();
    throw ConfigError("unknown preset '" + std::string(name) + "'");
}

}  // namespace easycache
