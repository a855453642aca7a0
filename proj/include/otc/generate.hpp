// generate.hpp - parametric density families on S1 and the simulated datasets
// used by the numerical experiments.
#pragma once

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "otc/measure.hpp"

namespace otc {

// Deterministic uniform draw in [lo, hi); does not depend on the standard
// library's distribution implementation.
inline double uniform_draw(std::mt19937_64& rng, double lo, double hi) {
    const double u = (rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

// f(x; alpha) proportional to exp(3 cos((x - pi) / alpha)), renormalized on the grid.
inline PeriodicMeasure von_mises(double alpha, int m = default_grid_size) {
    if (alpha <= 0.0) throw std::invalid_argument("von_mises: alpha must be positive");
    const double h = two_pi / m;
    std::vector<double> dens(m);
    for (int i = 0; i < m; ++i) {
        const double x = (i + 0.5) * h;
        dens[i] = std::exp(3.0 * std::cos((x - pi) / alpha));
    }
    return PeriodicMeasure::from_density_grid(dens);
}

// Uniform measure on the arc (centre - width/2, centre + width/2), wrapping
// across 0. With as_fractions, centre and width are fractions of the full circle.
inline PeriodicMeasure uniform_arc(double centre, double width, bool as_fractions = false,
                                   int m = default_grid_size) {
    if (as_fractions) { centre *= two_pi; width *= two_pi; }
    if (width <= 0.0 || width > two_pi) throw std::invalid_argument("uniform_arc: bad width");
    const double h = two_pi / m;
    double a = centre - width / 2.0;
    a -= std::floor(a / two_pi) * two_pi;  // start of the arc in [0, 2*pi)
    const double b = a + width;            // may extend past 2*pi (wrap)
    std::vector<double> dens(m, 0.0);
    for (int i = 0; i < m; ++i) {
        const double c0 = i * h, c1 = (i + 1) * h;
        double ov = std::max(0.0, std::min(b, c1) - std::max(a, c0));
        ov += std::max(0.0, std::min(b, c1 + two_pi) - std::max(a, c0 + two_pi));
        dens[i] = ov;
    }
    return PeriodicMeasure::from_density_grid(dens);
}

// Beta(a, 2) density rescaled from (0, 1) to (0, 2*pi).
inline PeriodicMeasure periodic_beta(double a, int m = default_grid_size) {
    if (a <= 0.0) throw std::invalid_argument("periodic_beta: a must be positive");
    const double h = two_pi / m;
    std::vector<double> dens(m);
    for (int i = 0; i < m; ++i) {
        const double t = ((i + 0.5) * h) / two_pi;
        dens[i] = std::pow(t, a - 1.0) * (1.0 - t);
    }
    return PeriodicMeasure::from_density_grid(dens);
}

// Gaussian with mean mparam and scale s truncated to (0, 2*pi), no wrapping.
inline PeriodicMeasure trunc_gauss(double mparam, double s, int m = default_grid_size) {
    if (s <= 0.0) throw std::invalid_argument("trunc_gauss: scale must be positive");
    const double h = two_pi / m;
    std::vector<double> dens(m);
    for (int i = 0; i < m; ++i) {
        const double x = (i + 0.5) * h;
        const double z = (x - mparam) / s;
        dens[i] = std::exp(-0.5 * z * z);
    }
    return PeriodicMeasure::from_density_grid(dens);
}

// --- simulated datasets ---

// Two families of arc uniforms centred at fractions 0.25 and 0.75.
inline std::vector<PeriodicMeasure> simulation_two_arcs(int m = default_grid_size) {
    std::vector<PeriodicMeasure> out;
    for (int i = 1; i <= 5; ++i) out.push_back(uniform_arc(0.25, 0.1 + 0.05 * i, true, m));
    for (int i = 1; i <= 5; ++i) out.push_back(uniform_arc(0.75, 0.1 + 0.05 * i, true, m));
    return out;
}

// Three families of arc uniforms centred at fractions 0, 1/3 and 2/3.
inline std::vector<PeriodicMeasure> simulation_three_arcs(int m = default_grid_size) {
    std::vector<PeriodicMeasure> out;
    for (int i = 1; i <= 10; ++i) out.push_back(uniform_arc(0.0, 0.05 + 0.015 * i, true, m));
    for (int i = 1; i <= 10; ++i) out.push_back(uniform_arc(1.0 / 3.0, 0.05 + 0.015 * i, true, m));
    for (int i = 1; i <= 10; ++i) out.push_back(uniform_arc(2.0 / 3.0, 0.05 + 0.015 * i, true, m));
    return out;
}

// Periodic Beta measures; the shape parameters are drawn from two centred
// uniform families U(1.3, 0.2) and U(2.6, 0.4) (centre/width convention).
inline std::vector<PeriodicMeasure> simulation_beta(std::uint64_t seed,
                                                    int m = default_grid_size) {
    std::mt19937_64 rng(seed);
    std::vector<PeriodicMeasure> out;
    for (int i = 0; i < 10; ++i)
        out.push_back(periodic_beta(uniform_draw(rng, 1.3 - 0.1, 1.3 + 0.1), m));
    for (int i = 0; i < 10; ++i)
        out.push_back(periodic_beta(uniform_draw(rng, 2.6 - 0.2, 2.6 + 0.2), m));
    return out;
}

inline std::vector<PeriodicMeasure> von_mises_dataset(int n, double alpha_lo, double alpha_hi,
                                                      std::uint64_t seed,
                                                      int m = default_grid_size) {
    std::mt19937_64 rng(seed);
    std::vector<PeriodicMeasure> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(von_mises(uniform_draw(rng, alpha_lo, alpha_hi), m));
    return out;
}

struct TruncGaussParams { double m; double s; };

inline std::vector<TruncGaussParams> trunc_gauss_params(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<TruncGaussParams> params;
    params.reserve(n);
    while (static_cast<int>(params.size()) < n) {
        const double mp = uniform_draw(rng, 0.3 * pi, 1.7 * pi);
        const double s = uniform_draw(rng, pi / 20.0, pi / 10.0);
        if (mp - 3.0 * s > 0.0 && mp + 3.0 * s < two_pi) params.push_back({mp, s});
    }
    return params;
}

inline std::vector<PeriodicMeasure> trunc_gauss_dataset(int n, std::uint64_t seed,
                                                        int m = default_grid_size) {
    std::vector<PeriodicMeasure> out;
    out.reserve(n);
    for (const auto& p : trunc_gauss_params(n, seed)) out.push_back(trunc_gauss(p.m, p.s, m));
    return out;
}

// String-dispatch entry point used by the CLI.
inline std::vector<PeriodicMeasure> generate(const std::string& family,
                                             const std::map<std::string, double>& params,
                                             std::uint64_t seed,
                                             int m = default_grid_size) {
    auto get = [&](const std::string& key, double fallback) {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };
    if (family == "von_mises") {
        const int n = static_cast<int>(get("n", 100));
        if (params.count("alpha")) return {von_mises(get("alpha", 1.0), m)};
        return von_mises_dataset(n, get("alpha_lo", 0.8), get("alpha_hi", 1.5), seed, m);
    }
    if (family == "uniform_arc") {
        return {uniform_arc(get("centre", 0.25), get("width", 0.2),
                            get("fractions", 1.0) != 0.0, m)};
    }
    if (family == "periodic_beta") {
        if (params.count("a")) return {periodic_beta(get("a", 2.0), m)};
        return simulation_beta(seed, m);
    }
    if (family == "trunc_gauss") {
        return trunc_gauss_dataset(static_cast<int>(get("n", 100)), seed, m);
    }
    throw std::invalid_argument("generate: unknown family '" + family + "'");
}

}  // namespace otc
