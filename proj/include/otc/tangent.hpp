// tangent.hpp - log and exp maps between the Wasserstein space of circle
// measures and the tangent space at a base measure, the L2_mu inner product on
// displacements, and log-distance matrices.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "otc/measure.hpp"
#include "otc/transport.hpp"

namespace otc {

// Transport map anchored at a base measure; the displacement v(x) = T(x) - x
// is the tangent-space representation.
struct TangentVector {
    const PeriodicMeasure* base = nullptr;
    TransportMap map;

    double displacement(double x) const { return map(x) - x; }

    TangentVector scaled(double lambda) const {
        TangentVector out;
        out.base = base;
        const int m = map.grid_size();
        out.map.values.resize(m + 1);
        const double h = two_pi / m;
        for (int i = 0; i <= m; ++i)
            out.map.values[i] = i * h + lambda * (map.values[i] - i * h);
        return out;
    }
};

// Refinement factor for the maps carried by tangent vectors. A quantile jump
// of the target (a density gap) is confined to 1/refine of a grid cell, which
// keeps exp(log(nu)) close to nu even for gapped targets.
inline constexpr int log_map_refine = 16;

inline TangentVector log_map(const PeriodicMeasure& base, const PeriodicMeasure& nu) {
    TangentVector v;
    v.base = &base;
    v.map = theta_star(base, nu, 1e-10, log_map_refine).map;
    return v;
}

inline PeriodicMeasure exp_map(const PeriodicMeasure& base, const TangentVector& v) {
    if (!v.map.is_nondecreasing())
        throw std::invalid_argument("exp_map: map is not monotone (outside the log image)");
    return base.pushforward_monotone(v.map);
}

inline PeriodicMeasure exp_map(const PeriodicMeasure& base, const TangentVector& v,
                               double lambda) {
    return exp_map(base, v.scaled(lambda));
}

// <v1, v2> = int v1(x) v2(x) dmu(x), midpoint rule on the base grid.
inline double inner(const PeriodicMeasure& base, const TangentVector& v1,
                    const TangentVector& v2) {
    if (v1.base != v2.base)
        throw std::invalid_argument("inner: tangent vectors have different bases");
    const int m = base.grid_size();
    const double h = base.cell_width();
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
        const double x = (i + 0.5) * h;
        s += v1.displacement(x) * v2.displacement(x) * base.density()[i] * h;
    }
    return s;
}

inline double norm(const PeriodicMeasure& base, const TangentVector& v) {
    return std::sqrt(std::max(0.0, inner(base, v, v)));
}

inline double tangent_distance(const PeriodicMeasure& base, const TangentVector& v1,
                               const TangentVector& v2) {
    if (v1.base != v2.base)
        throw std::invalid_argument("tangent_distance: different bases");
    const int m = base.grid_size();
    const double h = base.cell_width();
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
        const double x = (i + 0.5) * h;
        const double d = v1.map(x) - v2.map(x);
        s += d * d * base.density()[i] * h;
    }
    return std::sqrt(std::max(0.0, s));
}

// Entry (i, j) = || log_base(mu_i) - log_base(mu_j) ||_{L2_base}.
inline std::vector<std::vector<double>> log_distance_matrix(
    const PeriodicMeasure& base, const std::vector<PeriodicMeasure>& measures) {
    if (measures.empty()) throw std::invalid_argument("log_distance_matrix: empty list");
    const int n = static_cast<int>(measures.size());
    std::vector<TangentVector> logs;
    logs.reserve(n);
    for (const auto& mu : measures) logs.push_back(log_map(base, mu));
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            d[i][j] = d[j][i] = tangent_distance(base, logs[i], logs[j]);
    return d;
}

}  // namespace otc
