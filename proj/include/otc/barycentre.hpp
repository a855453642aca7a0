// barycentre.hpp - fixed-point (Procrustes) iteration for the Wasserstein
// barycentre, the Frechet functional, and the a-posteriori convergence
// certificate based on tangent-space distances.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "otc/measure.hpp"
#include "otc/tangent.hpp"
#include "otc/transport.hpp"

namespace otc {

struct CertificateReport {
    double max_rel_gap = 0.0;
    bool pass = false;
    std::vector<std::vector<double>> gaps;  // per-pair relative gaps
};

struct BarycentreResult {
    PeriodicMeasure barycentre;
    int iterations = 0;
    std::vector<double> trace;  // per-iteration W2 step sizes
    bool converged = false;
    CertificateReport certificate;
};

// F(nu) = (1/2n) sum W2^2(nu, mu_i).
inline double frechet_value(const PeriodicMeasure& nu,
                            const std::vector<PeriodicMeasure>& measures) {
    double s = 0.0;
    for (const auto& mu : measures) s += theta_star(nu, mu).cost;
    return s / (2.0 * measures.size());
}

// Per-pair check of || log(mu_i) - log(mu_j) || = W2(mu_i, mu_j); relative
// gaps. The denominator is floored at the dataset diameter (largest pairwise
// W2), so that pairs of nearly identical measures do not blow a fixed-point
// discrepancy far below the data scale out of proportion.
inline CertificateReport certificate(const PeriodicMeasure& bary,
                                     const std::vector<PeriodicMeasure>& measures,
                                     double tol = 1e-2, double eps_floor = 1e-9) {
    CertificateReport rep;
    const int n = static_cast<int>(measures.size());
    rep.gaps.assign(n, std::vector<double>(n, 0.0));
    const auto dlog = log_distance_matrix(bary, measures);
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    double diam = eps_floor;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            w[i][j] = wasserstein(measures[i], measures[j]);
            diam = std::max(diam, w[i][j]);
        }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double gap = std::fabs(dlog[i][j] - w[i][j]) / std::max(w[i][j], diam);
            rep.gaps[i][j] = rep.gaps[j][i] = gap;
            rep.max_rel_gap = std::max(rep.max_rel_gap, gap);
        }
    }
    rep.pass = rep.max_rel_gap <= tol;
    return rep;
}

// Fixed-point iteration: push the current iterate through the average of the
// optimal maps to the data, until the W2 step size drops below eps. The
// certificate is evaluated at the final iterate.
inline BarycentreResult procrustes_barycentre(const std::vector<PeriodicMeasure>& measures,
                                              const PeriodicMeasure& init,
                                              double eps = 1e-4, int max_iter = 200,
                                              double certificate_tol = 1e-2) {
    if (measures.empty()) throw std::invalid_argument("procrustes_barycentre: no measures");
    const int n = static_cast<int>(measures.size());
    BarycentreResult res;
    res.barycentre = init;
    const int m = init.grid_size();
    // Maps sampled at sub-cell resolution: support edges generally sit inside
    // a cell, and at map resolution 1 the half-cell quantisation of the edge
    // behaviour leaves the iteration circling the fixed point at ~1e-4.
    constexpr int iter_map_refine = 8;
    const int M = m * iter_map_refine;
    for (int it = 0; it < max_iter; ++it) {
        TransportMap avg;
        avg.values.assign(M + 1, 0.0);
        for (int i = 0; i < n; ++i) {
            const auto t = theta_star(res.barycentre, measures[i], 1e-10, iter_map_refine).map;
            for (int k = 0; k <= M; ++k) avg.values[k] += t.values[k];
        }
        for (double& v : avg.values) v /= n;
        // No recentring here: the averaged map is only evaluated on the support
        // of the iterate, and shifting it to zero its Lebesgue integral would
        // rotate real mass whenever the gap extensions of the individual maps
        // carry a nonzero budget (which happens at degenerate antipodal data).
        PeriodicMeasure next = res.barycentre.pushforward_monotone(avg, 4, true);
        const double step = wasserstein(res.barycentre, next);
        res.trace.push_back(step);
        res.barycentre = std::move(next);
        res.iterations = it + 1;
        if (step < eps) { res.converged = true; break; }
    }
    res.certificate = certificate(res.barycentre, measures, certificate_tol);
    return res;
}

// Default initialization: the input measure with the smallest Frechet value.
inline BarycentreResult procrustes_barycentre(const std::vector<PeriodicMeasure>& measures,
                                              double eps = 1e-4, int max_iter = 200,
                                              double certificate_tol = 1e-2) {
    if (measures.empty()) throw std::invalid_argument("procrustes_barycentre: no measures");
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < measures.size(); ++i) {
        const double v = frechet_value(measures[i], measures);
        if (v < best_val) { best_val = v; best = static_cast<int>(i); }
    }
    return procrustes_barycentre(measures, measures[best], eps, max_iter, certificate_tol);
}

// Barycentre of the measures unrolled on [0, 2*pi] treated as the real line:
// plain quantile averaging, no rotation. Used as the comparison baseline.
inline PeriodicMeasure euclidean_line_barycentre(const std::vector<PeriodicMeasure>& measures,
                                                 int oversample = 4) {
    if (measures.empty()) throw std::invalid_argument("euclidean_line_barycentre: no measures");
    const int m = measures.front().grid_size();
    const double h = two_pi / m;
    const int n = oversample * m;
    // average quantile, then deposit mass back on the grid
    std::vector<double> q(n + 1, 0.0);
    for (const auto& mu : measures)
        for (int j = 0; j <= n; ++j) {
            double u = std::min(1.0, static_cast<double>(j) / n);
            q[j] += mu.quantile(u) / measures.size();
        }
    std::vector<double> mass(m, 0.0);
    for (int j = 0; j < n; ++j) {
        double a = q[j], b = q[j + 1];
        const double amount = 1.0 / n;
        if (b - a < 1e-15) {
            int i = std::min(static_cast<int>(wrap(0.5 * (a + b)) / h), m - 1);
            mass[i] += amount;
            continue;
        }
        const long ia = static_cast<long>(std::floor(a / h));
        const long ib = static_cast<long>(std::floor(b / h));
        for (long c = ia; c <= ib; ++c) {
            const double lo = std::max(a, c * h), hi = std::min(b, (c + 1) * h);
            if (hi <= lo) continue;
            mass[static_cast<int>(((c % m) + m) % m)] += amount * (hi - lo) / (b - a);
        }
    }
    std::vector<double> dens(m);
    for (int i = 0; i < m; ++i) dens[i] = mass[i] / h;
    return PeriodicMeasure::from_density_grid(dens);
}

}  // namespace otc
