// transport.hpp - optimal transport maps on S1 via the vertical quantile shift
// theta*, the Wasserstein distance, the map optimality verifier, and a discrete
// brute-force oracle for tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "otc/circle.hpp"
#include "otc/measure.hpp"

namespace otc {

// Cost curve theta -> C(theta) = int_0^1 (Qmu(u) - Qnu(u - theta))^2 du.
// Both quantiles are piecewise linear, so the integrand is piecewise quadratic;
// Simpson on the merged breakpoint intervals integrates it exactly.
class ThetaCostCurve {
  public:
    ThetaCostCurve(const PeriodicMeasure& mu, const PeriodicMeasure& nu)
        : mu_(&mu), nu_(&nu) {}

    double operator()(double theta) const {
        if (!std::isfinite(theta)) throw std::invalid_argument("cost_at: non-finite theta");
        std::vector<double> brk;
        brk.reserve(mu_->grid_size() + nu_->grid_size() + 2);
        brk.push_back(0.0);
        brk.push_back(1.0);
        for (double c : mu_->cumulative())
            if (c > 0.0 && c < 1.0) brk.push_back(c);
        for (double c : nu_->cumulative()) {
            double u = c + theta;
            u -= std::floor(u);
            if (u > 0.0 && u < 1.0) brk.push_back(u);
        }
        std::sort(brk.begin(), brk.end());
        double total = 0.0;
        auto g = [&](double u) {
            double d = mu_->quantile(u) - nu_->quantile(u - theta);
            return d * d;
        };
        // Two-point Gauss per interval: exact for the quadratic pieces and,
        // unlike Simpson, never samples a breakpoint where a quantile jumps.
        const double r = 0.5 / std::sqrt(3.0);
        for (std::size_t i = 1; i < brk.size(); ++i) {
            const double a = brk[i - 1], b = brk[i];
            if (b - a < 1e-15) continue;
            const double mid = 0.5 * (a + b), off = r * (b - a);
            total += 0.5 * (b - a) * (g(mid - off) + g(mid + off));
        }
        return total;
    }

    const PeriodicMeasure& source() const { return *mu_; }
    const PeriodicMeasure& target() const { return *nu_; }

  private:
    const PeriodicMeasure* mu_;
    const PeriodicMeasure* nu_;
};

inline double cost_at(const ThetaCostCurve& curve, double theta) { return curve(theta); }

namespace detail {

// Map x -> Qnu(Fmu(x) - theta), sampled at `refine` points per grid cell of
// mu. At the left edge of a support interval of mu the upper inverse of nu is
// taken, so the boundary value is the limit of the map from inside the support
// rather than the left end of a quantile jump. A refined sampling confines any
// quantile jump of nu to a subcell, which matters when the map is fed to a
// pushforward.
inline TransportMap shifted_map(const PeriodicMeasure& mu, const PeriodicMeasure& nu,
                                double theta, int refine = 1) {
    const int m = mu.grid_size();
    const int M = m * refine;
    const double H = two_pi / M;
    TransportMap t;
    t.values.resize(M + 1);
    double prev = 0.0;
    bool have_prev = false;
    for (int j = 0; j < M; ++j) {
        const int cell = j / refine;              // mu cell right of the boundary
        const bool interior = (j % refine) != 0;  // boundary interior to that cell
        const bool left = mu.density()[interior ? cell : (cell + m - 1) % m] > 1e-12;
        const bool right = mu.density()[cell] > 1e-12;
        double u = (interior ? mu.cdf(j * H) : mu.cumulative()[cell]) - theta;
        // theta is only resolved to the solver tolerance; an argument this
        // close to a whole period is ambiguous and the wrapped branch would
        // put a negligible-mass sliver a full turn away
        const bool whole = std::fabs(u - std::round(u)) < 1e-9;
        if (whole) u = std::round(u);
        double v;
        if (right && !left) {
            // left edge of a support run: limit of the map from inside, i.e.
            // across any quantile jump of nu
            v = nu.quantile_upper(u);
        } else if (whole && left) {
            // boundary sitting exactly at a quantile jump of nu: any value in
            // the jump bracket is admissible; carrying the previous boundary
            // value forward keeps the map monotone through the jump
            v = std::clamp(have_prev ? prev : j * H, nu.quantile_lower(u),
                           nu.quantile_upper(u));
        } else if (whole) {
            // density-gap boundary whose level is a whole period (a trailing
            // or leading gap of mu): take the limit from below, which is the
            // last support point of the current period rather than the start
            // of the next one
            v = nu.quantile_lower(u);
        } else {
            v = nu.quantile(u);
        }
        t.values[j] = prev = v;
        have_prev = true;
    }
    t.values[M] = t.values[0] + two_pi;
    return t;
}

// Trapezoid of T(x) - x over [0, 2*pi] on the boundary grid. This is the
// quantity re-checked by verify_otm.
inline double displacement_integral(const TransportMap& t) {
    const int m = t.grid_size();
    const double h = two_pi / m;
    double s = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double w = (i == 0 || i == m) ? 0.5 : 1.0;
        s += w * (t.values[i] - i * h);
    }
    return s * h;
}

}  // namespace detail

struct ThetaStarResult {
    double theta;
    TransportMap map;
    double cost;  // squared Wasserstein distance
};

// Solve for the optimal rotation via the subgradient condition of the convex
// cost curve: g(theta) = int_0^{2pi} (T_theta(x) - x) dx is nonincreasing in
// theta and 0 must lie between its one-sided values at the minimiser, because
// -2 g gives the one-sided derivatives of C. Bisection brackets the sign
// change; where the curve is kinked (density gaps) g jumps across zero there,
// and the pointwise convex blend of the two bracket maps - still monotone, and
// with an integral that is affine in the blend weight - zeroes the integral
// exactly. The blend moves only the O(theta_tol) mass that the bracket maps
// disagree on, so the cost is unaffected.
inline ThetaStarResult theta_star(const PeriodicMeasure& mu, const PeriodicMeasure& nu,
                                  double theta_tol = 1e-10, int map_refine = 1) {
    auto g = [&](double theta) {
        return detail::displacement_integral(detail::shifted_map(mu, nu, theta));
    };
    double a = -1.0, b = 1.0;
    double ga = g(a), gb = g(b);
    int expansions = 0;
    while (ga < 0.0 || gb > 0.0) {
        if (++expansions > 60)
            throw std::runtime_error("theta_star: bracketing failed (degenerate inputs)");
        const double w = b - a;
        if (ga < 0.0) { a -= w; ga = g(a); }
        else { b += w; gb = g(b); }
    }
    while (b - a > theta_tol) {
        const double mid = 0.5 * (a + b);
        if (g(mid) > 0.0) { a = mid; ga = g(mid); }
        else { b = mid; gb = g(mid); }
    }

    ThetaStarResult res;
    res.theta = b;
    res.map = detail::shifted_map(mu, nu, b, map_refine);
    const TransportMap upper = detail::shifted_map(mu, nu, a, map_refine);
    // The map is determined mu-a.e.; its Lebesgue integral is adjusted with
    // the version freedom where mu has little or no mass. Each grid point may
    // range between the two bracket maps - at a kink of the cost curve the
    // brackets sit on opposite sides of a quantile jump of nu, which is
    // exactly the freedom the integral condition needs. A support boundary
    // (massy cell on one side, negligible mass on the other) stays pinned at
    // the theta_hi values: touching it would drag real mass through the
    // interpolated pushforward, and the adjustment can happen on the gap side
    // instead. A point with mass on both sides is left free - there the
    // envelope only opens when the mass genuinely straddles a quantile jump
    // of nu, and the ramp across the cell is the correct discrete map. The
    // free points fill at the constant level c, capped by a circular
    // suffix-min of what lies ahead so the selection is monotone for every c;
    // the integral is nondecreasing in c and bisection zeroes it.
    {
        const int M = res.map.grid_size();
        const int refine = M / mu.grid_size();
        const int m = mu.grid_size();
        const double cell_h = two_pi / m;
        std::vector<double> lo(M), hi(M);
        for (int j = 0; j < M; ++j) {
            const int cell = j / refine;
            const bool interior = (j % refine) != 0;
            const bool massy_l =
                mu.density()[interior ? cell : (cell + m - 1) % m] * cell_h > 1e-4;
            const bool massy_r = mu.density()[cell] * cell_h > 1e-4;
            lo[j] = res.map.values[j];
            hi[j] = (massy_l != massy_r) ? lo[j] : std::max(lo[j], upper.values[j]);
        }
        std::vector<double> cap(2 * M);
        for (int k = 2 * M - 1; k >= 0; --k) {
            cap[k] = (k < M) ? hi[k] : hi[k - M] + two_pi;
            if (k + 1 < 2 * M) cap[k] = std::min(cap[k], cap[k + 1]);
        }
        for (int j = 0; j < M; ++j) hi[j] = std::max(lo[j], cap[j]);
        const double h = two_pi / M;
        auto fill = [&](double c, TransportMap& out) {
            double s = 0.0;
            for (int j = 0; j < M; ++j) {
                out.values[j] = std::clamp(c, lo[j], hi[j]);
                s += (j == 0 ? 0.5 : 1.0) * (out.values[j] - j * h);
            }
            out.values[M] = out.values[0] + two_pi;
            s += 0.5 * (out.values[M] - two_pi);
            return s * h;
        };
        double clo = lo[0], chi = hi[0];
        for (int j = 0; j < M; ++j) { clo = std::min(clo, lo[j]); chi = std::max(chi, hi[j]); }
        clo -= 1.0; chi += 1.0;
        if (fill(clo, res.map) < 0.0 && fill(chi, res.map) > 0.0) {
            for (int it = 0; it < 100; ++it) {
                const double mid = 0.5 * (clo + chi);
                if (fill(mid, res.map) < 0.0) clo = mid; else chi = mid;
            }
            // leave the map at whichever endpoint is closer to a zero integral
            if (std::fabs(fill(clo, res.map)) > std::fabs(fill(chi, res.map)))
                fill(chi, res.map);
        } else if (std::fabs(fill(clo, res.map)) > std::fabs(fill(chi, res.map))) {
            fill(chi, res.map);
        }
    }
    for (double v : res.map.values)
        if (!std::isfinite(v)) throw std::runtime_error("theta_star: non-finite quantiles");
    // The boundary conventions of the shifted map can leave sub-1e-9 dips at
    // the period wrap (the closing value is pinned to values[0] + 2*pi while
    // the last interior boundaries snap the other way). Clamp them away,
    // cyclically, so downstream monotonicity checks see a clean map.
    {
        auto& v = res.map.values;
        const std::size_t M = v.size() - 1;
        for (int pass = 0; pass < 8 && !res.map.is_nondecreasing(0.0); ++pass) {
            v[0] = std::max(v[0], v[M - 1] - two_pi);
            for (std::size_t j = 1; j < M; ++j) v[j] = std::max(v[j], v[j - 1]);
            v[M] = v[0] + two_pi;
        }
    }
    // The bisection locates the optimum only to the snap width of the shifted
    // map (~1e-9); at a kink the cost curve is V-shaped, so evaluating it
    // there would leave a W2 floor of ~1e-4 between near-identical gapped
    // measures. Polish with a golden-section pass over the ambiguity window.
    {
        const ThetaCostCurve curve(mu, nu);
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double lo = b - 4e-9, hi = b + 4e-9;
        double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        double f1 = curve(x1), f2 = curve(x2);
        while (hi - lo > 1e-14) {
            if (f1 <= f2) { hi = x2; x2 = x1; f2 = f1; x1 = hi - gr * (hi - lo); f1 = curve(x1); }
            else { lo = x1; x1 = x2; f1 = f2; x2 = lo + gr * (hi - lo); f2 = curve(x2); }
        }
        res.theta = 0.5 * (lo + hi);
        res.cost = curve(res.theta);
    }
    return res;
}

inline double wasserstein(const PeriodicMeasure& mu, const PeriodicMeasure& nu) {
    return std::sqrt(std::max(0.0, theta_star(mu, nu).cost));
}

struct OtmReport {
    bool monotone = false;
    bool displacement_ok = false;
    bool integral_ok = false;
    double monotone_slack = 0.0;      // most negative consecutive difference
    double displacement_margin = 0.0; // bound minus the largest |T(x) - x| on the support
    double integral_value = 0.0;      // trapezoid of T(x) - x over [0, 2*pi]
    bool pass() const { return monotone && displacement_ok && integral_ok; }
};

// Check the three conditions characterizing optimal maps: monotonicity,
// |T(x) - x| < bound mu-a.e., and the zero displacement integral. The bound is
// pi; strict mode callers may pass pi/2.
inline OtmReport verify_otm(const TransportMap& t, const PeriodicMeasure& mu,
                            double displacement_bound = pi) {
    OtmReport rep;
    const int M = t.grid_size();
    const int refine = M / mu.grid_size();
    const double h = two_pi / M;

    double min_diff = 0.0;
    for (int i = 1; i <= M; ++i)
        min_diff = std::min(min_diff, t.values[i] - t.values[i - 1]);
    rep.monotone_slack = min_diff;
    rep.monotone = min_diff >= -1e-10;

    double max_disp = 0.0;
    for (int i = 0; i <= M; ++i) {
        // boundary i belongs to the support if an adjacent cell carries mass
        const bool left = i > 0 && mu.density()[(i - 1) / refine] > 1e-12;
        const bool right = i < M && mu.density()[i / refine] > 1e-12;
        if (!left && !right) continue;
        max_disp = std::max(max_disp, std::fabs(t.values[i] - i * h));
    }
    rep.displacement_margin = displacement_bound - max_disp;
    rep.displacement_ok = max_disp < displacement_bound;

    rep.integral_value = detail::displacement_integral(t);
    rep.integral_ok = std::fabs(rep.integral_value) <= 1e-6 * two_pi * two_pi;
    return rep;
}

struct OracleResult {
    double cost = 0.0;                // sum of squared d_Z distances
    std::vector<int> assignment;      // assignment[i] = index into ys matched to xs[i]
};

// Brute-force W2 oracle for equal-size empirical measures. Sorts both sets and
// enumerates the n order-preserving cyclic shifts; for n <= 8 additionally runs
// an exhaustive permutation search, which must agree with the shift minimum.
inline OracleResult discrete_oracle(std::vector<double> xs, std::vector<double> ys) {
    const int n = static_cast<int>(xs.size());
    if (n < 1 || ys.size() != xs.size())
        throw std::invalid_argument("discrete_oracle: mismatched atom counts");
    std::vector<int> xi(n), yi(n);
    std::iota(xi.begin(), xi.end(), 0);
    std::iota(yi.begin(), yi.end(), 0);
    std::sort(xi.begin(), xi.end(), [&](int a, int b) { return xs[a] < xs[b]; });
    std::sort(yi.begin(), yi.end(), [&](int a, int b) { return ys[a] < ys[b]; });

    double best = std::numeric_limits<double>::infinity();
    int best_shift = 0;
    for (int s = 0; s < n; ++s) {
        double c = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = circle_dist(xs[xi[i]], ys[yi[(i + s) % n]]);
            c += d * d;
        }
        if (c < best) { best = c; best_shift = s; }
    }

    if (n <= 8) {
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best_perm = std::numeric_limits<double>::infinity();
        do {
            double c = 0.0;
            for (int i = 0; i < n; ++i) {
                const double d = circle_dist(xs[i], ys[perm[i]]);
                c += d * d;
            }
            best_perm = std::min(best_perm, c);
        } while (std::next_permutation(perm.begin(), perm.end()));
        if (std::fabs(best_perm - best) > 1e-9 * (1.0 + best))
            throw std::logic_error("discrete_oracle: shift and permutation searches disagree");
    }

    OracleResult res;
    res.cost = best;
    res.assignment.resize(n);
    for (int i = 0; i < n; ++i) res.assignment[xi[i]] = yi[(i + best_shift) % n];
    return res;
}

}  // namespace otc
