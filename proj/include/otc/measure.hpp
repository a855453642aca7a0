// measure.hpp - grid-based absolutely continuous probability measures on S1,
// with the periodic CDF extension F(x + 2*pi) = F(x) + 1 and its quantile inverse.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "otc/circle.hpp"

namespace otc {

inline constexpr int default_grid_size = 1024;

// Monotone map on [0, 2*pi] sampled at the m+1 cell boundaries, extended by
// T(x + 2*pi) = T(x) + 2*pi.
struct TransportMap {
    std::vector<double> values;  // size m+1

    int grid_size() const { return static_cast<int>(values.size()) - 1; }

    double operator()(double x) const {
        const int m = grid_size();
        const double h = two_pi / m;
        double k = std::floor(x / two_pi);
        double r = x - k * two_pi;
        int i = std::min(static_cast<int>(r / h), m - 1);
        double t = r / h - i;
        return values[i] + t * (values[i + 1] - values[i]) + k * two_pi;
    }

    bool is_nondecreasing(double slack = 1e-10) const {
        for (std::size_t i = 1; i < values.size(); ++i)
            if (values[i] < values[i - 1] - slack) return false;
        return true;
    }

    static TransportMap identity(int m) {
        TransportMap t;
        t.values.resize(m + 1);
        const double h = two_pi / m;
        for (int i = 0; i <= m; ++i) t.values[i] = i * h;
        return t;
    }
};

class PeriodicMeasure {
  public:
    PeriodicMeasure() = default;

    // density values on the m cell centers of the uniform partition of [0, 2*pi);
    // renormalized so the cell-weighted sum is 1.
    static PeriodicMeasure from_density_grid(const std::vector<double>& values) {
        const int m = static_cast<int>(values.size());
        if (m < 4) throw std::invalid_argument("from_density_grid: need at least 4 cells");
        double total = 0.0;
        for (double v : values) {
            if (!std::isfinite(v)) throw std::invalid_argument("from_density_grid: non-finite density");
            if (v < 0.0) throw std::invalid_argument("from_density_grid: negative density");
            total += v;
        }
        if (total <= 0.0) throw std::invalid_argument("from_density_grid: all-zero density");
        PeriodicMeasure mu;
        mu.density_.resize(m);
        mu.cumulative_.resize(m + 1);
        const double h = two_pi / m;
        const double scale = 1.0 / (total * h);
        mu.cumulative_[0] = 0.0;
        for (int i = 0; i < m; ++i) {
            mu.density_[i] = values[i] * scale;
            mu.cumulative_[i + 1] = mu.cumulative_[i] + mu.density_[i] * h;
        }
        mu.cumulative_[m] = 1.0;  // pin against accumulation drift
        // Keep the pin from tilting a trailing density gap: the cdf must be
        // exactly flat across zero-density cells or quantile lookups at level 1
        // land at the period end instead of the last support point.
        for (int i = m - 1; i >= 0 && mu.density_[i] == 0.0; --i)
            mu.cumulative_[i] = 1.0;
        return mu;
    }

    static PeriodicMeasure uniform(int m = default_grid_size) {
        return from_density_grid(std::vector<double>(m, 1.0));
    }

    // Kernel-smoothed empirical measure: wrapped Gaussian bumps at the atoms,
    // bandwidth given in grid cells.
    static PeriodicMeasure from_atoms(const std::vector<double>& angles,
                                      double bandwidth_cells = 2.0,
                                      int m = default_grid_size) {
        if (angles.empty()) throw std::invalid_argument("from_atoms: empty atom list");
        const double h = two_pi / m;
        const double sigma = bandwidth_cells * h;
        std::vector<double> dens(m, 0.0);
        for (double a : angles) {
            const double a0 = wrap(a);
            for (int i = 0; i < m; ++i) {
                const double x = (i + 0.5) * h;
                const double d = circle_dist(x, a0);
                dens[i] += std::exp(-0.5 * d * d / (sigma * sigma));
            }
        }
        return from_density_grid(dens);
    }

    int grid_size() const { return static_cast<int>(density_.size()); }
    double cell_width() const { return two_pi / grid_size(); }
    const std::vector<double>& density() const { return density_; }
    const std::vector<double>& cumulative() const { return cumulative_; }

    double mass_of_cell(int i) const { return density_[i] * cell_width(); }

    // F(x) with the rule F(x + 2*pi*k) = F(x) + k; piecewise linear between boundaries.
    double cdf(double x) const {
        const int m = grid_size();
        const double h = cell_width();
        double k = std::floor(x / two_pi);
        double r = x - k * two_pi;
        int i = std::min(static_cast<int>(r / h), m - 1);
        double t = r / h - i;
        return cumulative_[i] + t * (cumulative_[i + 1] - cumulative_[i]) + k;
    }

    // Generalized (right-continuous) inverse: smallest x with F(x) >= u,
    // extended by F^-(u + 1) = F^-(u) + 2*pi. On a flat CDF stretch this
    // returns the left endpoint of the stretch.
    double quantile(double u) const {
        double k = std::floor(u);
        double r = u - k;
        return quantile01(r) + k * two_pi;
    }

    // Upper generalized inverse: largest x with F(x) <= u. Differs from
    // quantile() only across flat CDF stretches, where it returns the right
    // endpoint. Needed where a transport map is evaluated at the left edge of
    // a support interval.
    double quantile_upper(double u) const {
        double k = std::floor(u);
        double r = u - k;
        return quantile01_upper(r) + k * two_pi;
    }

    // Left limit lim_{v -> u-} F^-(v). Same as quantile() except at whole
    // periods, which resolve into the period below instead of above. Used
    // where a transport map is evaluated at the right edge of a support
    // interval.
    double quantile_lower(double u) const {
        double k = std::ceil(u) - 1.0;
        double r = u - k;  // in (0, 1]
        return quantile01(r) + k * two_pi;
    }

    // Rotate the measure by alpha (pushforward under x -> x + alpha on S1).
    PeriodicMeasure rotated(double alpha) const {
        const int m = grid_size();
        const double h = cell_width();
        // shift density by alpha with linear interpolation between cells
        std::vector<double> dens(m);
        for (int i = 0; i < m; ++i) {
            double src = wrap((i + 0.5) * h - alpha);
            double pos = src / h - 0.5;
            double fl = std::floor(pos);
            int j0 = static_cast<int>(fl);
            double t = pos - fl;
            int a = ((j0 % m) + m) % m;
            int b = (a + 1) % m;
            dens[i] = (1.0 - t) * density_[a] + t * density_[b];
        }
        return from_density_grid(dens);
    }

    // Pushforward through a monotone periodic map. Mass is deposited cell by
    // cell on a common refinement of the measure grid and the map grid: the
    // density is constant and the map linear on every subinterval, so each
    // deposit spreads exactly the mass of its preimage over its image arc.
    // clean_dust removes cells whose deposited mass is below 1e-8. That is the
    // signature of a quantile jump interpolated across a subinterval smearing
    // slivers into an empty gap; iterative schemes need the exact gap structure
    // back. One-shot pushforwards of thin-tailed densities should keep those
    // cells, since there the sub-1e-8 mass is genuine.
    PeriodicMeasure pushforward_monotone(const TransportMap& map, int oversample = 4,
                                         bool clean_dust = false) const {
        if (!map.is_nondecreasing())
            throw std::invalid_argument("pushforward_monotone: map is not nondecreasing");
        const int m = grid_size();
        const double h = cell_width();
        const int mm = map.grid_size();
        long long steps = std::lcm(static_cast<long long>(m), static_cast<long long>(mm));
        const long long cap = 64LL * std::max(m, mm);
        if (steps > cap) steps = cap;  // incommensurate grids: bounded refinement
        const long long n = oversample * steps;
        const double step = two_pi / static_cast<double>(n);
        std::vector<double> mass(m, 0.0);
        double q_prev = map(0.0);
        double c_prev = 0.0;
        for (long long j = 1; j <= n; ++j) {
            const double x = static_cast<double>(j) * step;
            const double q = map(x);
            const double c = cdf(x);
            if (c > c_prev) deposit_arc(mass, q_prev, q, c - c_prev, m, h);
            q_prev = q;
            c_prev = c;
        }
        double kept = 0.0;
        for (int i = 0; i < m; ++i) {
            if (clean_dust && mass[i] < 1e-8) mass[i] = 0.0;
            kept += mass[i];
        }
        std::vector<double> dens(m);
        for (int i = 0; i < m; ++i) dens[i] = mass[i] / (h * kept);
        return from_density_grid(dens);
    }

    double total_mass() const {
        double s = 0.0;
        const double h = cell_width();
        for (double d : density_) s += d * h;
        return s;
    }

  private:
    double quantile01(double r) const {
        const int m = grid_size();
        const double h = cell_width();
        if (r <= 0.0) return 0.0;
        if (r >= 1.0) r = 1.0;
        // first boundary index j with cumulative_[j] >= r
        auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), r);
        int j = static_cast<int>(it - cumulative_.begin());
        if (j == 0) return 0.0;
        const double c0 = cumulative_[j - 1];
        const double c1 = cumulative_[j];
        if (c1 <= c0) return (j - 1) * h;  // flat stretch, left endpoint
        return (j - 1) * h + h * (r - c0) / (c1 - c0);
    }

    double quantile01_upper(double r) const {
        const int m = grid_size();
        const double h = cell_width();
        if (r >= 1.0) return two_pi;
        if (r < 0.0) r = 0.0;
        // last boundary index j with cumulative_[j] <= r
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
        int j = static_cast<int>(it - cumulative_.begin()) - 1;
        if (j < 0) return 0.0;
        if (j >= m) return two_pi;
        const double c0 = cumulative_[j];
        const double c1 = cumulative_[j + 1];
        if (r <= c0 || c1 <= c0) return j * h;
        return j * h + h * (r - c0) / (c1 - c0);
    }

    // Spread `amount` of mass uniformly over the (possibly wrapping) arc [a, b].
    static void deposit_arc(std::vector<double>& mass, double a, double b, double amount,
                            int m, double h) {
        if (b - a < 1e-15) {
            double p = wrap(0.5 * (a + b));
            int i = std::min(static_cast<int>(p / h), m - 1);
            mass[i] += amount;
            return;
        }
        const double len = b - a;
        long ia = static_cast<long>(std::floor(a / h));
        long ib = static_cast<long>(std::floor(b / h));
        for (long c = ia; c <= ib; ++c) {
            const double lo = std::max(a, c * h);
            const double hi = std::min(b, (c + 1) * h);
            if (hi <= lo) continue;
            int idx = static_cast<int>(((c % m) + m) % m);
            mass[idx] += amount * (hi - lo) / len;
        }
    }

    std::vector<double> density_;     // size m
    std::vector<double> cumulative_;  // size m+1, F at boundaries
};

}  // namespace otc
