// spline.hpp - quadratic B-spline basis on equispaced clamped knots of
// [0, 2*pi]: Gram matrix, mass vector, least-squares fitting of transport maps,
// and the monotone-coefficient characterization.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "otc/circle.hpp"
#include "otc/measure.hpp"

namespace otc {

class SplineBasis {
  public:
    static constexpr int degree = 2;

    explicit SplineBasis(int J) : J_(J) {
        if (J < 4) throw std::invalid_argument("SplineBasis: need J >= 4");
        // clamped knot vector: p+1 copies at each end, equispaced inside
        knots_.resize(J + degree + 1);
        const int intervals = J - degree;
        const double step = two_pi / intervals;
        for (int i = 0; i <= degree; ++i) knots_[i] = 0.0;
        for (int i = 1; i < intervals; ++i) knots_[degree + i] = i * step;
        for (int i = 0; i <= degree; ++i) knots_[J + i] = two_pi;
        assemble();
    }

    int size() const { return J_; }
    const std::vector<double>& knots() const { return knots_; }
    const Eigen::MatrixXd& gram() const { return E_; }
    const Eigen::VectorXd& mass() const { return M_; }
    const Eigen::LLT<Eigen::MatrixXd>& gram_llt() const { return llt_; }

    // Nonzero basis values at x: fills vals[0..2] for basis indices
    // first..first+2. x is clamped to [0, 2*pi].
    void eval(double x, int& first, double vals[3]) const {
        x = std::clamp(x, 0.0, two_pi);
        const int n = J_;  // span search over [t_p, t_n]
        int span = degree;
        while (span < n - 1 && x >= knots_[span + 1]) ++span;
        double left[3], right[3];
        vals[0] = 1.0;
        for (int j = 1; j <= degree; ++j) {
            left[j - 1] = x - knots_[span + 1 - j];
            right[j - 1] = knots_[span + j] - x;
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                const double tmp = vals[r] / (right[r] + left[j - 1 - r]);
                vals[r] = saved + right[r] * tmp;
                saved = left[j - 1 - r] * tmp;
            }
            vals[j] = saved;
        }
        first = span - degree;
    }

    double eval_sum(const Eigen::VectorXd& coef, double x) const {
        // extension rule s(x + 2*pi*k) = s(x) + 2*pi*k requires the endpoint
        // relation coef[J-1] = coef[0] + 2*pi; callers fitting maps enforce it.
        const double k = std::floor(x / two_pi);
        const double r = x - k * two_pi;
        int first;
        double v[3];
        eval(r, first, v);
        double s = 0.0;
        for (int i = 0; i < 3; ++i) s += v[i] * coef[first + i];
        return s + k * two_pi;
    }

    // Greville abscissae: coefficients representing the identity function.
    Eigen::VectorXd identity_coefficients() const {
        Eigen::VectorXd a(J_);
        for (int j = 0; j < J_; ++j) a[j] = 0.5 * (knots_[j + 1] + knots_[j + 2]);
        return a;
    }

  private:
    void assemble() {
        // 3-point Gauss per knot interval, exact for the degree-4 integrands
        static const double gx[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
        static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        E_ = Eigen::MatrixXd::Zero(J_, J_);
        M_ = Eigen::VectorXd::Zero(J_);
        for (int iv = degree; iv < J_; ++iv) {
            const double a = knots_[iv], b = knots_[iv + 1];
            if (b <= a) continue;
            for (int g = 0; g < 3; ++g) {
                const double x = 0.5 * (a + b) + 0.5 * (b - a) * gx[g];
                const double w = 0.5 * (b - a) * gw[g];
                int first;
                double v[3];
                eval(x, first, v);
                for (int i = 0; i < 3; ++i) {
                    M_[first + i] += w * v[i];
                    for (int j = 0; j < 3; ++j)
                        E_(first + i, first + j) += w * v[i] * v[j];
                }
            }
        }
        llt_.compute(E_);
        if (llt_.info() != Eigen::Success)
            throw std::runtime_error("SplineBasis: Gram matrix not positive definite");
    }

    int J_;
    std::vector<double> knots_;
    Eigen::MatrixXd E_;
    Eigen::VectorXd M_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

struct SplineMap {
    const SplineBasis* basis = nullptr;
    Eigen::VectorXd coefficients;
    double fit_residual_sup = 0.0;

    double operator()(double x) const { return basis->eval_sum(coefficients, x); }

    TransportMap sample(int m) const {
        TransportMap t;
        t.values.resize(m + 1);
        const double h = two_pi / m;
        for (int i = 0; i <= m; ++i) t.values[i] = (*this)(i * h);
        return t;
    }
};

inline bool is_monotone(const SplineMap& map, double tol = 1e-12) {
    for (int j = 1; j < map.coefficients.size(); ++j)
        if (map.coefficients[j] < map.coefficients[j - 1] - tol) return false;
    return true;
}

namespace detail {

// Nearest nondecreasing coefficient vector in the E-norm, by merging adjacent
// violating blocks and re-solving the grouped generalized least squares.
inline Eigen::VectorXd isotonic_project_E(const SplineBasis& basis, const Eigen::VectorXd& a) {
    const int J = basis.size();
    std::vector<int> block(J);  // block id per coefficient, nondecreasing
    for (int j = 0; j < J; ++j) block[j] = j;
    const Eigen::MatrixXd& E = basis.gram();
    for (int pass = 0; pass < J; ++pass) {
        // grouped solve: a = G b with G the block indicator matrix
        const int nb = block[J - 1] + 1;
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(J, nb);
        for (int j = 0; j < J; ++j) G(j, block[j]) = 1.0;
        const Eigen::MatrixXd Q = G.transpose() * E * G;
        const Eigen::VectorXd rhs = G.transpose() * E * a;
        const Eigen::VectorXd b = Q.ldlt().solve(rhs);
        bool ok = true;
        for (int i = 1; i < nb; ++i)
            if (b[i] < b[i - 1]) { ok = false; break; }
        if (ok) return G * b;
        // merge every adjacent violating block pair
        std::vector<int> remap(nb);
        remap[0] = 0;
        for (int i = 1; i < nb; ++i)
            remap[i] = (b[i] < b[i - 1]) ? remap[i - 1] : remap[i - 1] + 1;
        for (int j = 0; j < J; ++j) block[j] = remap[block[j]];
    }
    return a;  // unreachable for finite J
}

}  // namespace detail

// Least-squares fit of a transport map on the boundary grid, with the endpoint
// relation coef[J-1] = coef[0] + 2*pi eliminated. If the input map is
// nondecreasing but the fitted coefficients are not, they are projected onto
// the nondecreasing cone in the E-norm.
inline SplineMap fit(const SplineBasis& basis, const TransportMap& t) {
    const int J = basis.size();
    const int m = t.grid_size();
    const double h = two_pi / m;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m + 1, J);
    Eigen::VectorXd y(m + 1);
    for (int i = 0; i <= m; ++i) {
        int first;
        double v[3];
        basis.eval(i * h, first, v);
        for (int k = 0; k < 3; ++k) B(i, first + k) = v[k];
        y[i] = t.values[i];
    }
    // substitute a[J-1] = a[0] + 2*pi
    Eigen::MatrixXd Br(m + 1, J - 1);
    Br.col(0) = B.col(0) + B.col(J - 1);
    for (int j = 1; j < J - 1; ++j) Br.col(j) = B.col(j);
    const Eigen::VectorXd yr = y - two_pi * B.col(J - 1);
    const Eigen::VectorXd ar = (Br.transpose() * Br).ldlt().solve(Br.transpose() * yr);

    SplineMap map;
    map.basis = &basis;
    map.coefficients.resize(J);
    map.coefficients[0] = ar[0];
    for (int j = 1; j < J - 1; ++j) map.coefficients[j] = ar[j];
    map.coefficients[J - 1] = ar[0] + two_pi;

    if (t.is_nondecreasing()) {
        double worst = 0.0;
        for (int j = 1; j < J; ++j)
            worst = std::max(worst, map.coefficients[j - 1] - map.coefficients[j]);
        if (worst > 1e-9)
            map.coefficients = detail::isotonic_project_E(basis, map.coefficients);
    }
    for (int i = 0; i <= m; ++i)
        map.fit_residual_sup = std::max(map.fit_residual_sup,
                                        std::fabs(map(i * h) - t.values[i]));
    return map;
}

inline double evaluate(const SplineMap& map, double x) { return map(x); }

}  // namespace otc
