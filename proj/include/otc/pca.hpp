// pca.hpp - log-convex PCA in spline coordinates: nested directions found by
// alternate minimization under unit-norm, orthogonality, mass-balance and
// monotonicity constraints, plus score projection, reconstruction, ANRE, and
// the unconstrained L2 baseline.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "otc/generate.hpp"
#include "otc/measure.hpp"
#include "otc/spline.hpp"
#include "otc/tangent.hpp"
#include "otc/transport.hpp"

namespace otc {

struct PCAOptions {
    int spline_size = 30;        // J
    int multi_starts = 5;
    int max_alternations = 500;
    double objective_tol = 1e-8;
    std::uint64_t seed = 0;
    bool strict_endpoint = false;  // additionally require |w(0)| < pi/2
};

struct PCAModel {
    std::shared_ptr<const SplineBasis> basis;
    PeriodicMeasure base_measure;              // tangent point
    Eigen::VectorXd a0;                        // spline coefficients of the base map
    std::vector<Eigen::VectorXd> directions;   // E-orthonormal, k of them
    Eigen::MatrixXd scores;                    // n x k

    int k() const { return static_cast<int>(directions.size()); }
};

struct PCAFitReport {
    std::vector<std::vector<double>> objective_trace;  // best start, per direction
    std::vector<double> final_objective;               // per direction
    int restarts = 0;
    bool converged = true;
    double max_constraint_residual = 0.0;
};

namespace pca_detail {

struct Workspace {
    int J;
    int m;
    Eigen::MatrixXd Lt;          // E = L L^T; Lt = L^T maps coefficients to y-space
    Eigen::MatrixXd Lt_inv_T;    // maps y back to coefficients: w = L^{-T} y
    std::vector<int> grid_first; // sparse basis rows at the m+1 boundaries
    std::vector<std::array<double, 3>> grid_vals;
    std::vector<char> support;   // boundary touches a cell with mass
};

inline Workspace make_workspace(const SplineBasis& basis, const PeriodicMeasure& mu) {
    Workspace ws;
    ws.J = basis.size();
    ws.m = mu.grid_size();
    const Eigen::MatrixXd L = basis.gram_llt().matrixL();
    ws.Lt = L.transpose();
    ws.Lt_inv_T = ws.Lt.inverse().eval();  // J is small
    const double h = two_pi / ws.m;
    ws.grid_first.resize(ws.m + 1);
    ws.grid_vals.resize(ws.m + 1);
    ws.support.resize(ws.m + 1);
    for (int i = 0; i <= ws.m; ++i) {
        double v[3];
        basis.eval(i * h, ws.grid_first[i], v);
        ws.grid_vals[i] = {v[0], v[1], v[2]};
        const bool left = i > 0 && mu.density()[i - 1] > 1e-12;
        const bool right = i < ws.m && mu.density()[i] > 1e-12;
        ws.support[i] = left || right;
    }
    return ws;
}

inline Eigen::VectorXd grid_values(const Workspace& ws, const Eigen::VectorXd& coef) {
    Eigen::VectorXd out(ws.m + 1);
    for (int i = 0; i <= ws.m; ++i) {
        const auto& v = ws.grid_vals[i];
        const int f = ws.grid_first[i];
        out[i] = v[0] * coef[f] + v[1] * coef[f + 1] + v[2] * coef[f + 2];
    }
    return out;
}

// Feasible interval for lambda such that base + lambda * w stays monotone in
// coefficients and within the displacement bound on the support.
inline void lambda_interval(const Workspace& ws, const Eigen::VectorXd& base_coef,
                            const Eigen::VectorXd& w_coef,
                            const Eigen::VectorXd& base_grid,
                            const Eigen::VectorXd& w_grid, double& lo, double& hi) {
    lo = -std::numeric_limits<double>::infinity();
    hi = std::numeric_limits<double>::infinity();
    auto tighten = [&](double c, double rhs) {
        // constraint c * lambda >= rhs
        if (c > 1e-14) lo = std::max(lo, rhs / c);
        else if (c < -1e-14) hi = std::min(hi, rhs / c);
        // c ~ 0: constraint does not involve lambda (rhs <= 0 holds at feasible base)
    };
    for (int j = 1; j < ws.J; ++j)
        tighten(w_coef[j] - w_coef[j - 1], -(base_coef[j] - base_coef[j - 1]));
    const double h = two_pi / ws.m;
    const double bound = pi - 1e-9;
    for (int i = 0; i <= ws.m; ++i) {
        if (!ws.support[i]) continue;
        const double d0 = base_grid[i] - i * h;
        // |d0 + lambda * w_grid[i]| <= bound
        tighten(w_grid[i], -bound - d0);
        tighten(-w_grid[i], d0 - bound);
    }
    if (lo > hi) { lo = hi = 0.5 * (lo + hi); }  // numerically empty; collapse
}

// Euclidean projection of a point onto the polytope {G x <= g} by Dykstra's
// alternating projections onto the halfspaces.
inline Eigen::VectorXd dykstra_project(const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
                                       Eigen::VectorXd x, int max_sweeps = 5000,
                                       double tol = 1e-12) {
    const int nc = static_cast<int>(G.rows());
    if (nc == 0) return x;
    Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(nc, x.size());
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double change = 0.0;
        for (int c = 0; c < nc; ++c) {
            Eigen::VectorXd z = x + corr.row(c).transpose();
            const double nrm2 = G.row(c).squaredNorm();
            double viol = G.row(c).dot(z) - g[c];
            Eigen::VectorXd xn = z;
            if (viol > 0.0 && nrm2 > 0.0) xn -= (viol / nrm2) * G.row(c).transpose();
            corr.row(c) = (z - xn).transpose();
            change += (xn - x).norm();
            x = xn;
        }
        if (change < tol) break;
    }
    return x;
}

}  // namespace pca_detail

// Unconstrained PCA in the E-metric of the centered coefficient vectors.
// Returns eigenvalues (nonincreasing) and the directions mapped back to
// coefficient space.
inline std::pair<Eigen::VectorXd, std::vector<Eigen::VectorXd>> naive_l2_pca(
    const std::vector<Eigen::VectorXd>& coefs, const SplineBasis& basis) {
    const int n = static_cast<int>(coefs.size());
    if (n < 1) throw std::invalid_argument("naive_l2_pca: empty dataset");
    const int J = basis.size();
    const Eigen::MatrixXd L = basis.gram_llt().matrixL();
    const Eigen::MatrixXd Lt = L.transpose();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(J);
    for (const auto& a : coefs) mean += a;
    mean /= n;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(J, J);
    for (const auto& a : coefs) {
        const Eigen::VectorXd y = Lt * (a - mean);
        C += y * y.transpose();
    }
    C /= n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    Eigen::VectorXd evals(J);
    std::vector<Eigen::VectorXd> dirs(J);
    const Eigen::MatrixXd Lt_inv = Lt.inverse();
    for (int i = 0; i < J; ++i) {
        evals[i] = std::max(0.0, es.eigenvalues()[J - 1 - i]);  // descending
        dirs[i] = Lt_inv * es.eigenvectors().col(J - 1 - i);
    }
    return {evals, dirs};
}

inline std::pair<PCAModel, PCAFitReport> fit_pca(
    const std::vector<PeriodicMeasure>& measures, const PeriodicMeasure& mu_bar,
    const std::optional<PeriodicMeasure>& mu0, int k, const PCAOptions& opts = {}) {
    using namespace pca_detail;
    const int n = static_cast<int>(measures.size());
    if (n < 2) throw std::invalid_argument("fit_pca: need at least 2 measures");
    if (k < 1) throw std::invalid_argument("fit_pca: need k >= 1");

    PCAModel model;
    model.basis = std::make_shared<SplineBasis>(opts.spline_size);
    model.base_measure = mu_bar;
    const SplineBasis& basis = *model.basis;
    const int J = basis.size();

    if (mu0) model.a0 = fit(basis, log_map(mu_bar, *mu0).map).coefficients;
    else model.a0 = basis.identity_coefficients();
    for (int j = 1; j < J; ++j)
        if (model.a0[j] < model.a0[j - 1] - 1e-9)
            throw std::runtime_error("fit_pca: base-point coefficients are not monotone");

    Workspace ws = make_workspace(basis, mu_bar);

    // data in y-space
    std::vector<Eigen::VectorXd> coefs(n);
    Eigen::MatrixXd Y(J, n);
    for (int i = 0; i < n; ++i) {
        coefs[i] = fit(basis, log_map(mu_bar, measures[i]).map).coefficients;
        Y.col(i) = ws.Lt * (coefs[i] - model.a0);
    }

    // fixed linear constraints in y-space: mass balance and the periodic endpoint
    Eigen::VectorXd end_c = Eigen::VectorXd::Zero(J);
    end_c[0] = -1.0;
    end_c[J - 1] = 1.0;
    std::vector<Eigen::VectorXd> constraint_normals = {
        ws.Lt_inv_T.transpose() * basis.mass(),  // L^{-1} M
        ws.Lt_inv_T.transpose() * end_c};

    PCAFitReport report;
    model.scores = Eigen::MatrixXd::Zero(n, k);
    std::mt19937_64 rng(opts.seed);

    Eigen::MatrixXd res = Y;  // residuals after previously fitted directions
    std::vector<Eigen::VectorXd> ydirs;

    for (int dir = 0; dir < k; ++dir) {
        // projection onto the admissible subspace (orthonormalized normals)
        std::vector<Eigen::VectorXd> normals = constraint_normals;
        for (const auto& yd : ydirs) normals.push_back(yd);
        std::vector<Eigen::VectorXd> onb;
        for (Eigen::VectorXd g : normals) {
            for (const auto& q : onb) g -= q.dot(g) * q;
            if (g.norm() > 1e-12) onb.push_back(g.normalized());
        }
        auto project = [&](Eigen::VectorXd y) {
            for (const auto& q : onb) y -= q.dot(y) * q;
            return y;
        };

        // base maps per datum (previous directions frozen)
        std::vector<Eigen::VectorXd> base_coef(n), base_grid(n);
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd bc = model.a0;
            for (int h = 0; h < dir; ++h) bc += model.scores(i, h) * model.directions[h];
            base_coef[i] = bc;
            base_grid[i] = grid_values(ws, bc);
        }

        // initial direction: top eigenvector of the residual covariance
        Eigen::MatrixXd C = res * res.transpose() / n;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
        Eigen::VectorXd top = es.eigenvectors().col(J - 1);

        double best_obj = std::numeric_limits<double>::infinity();
        Eigen::VectorXd best_y;
        Eigen::VectorXd best_lambda;
        std::vector<double> best_trace;

        for (int start = 0; start < opts.multi_starts; ++start) {
            Eigen::VectorXd y0;
            if (start == 0) y0 = top;
            else if (start == 1) y0 = -top;
            else {
                Eigen::VectorXd noise(J);
                for (int j = 0; j < J; ++j) noise[j] = uniform_draw(rng, -1.0, 1.0);
                y0 = (start < 4) ? (top + 0.3 * (start == 2 ? 1.0 : -1.0) * noise) : noise;
            }
            Eigen::VectorXd yw = project(y0);
            if (yw.norm() < 1e-12) {
                // constraints absorbed the start; fall back to any admissible unit vector
                for (int j = 0; j < J && yw.norm() < 1e-12; ++j)
                    yw = project(Eigen::VectorXd::Unit(J, j));
                if (yw.norm() < 1e-12) continue;
            }
            yw.normalize();

            Eigen::VectorXd w_coef = ws.Lt_inv_T * yw;
            Eigen::VectorXd w_grid = grid_values(ws, w_coef);
            Eigen::VectorXd lambda(n);
            std::vector<double> trace;

            auto lambda_step = [&]() {
                double obj = 0.0;
                for (int i = 0; i < n; ++i) {
                    double lo, hi;
                    lambda_interval(ws, base_coef[i], w_coef, base_grid[i], w_grid, lo, hi);
                    double l = res.col(i).dot(yw);
                    l = std::min(std::max(l, lo), hi);
                    lambda[i] = l;
                    obj += (res.col(i) - l * yw).squaredNorm();
                }
                return obj;
            };

            double obj = lambda_step();
            trace.push_back(obj);
            for (int it = 0; it < opts.max_alternations; ++it) {
                Eigen::VectorXd d = Eigen::VectorXd::Zero(J);
                for (int i = 0; i < n; ++i) d += lambda[i] * res.col(i);
                Eigen::VectorXd cand = project(d);
                if (cand.norm() < 1e-12) break;
                cand.normalize();
                // damped acceptance: the w-step ignores the monotonicity polytope,
                // so keep halving toward the candidate until the feasible
                // objective after the lambda re-step actually improves
                bool stepped = false;
                double rel = 0.0;
                const Eigen::VectorXd yw_old = yw;
                const Eigen::VectorXd lambda_old = lambda;
                for (double t = 1.0; t > 1e-3; t *= 0.5) {
                    Eigen::VectorXd trial = project((1.0 - t) * yw_old + t * cand);
                    if (trial.norm() < 1e-12) continue;
                    trial.normalize();
                    yw = trial;
                    w_coef = ws.Lt_inv_T * yw;
                    w_grid = grid_values(ws, w_coef);
                    const double trial_obj = lambda_step();
                    if (trial_obj <= obj + 1e-14 * (1.0 + obj)) {
                        rel = (obj - trial_obj) / (1.0 + obj);
                        obj = trial_obj;
                        trace.push_back(obj);
                        stepped = true;
                        break;
                    }
                }
                if (!stepped) {
                    yw = yw_old;
                    lambda = lambda_old;
                    w_coef = ws.Lt_inv_T * yw;
                    w_grid = grid_values(ws, w_coef);
                    break;
                }
                if (rel <= opts.objective_tol) break;
            }
            ++report.restarts;
            if (obj < best_obj) {
                best_obj = obj;
                best_y = yw;
                best_lambda = lambda;
                best_trace = trace;
            }
        }

        if (!best_y.size())
            throw std::runtime_error("fit_pca: no admissible direction found");

        // deterministic sign: largest-magnitude coefficient positive
        Eigen::VectorXd w = ws.Lt_inv_T * best_y;
        int arg = 0;
        for (int j = 1; j < J; ++j)
            if (std::fabs(w[j]) > std::fabs(w[arg])) arg = j;
        if (w[arg] < 0.0) { w = -w; best_y = -best_y; best_lambda = -best_lambda; }

        model.directions.push_back(w);
        ydirs.push_back(best_y);
        for (int i = 0; i < n; ++i) {
            model.scores(i, dir) = best_lambda[i];
            res.col(i) -= best_lambda[i] * best_y;
        }
        report.objective_trace.push_back(best_trace);
        report.final_objective.push_back(best_obj);
        if (!best_trace.empty() && best_trace.size() >= 2 &&
            best_trace.back() > best_trace.front() + 1e-12)
            report.converged = false;
    }

    // constraint residuals for the report
    for (int a = 0; a < k; ++a) {
        report.max_constraint_residual = std::max(
            report.max_constraint_residual,
            std::fabs(model.directions[a].dot(basis.mass())));
        for (int b = 0; b <= a; ++b) {
            const double ip = model.directions[a].dot(basis.gram() * model.directions[b]);
            const double want = (a == b) ? 1.0 : 0.0;
            report.max_constraint_residual =
                std::max(report.max_constraint_residual, std::fabs(ip - want));
        }
    }
    return {std::move(model), std::move(report)};
}

// Scores of an arbitrary measure: orthogonal projection in the E-metric onto
// the affine slice, constrained to monotone reconstructions.
inline Eigen::VectorXd scores(const PCAModel& model, const PeriodicMeasure& mu) {
    const SplineBasis& basis = *model.basis;
    const int J = basis.size();
    const int k = model.k();
    const Eigen::MatrixXd Lt = Eigen::MatrixXd(basis.gram_llt().matrixL()).transpose();
    const Eigen::VectorXd a_mu =
        fit(basis, log_map(model.base_measure, mu).map).coefficients;
    const Eigen::VectorXd y = Lt * (a_mu - model.a0);
    Eigen::VectorXd lambda(k);
    Eigen::MatrixXd Yw(Lt.rows(), k);
    for (int h = 0; h < k; ++h) Yw.col(h) = Lt * model.directions[h];
    for (int h = 0; h < k; ++h) lambda[h] = Yw.col(h).dot(y);  // orthonormal columns

    // monotonicity polytope: for each j, -(sum_h lambda_h dW_hj) <= dA0_j
    Eigen::MatrixXd G(J - 1, k);
    Eigen::VectorXd g(J - 1);
    for (int j = 1; j < J; ++j) {
        for (int h = 0; h < k; ++h)
            G(j - 1, h) = -(model.directions[h][j] - model.directions[h][j - 1]);
        g[j - 1] = model.a0[j] - model.a0[j - 1];
    }
    bool feasible = ((G * lambda - g).array() <= 1e-12).all();
    if (!feasible) lambda = pca_detail::dykstra_project(G, g, lambda);
    return lambda;
}

// exp of the reconstructed spline map a0 + sum lambda_h w_h, after re-centring
// integral drift.
inline PeriodicMeasure reconstruct(const PCAModel& model, const Eigen::VectorXd& lambda) {
    const SplineBasis& basis = *model.basis;
    const int J = basis.size();
    Eigen::VectorXd coef = model.a0;
    for (int h = 0; h < std::min<int>(model.k(), lambda.size()); ++h)
        coef += lambda[h] * model.directions[h];
    double worst = 0.0;
    for (int j = 1; j < J; ++j) worst = std::max(worst, coef[j - 1] - coef[j]);
    if (worst > 1e-9)
        throw std::invalid_argument("reconstruct: infeasible scores, max monotonicity violation " +
                                    std::to_string(worst));
    // re-centre: int (s(x) - x) dx = M . coef - 2 pi^2
    const double drift = basis.mass().dot(coef) - 2.0 * pi * pi;
    if (std::fabs(drift) > 1e-9) coef.array() -= drift / two_pi;
    SplineMap sm{&basis, coef, 0.0};
    TransportMap t = sm.sample(model.base_measure.grid_size());
    for (std::size_t i = 1; i < t.values.size(); ++i)  // absorb sub-1e-9 wiggle
        t.values[i] = std::max(t.values[i], t.values[i - 1]);
    return model.base_measure.pushforward_monotone(t);
}

// Average normalised reconstruction error using the first k directions and the
// stored training scores.
inline double anre(const PCAModel& model, const std::vector<PeriodicMeasure>& measures,
                   int k) {
    if (k > model.k()) throw std::invalid_argument("anre: k exceeds fitted directions");
    const int n = static_cast<int>(measures.size());
    if (n != model.scores.rows())
        throw std::invalid_argument("anre: measure count does not match stored scores");
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd lam = model.scores.row(i).head(k);
        const PeriodicMeasure rec = reconstruct(model, lam);
        const double num = theta_star(measures[i], rec).cost;
        const double den = theta_star(model.base_measure, measures[i]).cost;
        total += num / std::max(den, 1e-12);
    }
    return total / n;
}

}  // namespace otc
