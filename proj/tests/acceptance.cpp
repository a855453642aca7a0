// acceptance.cpp - end-to-end checks of the library against its stated
// guarantees. Each criterion prints exactly one pass/fail line; the process
// exits nonzero if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "otc/barycentre.hpp"
#include "otc/circle.hpp"
#include "otc/cli.hpp"
#include "otc/cluster.hpp"
#include "otc/generate.hpp"
#include "otc/io.hpp"
#include "otc/measure.hpp"
#include "otc/pca.hpp"
#include "otc/tangent.hpp"
#include "otc/transport.hpp"

using namespace otc;

namespace {

int failures = 0;

void report(int idx, const char* name, bool ok, const std::string& detail) {
    std::printf("criterion %2d %-28s %s  (%s)\n", idx, name, ok ? "PASS" : "FAIL",
                detail.c_str());
    if (!ok) ++failures;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    return buf;
}

// Exhaustive cyclic-shift W2 between two equal-size sorted atom lists on the
// circle: the optimal monotone coupling matches atom i to atom (i+k) mod n for
// some shift k, with the wrapped atoms unrolled by one period.
double atom_shift_oracle(std::vector<double> a, std::vector<double> b) {
    const int n = static_cast<int>(a.size());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
        for (int off = -1; off <= 1; ++off) {
            double cost = 0.0;
            for (int i = 0; i < n; ++i) {
                const int j = (i + k) % n;
                const double target = b[j] + two_pi * (off + (i + k >= n ? 1 : 0));
                const double d = target - a[i];
                cost += d * d;
            }
            best = std::min(best, cost / n);
        }
    }
    return std::sqrt(best);
}

// Count the modes of a density with hysteresis: a new mode is registered on
// every upward crossing of 0.5*max after the density has dipped below 0.2*max,
// scanning circularly from a global minimum.
int mode_count(const PeriodicMeasure& mu) {
    const auto& d = mu.density();
    const int m = static_cast<int>(d.size());
    double dmax = 0.0;
    int start = 0;
    for (int i = 0; i < m; ++i) {
        dmax = std::max(dmax, d[i]);
        if (d[i] < d[start]) start = i;
    }
    const double hi = 0.5 * dmax, lo = 0.2 * dmax;
    bool armed = true;
    int modes = 0;
    for (int s = 0; s <= m; ++s) {
        const double v = d[(start + s) % m];
        if (armed && v > hi) { ++modes; armed = false; }
        if (!armed && v < lo) armed = true;
    }
    return modes;
}

double sum_sq_cost(const PeriodicMeasure& bary, const std::vector<PeriodicMeasure>& data) {
    double s = 0.0;
    for (const auto& mu : data) s += theta_star(bary, mu).cost;
    return s;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;

    // ---- criteria 1 and 2: oracle equivalence and integral optimality ----
    {
        const auto t0 = clock::now();
        const int m = 1024;
        std::mt19937_64 rng(42);
        double worst_rel = 0.0;
        double worst_integral = 0.0;
        for (int pair = 0; pair < 50; ++pair) {
            std::vector<double> a(64), b(64);
            for (double& v : a) v = uniform_draw(rng, 0.0, two_pi);
            for (double& v : b) v = uniform_draw(rng, 0.0, two_pi);
            const auto mu = PeriodicMeasure::from_atoms(a, 1.0, m);
            const auto nu = PeriodicMeasure::from_atoms(b, 1.0, m);
            const auto sol = theta_star(mu, nu);
            const double w2 = std::sqrt(std::max(0.0, sol.cost));
            const double oracle = atom_shift_oracle(a, b);
            worst_rel = std::max(worst_rel, std::fabs(w2 - oracle) / oracle);
            worst_integral =
                std::max(worst_integral, std::fabs(detail::displacement_integral(sol.map)));
        }
        const double secs = std::chrono::duration<double>(clock::now() - t0).count();
        report(1, "oracle equivalence", worst_rel <= 0.01 && secs < 30.0,
               "worst rel err " + fmt(worst_rel) + ", " + fmt(secs) + " s");

        // criterion 2 also covers the gapped closed-form maps of criteria 3-4
        const auto arc_map = theta_star(uniform_arc(0.5, 1.0), uniform_arc(1.5, 1.0)).map;
        const auto anti_map =
            theta_star(uniform_arc(0.0, 0.02), uniform_arc(pi, 0.02)).map;
        worst_integral = std::max(
            {worst_integral, std::fabs(detail::displacement_integral(arc_map)),
             std::fabs(detail::displacement_integral(anti_map))});
        const double integral_tol = 1e-6 * two_pi * two_pi;
        report(2, "integral optimality", worst_integral <= integral_tol,
               "worst |integral| " + fmt(worst_integral) + " vs tol " + fmt(integral_tol));
    }

    // ---- criterion 3: rotation of an arc ----
    {
        const auto mu = uniform_arc(0.5, 1.0);
        const auto nu = uniform_arc(1.5, 1.0);
        const auto sol = theta_star(mu, nu);
        const double w2 = std::sqrt(std::max(0.0, sol.cost));
        const int M = sol.map.grid_size();
        const int refine = M / mu.grid_size();
        const double h = two_pi / M;
        double worst_disp = 0.0;
        for (int i = 1; i < M; ++i) {
            // interior support boundaries only: both adjacent cells carry mass
            if (mu.density()[(i - 1) / refine] <= 1e-12 ||
                mu.density()[i / refine] <= 1e-12)
                continue;
            worst_disp = std::max(worst_disp, std::fabs(sol.map.values[i] - i * h - 1.0));
        }
        report(3, "rotation case", std::fabs(w2 - 1.0) <= 1e-3 && worst_disp <= 1e-3,
               "W2 " + fmt(w2) + ", max |disp-1| " + fmt(worst_disp));
    }

    // ---- criterion 4: antipodal near-point-masses ----
    {
        const double w2 = wasserstein(uniform_arc(0.0, 0.02), uniform_arc(pi, 0.02));
        report(4, "antipodal case", std::fabs(w2 - pi) <= 0.02, "W2 " + fmt(w2));
    }

    // ---- criterion 5: McCann midpoint and the two-bump configuration ----
    {
        const int m = 512;
        const auto mu = uniform_arc(0.5, 1.0, false, m);
        const auto nu = uniform_arc(1.5, 1.0, false, m);
        const auto res = procrustes_barycentre({mu, nu});
        // McCann midpoint: pushforward of mu through (Id + T)/2
        const auto sol = theta_star(mu, nu);
        TransportMap mid = sol.map;
        const double h = two_pi / mid.grid_size();
        for (std::size_t i = 0; i < mid.values.size(); ++i)
            mid.values[i] = 0.5 * (mid.values[i] + i * h);
        const auto mccann = mu.pushforward_monotone(mid);
        const double d_mid = wasserstein(res.barycentre, mccann);

        // two Gaussian bumps at fractions 0.2 and 0.7 (antipodal), scale 0.4 rad
        auto bump = [&](double frac) {
            std::vector<double> dens(m);
            for (int i = 0; i < m; ++i) {
                const double x = (i + 0.5) * two_pi / m;
                const double d = circle_dist(x, frac * two_pi);
                dens[i] = std::exp(-0.5 * d * d / (0.4 * 0.4));
            }
            return PeriodicMeasure::from_density_grid(dens);
        };
        const std::vector<PeriodicMeasure> bumps = {bump(0.2), bump(0.7)};
        const auto circ = procrustes_barycentre(bumps);
        const auto line = euclidean_line_barycentre(bumps);
        const double cost_circ = sum_sq_cost(circ.barycentre, bumps);
        const double cost_line = sum_sq_cost(line, bumps);
        const double saving = 1.0 - cost_circ / cost_line;
        const bool bimodal = mode_count(circ.barycentre) == 2;
        report(5, "barycentre midpoint", d_mid <= 1e-3 && saving >= 0.25 && bimodal,
               "midpoint W2 " + fmt(d_mid) + ", saving " + fmt(saving) + ", modes " +
                   std::to_string(mode_count(circ.barycentre)));
    }

    // ---- criterion 6: certificate behaviour on the three simulations ----
    std::vector<std::vector<PeriodicMeasure>> sims;
    std::vector<BarycentreResult> sim_res;
    {
        const int m = 512;
        sims = {simulation_two_arcs(m), simulation_three_arcs(m), simulation_beta(0, m)};
        for (const auto& data : sims) sim_res.push_back(procrustes_barycentre(data));
        const double g1 = sim_res[0].certificate.max_rel_gap;
        const double g2 = sim_res[1].certificate.max_rel_gap;
        const double g3 = sim_res[2].certificate.max_rel_gap;
        const bool ok = sim_res[0].certificate.pass && !sim_res[1].certificate.pass &&
                        g2 > 1e-2 && sim_res[2].certificate.pass;
        report(6, "certificate behaviour", ok,
               "gaps " + fmt(g1) + " / " + fmt(g2) + " / " + fmt(g3));
    }

    // ---- criterion 7: bimodal barycentre from unimodal Beta inputs ----
    {
        const int modes = mode_count(sim_res[2].barycentre);
        int unimodal_inputs = 0;
        for (const auto& mu : sims[2])
            if (mode_count(mu) == 1) ++unimodal_inputs;
        report(7, "bimodal from unimodal",
               modes == 2 && unimodal_inputs == static_cast<int>(sims[2].size()),
               "barycentre modes " + std::to_string(modes) + ", unimodal inputs " +
                   std::to_string(unimodal_inputs) + "/" + std::to_string(sims[2].size()));
    }

    // ---- criterion 8: PCA structure ----
    std::vector<PeriodicMeasure> rot_family;
    PCAModel rot_model;
    {
        const int m = 256;
        for (int i = 0; i < 12; ++i)
            rot_family.push_back(uniform_arc(0.3 + 0.25 * i / 11.0, 0.08, true, m));
        const auto bary = procrustes_barycentre(rot_family);
        PCAOptions opts;
        opts.seed = 1;
        auto [model1, report1] = fit_pca(rot_family, bary.barycentre, std::nullopt, 1, opts);
        rot_model = model1;
        const double anre_rot = anre(model1, rot_family, 1);

        // E-orthonormality and nonincreasing ANRE on a k=3 fit of a second family
        const auto vm_data = von_mises_dataset(8, 0.8, 1.5, 7, m);
        const auto vm_bary = procrustes_barycentre(vm_data);
        auto [model3, report3] = fit_pca(vm_data, vm_bary.barycentre, std::nullopt, 3, opts);
        double ortho = 0.0;
        for (int a = 0; a < model3.k(); ++a)
            for (int b = 0; b <= a; ++b) {
                const double ip =
                    model3.directions[a].dot(model3.basis->gram() * model3.directions[b]);
                ortho = std::max(ortho, std::fabs(ip - (a == b ? 1.0 : 0.0)));
            }
        for (int a = 0; a < model1.k(); ++a)
            for (int b = 0; b <= a; ++b) {
                const double ip =
                    model1.directions[a].dot(model1.basis->gram() * model1.directions[b]);
                ortho = std::max(ortho, std::fabs(ip - (a == b ? 1.0 : 0.0)));
            }
        bool nonincreasing = true;
        double prev = std::numeric_limits<double>::infinity();
        std::string curve;
        for (int k = 1; k <= model3.k(); ++k) {
            const double v = anre(model3, vm_data, k);
            if (v > prev + 1e-9) nonincreasing = false;
            prev = v;
            curve += (k > 1 ? "," : "") + fmt(v);
        }
        report(8, "pca structure",
               ortho <= 1e-8 && nonincreasing && anre_rot <= 0.01,
               "ortho " + fmt(ortho) + ", rotation anre " + fmt(anre_rot) + ", curve " + curve);
    }

    // ---- criterion 9: round trips ----
    {
        const int m = 1024;
        const double two_cells = 2.0 * two_pi / m;
        const auto base = von_mises(1.0, m);
        const std::vector<PeriodicMeasure> targets = {
            uniform_arc(0.25, 0.2, true, m), von_mises(1.3, m), periodic_beta(2.0, m),
            trunc_gauss(pi, 0.5, m)};
        double worst = 0.0;
        for (const auto& nu : targets) {
            const auto rt = exp_map(base, log_map(base, nu));
            worst = std::max(worst, wasserstein(rt, nu));
        }
        // scores o reconstruct o scores idempotent on the rotation-family model
        double worst_idem = 0.0;
        for (int i = 0; i < rot_model.scores.rows(); ++i) {
            const Eigen::VectorXd lam1 = scores(rot_model, reconstruct(rot_model, rot_model.scores.row(i)));
            const Eigen::VectorXd lam2 = scores(rot_model, reconstruct(rot_model, lam1));
            worst_idem = std::max(worst_idem, (lam2 - lam1).cwiseAbs().maxCoeff());
        }
        report(9, "round trips", worst <= two_cells && worst_idem <= 1e-6,
               "exp-log W2 " + fmt(worst) + " vs " + fmt(two_cells) + ", idempotence " +
                   fmt(worst_idem));
    }

    // ---- criterion 10: tangent distances dominate Wasserstein ----
    {
        double worst = -std::numeric_limits<double>::infinity();
        bool ok = true;
        for (std::size_t s = 0; s < sims.size(); ++s) {
            const auto& data = sims[s];
            const double eps_grid = 2.0 * two_pi / data.front().grid_size();
            const auto dlog = log_distance_matrix(sim_res[s].barycentre, data);
            for (std::size_t i = 0; i < data.size(); ++i)
                for (std::size_t j = i + 1; j < data.size(); ++j) {
                    const double w = wasserstein(data[i], data[j]);
                    const double slack = w - eps_grid - dlog[i][j];
                    worst = std::max(worst, slack);
                    if (slack > 0.0) ok = false;
                }
        }
        report(10, "tangent domination", ok, "worst violation " + fmt(worst));
    }

    // ---- criterion 11: continuity of the log map along a geodesic ----
    {
        const int m = 1024;
        const auto base = von_mises(1.0, m);
        const auto V = log_map(base, trunc_gauss(2.5, 0.25, m));
        double prev = std::numeric_limits<double>::infinity();
        bool decreasing = true;
        std::string curve;
        for (const double t : {0.5, 0.25, 0.1, 0.05}) {
            const auto nt = exp_map(base, V, t);
            const auto back = log_map(base, nt);
            const auto scaled = V.scaled(t);
            const double err = tangent_distance(base, back, scaled);
            if (err >= prev) decreasing = false;
            prev = err;
            curve += (curve.empty() ? "" : ",") + fmt(err);
        }
        report(11, "continuity probe", decreasing, "errors " + curve);
    }

    // ---- criterion 12: bit-identical outputs under identical seeds ----
    {
        namespace fs = std::filesystem;
        bool identical = true;
        std::string what = "ok";
        const fs::path root = fs::temp_directory_path() / "otc_acceptance";
        fs::remove_all(root);
        for (const char* runname : {"r1", "r2"}) {
            const fs::path dir = root / runname;
            fs::create_directories(dir);
            std::ostringstream sink;
            std::vector<std::string> sim_args = {"simulate", "beta",      "--seed", "3",
                                                 "--grid",   "256",       "-o",     dir.string()};
            if (cli::run(sim_args, sink, sink) != 0) { identical = false; what = "simulate failed"; }
            std::vector<std::string> pca_args = {
                "pca",    (dir / "beta.csv").string(), "--grid", "256", "-k", "2",
                "--seed", "3",  "-o", dir.string()};
            if (cli::run(pca_args, sink, sink) != 0) { identical = false; what = "pca failed"; }
        }
        for (const char* f :
             {"beta.csv", "model.json", "scores.csv", "result.json"}) {
            if (slurp(root / "r1" / f) != slurp(root / "r2" / f) ||
                slurp(root / "r1" / f).empty()) {
                identical = false;
                what = std::string("mismatch in ") + f;
            }
        }
        report(12, "determinism", identical, what);
    }

    if (failures) std::printf("%d criterion(s) failed\n", failures);
    else std::printf("all criteria passed\n");
    return failures ? 1 : 0;
}
