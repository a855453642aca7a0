// cli.hpp - command-line front end. Every subcommand is thin wiring around the
// core headers; run() is callable in-process so integration tests can compare
// repeated runs byte for byte.
#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "otc/barycentre.hpp"
#include "otc/cluster.hpp"
#include "otc/generate.hpp"
#include "otc/io.hpp"
#include "otc/pca.hpp"
#include "otc/transport.hpp"

namespace otc::cli {

namespace fs = std::filesystem;

struct RunConfig {
    int grid_size = default_grid_size;
    int spline_size = 30;
    int k = 2;
    double eps = 1e-4;
    int max_iter = 200;
    double certificate_tol = 1e-2;
    std::uint64_t seed = 0;
    int threads = 1;
    bool fractions = false;
    std::string out_dir = ".";
    std::string config_file;
};

namespace detail {

inline void apply_config_file(RunConfig& cfg, CLI::App& app) {
    // key=value lines; flags given on the command line win.
    if (cfg.config_file.empty()) return;
    std::ifstream in(cfg.config_file);
    if (!in) throw std::invalid_argument("cannot open config file " + cfg.config_file);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line without '=': " + line);
        const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        auto set = [&](const std::string& name, auto& field) {
            if (key != name) return false;
            if (app.count("--" + name) == 0) {
                std::stringstream ss(val);
                ss >> field;
                if (ss.fail()) throw std::invalid_argument("bad config value for " + key);
            }
            return true;
        };
        if (!(set("grid", cfg.grid_size) || set("spline-size", cfg.spline_size) ||
              set("k", cfg.k) || set("eps", cfg.eps) || set("max-iter", cfg.max_iter) ||
              set("certificate-tol", cfg.certificate_tol) || set("seed", cfg.seed) ||
              set("threads", cfg.threads)))
            throw std::invalid_argument("unknown config key " + key);
    }
}

inline json config_echo(const RunConfig& cfg, const std::string& command) {
    return json{{"command", command},
                {"grid_size", cfg.grid_size},
                {"spline_size", cfg.spline_size},
                {"k", cfg.k},
                {"eps", cfg.eps},
                {"max_iter", cfg.max_iter},
                {"certificate_tol", cfg.certificate_tol},
                {"seed", cfg.seed},
                {"threads", cfg.threads},
                {"fractions", cfg.fractions},
                {"version", "1.0.0"}};
}

inline void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

inline std::vector<PeriodicMeasure> load_all(const std::vector<std::string>& paths,
                                             const RunConfig& cfg) {
    std::vector<PeriodicMeasure> all;
    for (const auto& p : paths) {
        auto part = read_measures_csv(p, cfg.fractions, cfg.grid_size);
        all.insert(all.end(), part.begin(), part.end());
    }
    if (all.empty()) throw std::invalid_argument("no measures loaded");
    return all;
}

inline TransportMap map_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open map file " + path);
    json j = json::parse(in);
    TransportMap t{j.at("values").get<std::vector<double>>()};
    if (t.values.size() < 5) throw std::invalid_argument("map too short in " + path);
    return t;
}

// minimal self-contained SVG of densities over the unrolled angle axis
inline void write_density_svg(const fs::path& path,
                              const std::vector<PeriodicMeasure>& measures) {
    const int W = 640, H = 360, pad = 30;
    double ymax = 0;
    for (const auto& mu : measures)
        for (double v : mu.density()) ymax = std::max(ymax, v);
    if (ymax <= 0) ymax = 1;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
        << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};
    for (std::size_t s = 0; s < measures.size(); ++s) {
        const auto& d = measures[s].density();
        out << "<polyline fill='none' stroke='" << colours[s % 6] << "' points='";
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double x = pad + (W - 2.0 * pad) * i / (d.size() - 1);
            const double y = H - pad - (H - 2.0 * pad) * d[i] / ymax;
            out << x << "," << y << " ";
        }
        out << "'/>\n";
    }
    out << "<line x1='" << pad << "' y1='" << H - pad << "' x2='" << W - pad << "' y2='"
        << H - pad << "' stroke='black'/>\n</svg>\n";
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"optimal transport on the circle: distances, barycentres, PCA, clustering"};
    app.require_subcommand(1);

    RunConfig cfg;
    app.add_option("--grid", cfg.grid_size, "density grid size")->capture_default_str();
    app.add_option("--spline-size", cfg.spline_size, "spline coefficient count");
    app.add_option("-k,--components", cfg.k, "number of components / clusters");
    app.add_option("--eps", cfg.eps, "barycentre stopping tolerance");
    app.add_option("--max-iter", cfg.max_iter, "barycentre iteration cap");
    app.add_option("--certificate-tol", cfg.certificate_tol, "certificate relative tolerance");
    app.add_option("--seed", cfg.seed, "random seed");
    app.add_option("--threads", cfg.threads, "worker threads (core is sequential)");
    app.add_flag("--fractions", cfg.fractions, "angles are fractions of the circle");
    app.add_option("-o,--out", cfg.out_dir, "output directory");
    app.add_option("--config", cfg.config_file, "key=value config file (flags win)");

    std::vector<std::string> inputs;
    std::string model_path, map_path, base_path, lambda_str, family = "beta";
    int count = 20;
    bool svg = false;
    app.add_flag("--svg", svg, "also write an SVG density plot");

    auto* c_distance = app.add_subcommand("distance", "W2 distance and rotation between two measures");
    c_distance->add_option("inputs", inputs, "two CSV files")->required();
    auto* c_otm = app.add_subcommand("otm", "optimal transport map between two measures");
    c_otm->add_option("inputs", inputs, "two CSV files")->required();
    auto* c_bary = app.add_subcommand("barycentre", "Wasserstein barycentre of a dataset");
    c_bary->add_option("inputs", inputs, "CSV files")->required();
    auto* c_pca = app.add_subcommand("pca", "principal component fit in the tangent space");
    c_pca->add_option("inputs", inputs, "CSV files")->required();
    c_pca->add_option("--base", base_path, "CSV of an explicit tangent point");
    auto* c_scores = app.add_subcommand("scores", "project measures onto a fitted model");
    c_scores->add_option("inputs", inputs, "CSV files")->required();
    c_scores->add_option("--model", model_path, "model JSON")->required();
    auto* c_recon = app.add_subcommand("reconstruct", "measure from model scores");
    c_recon->add_option("--model", model_path, "model JSON")->required();
    c_recon->add_option("--lambda", lambda_str, "comma-separated scores")->required();
    auto* c_anre = app.add_subcommand("anre", "reconstruction-error curve over k");
    c_anre->add_option("inputs", inputs, "CSV files")->required();
    c_anre->add_option("--model", model_path, "model JSON")->required();
    auto* c_cluster = app.add_subcommand("cluster", "Ward clustering of a score matrix");
    c_cluster->add_option("inputs", inputs, "score CSV")->required();
    auto* c_sim = app.add_subcommand("simulate", "regenerate the benchmark datasets");
    c_sim->add_option("family", family,
                      "two_arcs | three_arcs | beta | von_mises | trunc_gauss");
    c_sim->add_option("-n,--count", count, "dataset size where applicable");
    auto* c_verify = app.add_subcommand("verify", "optimality checks for a transport map");
    c_verify->add_option("inputs", inputs, "source-measure CSV")->required();
    c_verify->add_option("--map", map_path, "map JSON {values: [...]}")->required();

    for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
        detail::apply_config_file(cfg, app);
        if (cfg.grid_size < 4 || cfg.threads < 1 || cfg.eps <= 0 || cfg.max_iter < 1 ||
            cfg.certificate_tol <= 0)
            throw std::invalid_argument("invalid configuration value");
        for (const auto& p : inputs)
            if (!fs::exists(p)) throw std::invalid_argument("no such input: " + p);
        fs::create_directories(cfg.out_dir);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    const fs::path dir(cfg.out_dir);
    json result = {{"config", detail::config_echo(cfg, app.get_subcommands().front()->get_name())}};
    try {
        if (c_distance->parsed() || c_otm->parsed()) {
            if (inputs.size() != 2 && !(inputs.size() == 1))
                throw std::invalid_argument("need two measures");
            auto measures = detail::load_all(inputs, cfg);
            if (measures.size() != 2) throw std::invalid_argument("need exactly two measures");
            auto sol = theta_star(measures[0], measures[1]);
            result["w2"] = std::sqrt(std::max(0.0, sol.cost));
            result["theta_star"] = sol.theta;
            if (c_otm->parsed()) {
                result["map"] = {{"values", sol.map.values}};
                result["verify"] = report_to_json(verify_otm(sol.map, measures[0]));
            }
            out << result.dump(2) << "\n";
        } else if (c_bary->parsed()) {
            auto measures = detail::load_all(inputs, cfg);
            auto res = procrustes_barycentre(measures, cfg.eps, cfg.max_iter,
                                             cfg.certificate_tol);
            result["barycentre_run"] = barycentre_to_json(res);
            write_measures_csv((dir / "barycentre.csv").string(), {res.barycentre});
            if (svg) detail::write_density_svg(dir / "barycentre.svg", {res.barycentre});
            out << "iterations=" << res.iterations
                << " certificate_pass=" << (res.certificate.pass ? "true" : "false") << "\n";
        } else if (c_pca->parsed()) {
            auto measures = detail::load_all(inputs, cfg);
            auto bary = procrustes_barycentre(measures, cfg.eps, cfg.max_iter,
                                              cfg.certificate_tol);
            std::optional<PeriodicMeasure> mu0;
            if (!base_path.empty())
                mu0 = read_measures_csv(base_path, cfg.fractions, cfg.grid_size).front();
            PCAOptions opts;
            opts.spline_size = cfg.spline_size;
            opts.seed = cfg.seed;
            auto [model, report] = fit_pca(measures, bary.barycentre, mu0, cfg.k, opts);
            detail::write_json(dir / "model.json", model_to_json(model));
            std::vector<std::vector<double>> rows;
            for (int i = 0; i < model.scores.rows(); ++i) {
                std::vector<double> r(model.scores.cols());
                for (int j = 0; j < model.scores.cols(); ++j) r[j] = model.scores(i, j);
                rows.push_back(r);
            }
            write_matrix_csv((dir / "scores.csv").string(), rows);
            result["pca"] = {{"k", model.k()},
                             {"converged", report.converged},
                             {"final_objective", report.final_objective}};
            out << "k=" << model.k() << " model=" << (dir / "model.json").string() << "\n";
        } else if (c_scores->parsed()) {
            std::ifstream in(model_path);
            if (!in) throw std::invalid_argument("cannot open model " + model_path);
            auto model = model_from_json(json::parse(in));
            auto measures = detail::load_all(inputs, cfg);
            std::vector<std::vector<double>> rows;
            for (const auto& mu : measures) {
                Eigen::VectorXd lam = scores(model, mu);
                rows.emplace_back(lam.data(), lam.data() + lam.size());
            }
            write_matrix_csv((dir / "scores.csv").string(), rows);
            result["rows"] = rows.size();
            out << "scores=" << (dir / "scores.csv").string() << "\n";
        } else if (c_recon->parsed()) {
            std::ifstream in(model_path);
            if (!in) throw std::invalid_argument("cannot open model " + model_path);
            auto model = model_from_json(json::parse(in));
            std::vector<double> lam;
            std::stringstream ss(lambda_str);
            std::string cell;
            while (std::getline(ss, cell, ',')) lam.push_back(std::stod(cell));
            Eigen::VectorXd lv = Eigen::Map<Eigen::VectorXd>(lam.data(), lam.size());
            auto mu = reconstruct(model, lv);
            write_measures_csv((dir / "reconstruction.csv").string(), {mu});
            if (svg) detail::write_density_svg(dir / "reconstruction.svg", {mu});
            result["reconstruction"] = measure_to_json(mu);
            out << "reconstruction=" << (dir / "reconstruction.csv").string() << "\n";
        } else if (c_anre->parsed()) {
            std::ifstream in(model_path);
            if (!in) throw std::invalid_argument("cannot open model " + model_path);
            auto model = model_from_json(json::parse(in));
            auto measures = detail::load_all(inputs, cfg);
            std::vector<std::vector<double>> rows;
            json curve = json::array();
            for (int kk = 1; kk <= model.k(); ++kk) {
                const double v = anre(model, measures, kk);
                rows.push_back({static_cast<double>(kk), v});
                curve.push_back({{"k", kk}, {"anre", v}});
                out << "k=" << kk << " anre=" << v << "\n";
            }
            write_matrix_csv((dir / "anre.csv").string(), rows);
            result["anre"] = curve;
        } else if (c_cluster->parsed()) {
            std::ifstream in(inputs.front());
            std::vector<std::vector<double>> pts;
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                auto cells = io_detail::split_csv_line(line);
                if (!io_detail::is_number(cells[0])) continue;  // header
                std::vector<double> row;
                for (const auto& c : cells) row.push_back(std::stod(c));
                pts.push_back(row);
            }
            auto den = ward_clustering(pts);
            auto labels = cut(den, cfg.k);
            write_dendrogram_csv((dir / "dendrogram.csv").string(), den);
            detail::write_json(dir / "dendrogram.json", dendrogram_to_json(den));
            std::vector<std::vector<double>> lab;
            for (int l : labels) lab.push_back({static_cast<double>(l)});
            write_matrix_csv((dir / "labels.csv").string(), lab);
            result["clusters"] = cfg.k;
            out << "labels=" << (dir / "labels.csv").string() << "\n";
        } else if (c_sim->parsed()) {
            std::vector<PeriodicMeasure> data;
            if (family == "two_arcs") data = simulation_two_arcs(cfg.grid_size);
            else if (family == "three_arcs") data = simulation_three_arcs(cfg.grid_size);
            else if (family == "beta") data = simulation_beta(cfg.seed, cfg.grid_size);
            else if (family == "von_mises")
                data = von_mises_dataset(count, 0.5, 2.0, cfg.seed, cfg.grid_size);
            else if (family == "trunc_gauss")
                data = trunc_gauss_dataset(count, cfg.seed, cfg.grid_size);
            else throw std::invalid_argument("unknown family " + family);
            write_measures_csv((dir / (family + ".csv")).string(), data);
            if (svg) detail::write_density_svg(dir / (family + ".svg"), data);
            result["family"] = family;
            result["count"] = data.size();
            out << "wrote " << (dir / (family + ".csv")).string() << " (" << data.size()
                << " measures)\n";
        } else if (c_verify->parsed()) {
            auto measures = detail::load_all(inputs, cfg);
            auto t = detail::map_from_json_file(map_path);
            auto rep = verify_otm(t, measures.front());
            result["verify"] = report_to_json(rep);
            out << result["verify"].dump(2) << "\n";
            detail::write_json(dir / "result.json", result);
            return rep.pass() ? 0 : 2;
        }
        detail::write_json(dir / "result.json", result);
        return 0;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        result["error"] = e.what();
        try { detail::write_json(dir / "result.json", result); } catch (...) {}
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace otc::cli
