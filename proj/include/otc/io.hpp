// io.hpp - CSV ingestion/export of measures and score matrices, and JSON forms
// of measures, verifier reports, barycentre results, and PCA models.
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "otc/barycentre.hpp"
#include "otc/cluster.hpp"
#include "otc/measure.hpp"
#include "otc/pca.hpp"
#include "otc/transport.hpp"

namespace otc {

using json = nlohmann::json;

namespace io_detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell.erase(cell.begin(), std::find_if(cell.begin(), cell.end(),
                                              [](unsigned char c) { return !std::isspace(c); }));
        while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.back())))
            cell.pop_back();
        out.push_back(cell);
    }
    return out;
}

inline bool is_number(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

// Linear interpolation of sampled (angle, density) pairs, periodic, onto the
// canonical cell centers.
inline PeriodicMeasure regrid(std::vector<double> angles, std::vector<double> values,
                              int m) {
    if (angles.size() < 2) throw std::invalid_argument("regrid: need at least 2 samples");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < angles.size(); ++i)
        pts.emplace_back(wrap(angles[i]), values[i]);
    std::sort(pts.begin(), pts.end());
    const double h = two_pi / m;
    std::vector<double> dens(m);
    for (int i = 0; i < m; ++i) {
        const double x = (i + 0.5) * h;
        // bracketing samples with periodic extension
        auto it = std::lower_bound(pts.begin(), pts.end(), std::make_pair(x, -1e300));
        double x0, y0, x1, y1;
        if (it == pts.begin()) {
            x0 = pts.back().first - two_pi; y0 = pts.back().second;
            x1 = pts.front().first; y1 = pts.front().second;
        } else if (it == pts.end()) {
            x0 = pts.back().first; y0 = pts.back().second;
            x1 = pts.front().first + two_pi; y1 = pts.front().second;
        } else {
            x0 = (it - 1)->first; y0 = (it - 1)->second;
            x1 = it->first; y1 = it->second;
        }
        const double t = (x1 > x0) ? (x - x0) / (x1 - x0) : 0.0;
        dens[i] = std::max(0.0, y0 + t * (y1 - y0));
    }
    return PeriodicMeasure::from_density_grid(dens);
}

}  // namespace io_detail

// CSV of `angle,density` rows (one measure) or `angle,d1,...,dn` (wide format).
// An optional header is detected by non-numeric cells; if it mentions
// "fraction" (or force_fractions is set) angles are fractions of the circle.
inline std::vector<PeriodicMeasure> read_measures_csv(const std::string& path,
                                                      bool force_fractions = false,
                                                      int m = default_grid_size) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    bool fractions = force_fractions;
    std::vector<std::vector<double>> rows;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = io_detail::split_csv_line(line);
        if (cells.empty()) continue;
        if (first && !io_detail::is_number(cells[0])) {
            std::string lowered;
            for (char c : line) lowered.push_back(static_cast<char>(std::tolower(c)));
            if (lowered.find("fraction") != std::string::npos) fractions = true;
            first = false;
            continue;
        }
        first = false;
        std::vector<double> row;
        for (const auto& c : cells) {
            if (!io_detail::is_number(c))
                throw std::runtime_error("malformed CSV cell '" + c + "' in " + path);
            row.push_back(std::stod(c));
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw std::runtime_error("too few data rows in " + path);
    const std::size_t width = rows.front().size();
    if (width < 2) throw std::runtime_error("need angle,density columns in " + path);
    for (const auto& r : rows)
        if (r.size() != width) throw std::runtime_error("ragged CSV in " + path);
    std::vector<double> angles;
    for (const auto& r : rows) angles.push_back(fractions ? r[0] * two_pi : r[0]);
    std::vector<PeriodicMeasure> out;
    for (std::size_t col = 1; col < width; ++col) {
        std::vector<double> vals;
        for (const auto& r : rows) vals.push_back(r[col]);
        out.push_back(io_detail::regrid(angles, vals, m));
    }
    return out;
}

inline void write_measures_csv(const std::string& path,
                               const std::vector<PeriodicMeasure>& measures) {
    if (measures.empty()) throw std::invalid_argument("write_measures_csv: nothing to write");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    out << "angle";
    for (std::size_t i = 0; i < measures.size(); ++i) out << ",d" << i + 1;
    out << "\n";
    const int m = measures.front().grid_size();
    const double h = two_pi / m;
    for (int i = 0; i < m; ++i) {
        out << (i + 0.5) * h;
        for (const auto& mu : measures) out << "," << mu.density()[i];
        out << "\n";
    }
}

inline json measure_to_json(const PeriodicMeasure& mu) {
    return json{{"grid_size", mu.grid_size()},
                {"density", mu.density()},
                {"cumulative", mu.cumulative()}};
}

inline PeriodicMeasure measure_from_json(const json& j) {
    return PeriodicMeasure::from_density_grid(j.at("density").get<std::vector<double>>());
}

inline json report_to_json(const OtmReport& rep) {
    return json{{"monotone", rep.monotone},
                {"displacement_ok", rep.displacement_ok},
                {"integral_ok", rep.integral_ok},
                {"slacks",
                 {{"monotone_slack", rep.monotone_slack},
                  {"displacement_margin", rep.displacement_margin},
                  {"integral_value", rep.integral_value}}}};
}

inline json barycentre_to_json(const BarycentreResult& res) {
    return json{{"barycentre", measure_to_json(res.barycentre)},
                {"iterations", res.iterations},
                {"trace", res.trace},
                {"converged", res.converged},
                {"certificate",
                 {{"max_rel_gap", res.certificate.max_rel_gap},
                  {"pass", res.certificate.pass}}}};
}

inline json model_to_json(const PCAModel& model) {
    json dirs = json::array();
    for (const auto& w : model.directions)
        dirs.push_back(std::vector<double>(w.data(), w.data() + w.size()));
    json scores = json::array();
    for (int i = 0; i < model.scores.rows(); ++i) {
        std::vector<double> row(model.scores.cols());
        for (int j = 0; j < model.scores.cols(); ++j) row[j] = model.scores(i, j);
        scores.push_back(row);
    }
    return json{{"J", model.basis->size()},
                {"knots", model.basis->knots()},
                {"a0", std::vector<double>(model.a0.data(), model.a0.data() + model.a0.size())},
                {"directions", dirs},
                {"scores", scores},
                {"base_measure", measure_to_json(model.base_measure)}};
}

inline PCAModel model_from_json(const json& j) {
    PCAModel model;
    model.basis = std::make_shared<SplineBasis>(j.at("J").get<int>());
    model.base_measure = measure_from_json(j.at("base_measure"));
    const auto a0 = j.at("a0").get<std::vector<double>>();
    model.a0 = Eigen::Map<const Eigen::VectorXd>(a0.data(), a0.size());
    for (const auto& d : j.at("directions")) {
        const auto v = d.get<std::vector<double>>();
        model.directions.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()));
    }
    const auto rows = j.at("scores").get<std::vector<std::vector<double>>>();
    model.scores.resize(rows.size(), model.k());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int c = 0; c < model.k(); ++c) model.scores(i, c) = rows[i][c];
    return model;
}

inline void write_matrix_csv(const std::string& path,
                             const std::vector<std::vector<double>>& mat) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    for (const auto& row : mat) {
        for (std::size_t j = 0; j < row.size(); ++j)
            out << (j ? "," : "") << row[j];
        out << "\n";
    }
}

inline json dendrogram_to_json(const Dendrogram& den) {
    json merges = json::array();
    for (const auto& mg : den.merges)
        merges.push_back({{"a", mg.a}, {"b", mg.b}, {"height", mg.height}, {"size", mg.size}});
    return json{{"leaves", den.leaves}, {"merges", merges}};
}

inline void write_dendrogram_csv(const std::string& path, const Dendrogram& den) {
    std::vector<std::vector<double>> rows;
    for (const auto& mg : den.merges)
        rows.push_back({static_cast<double>(mg.a), static_cast<double>(mg.b), mg.height,
                        static_cast<double>(mg.size)});
    write_matrix_csv(path, rows);
}

}  // namespace otc
