// cluster.hpp - agglomerative clustering with Ward linkage on score vectors,
// dendrogram cutting, and per-cluster barycentres.
#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "otc/barycentre.hpp"
#include "otc/measure.hpp"

namespace otc {

struct Merge {
    int a;          // cluster ids being merged (leaves are 0..n-1)
    int b;
    double height;  // Ward distance at the merge
    int size;       // size of the merged cluster
};

struct Dendrogram {
    int leaves = 0;
    std::vector<Merge> merges;  // n-1 entries; merged cluster i gets id leaves + i
};

// Lance-Williams Ward update on pairwise distances. The initial distance
// between singletons i and j is ||x_i - x_j||^2 / 2 (the increase in
// within-cluster sum of squares). Ties break toward the lowest cluster ids.
inline Dendrogram ward_clustering(const std::vector<std::vector<double>>& scores) {
    const int n = static_cast<int>(scores.size());
    if (n < 2) throw std::invalid_argument("ward_clustering: need at least 2 points");
    for (const auto& row : scores)
        for (double v : row)
            if (!std::isfinite(v)) throw std::invalid_argument("ward_clustering: non-finite score");

    std::vector<int> id(n), sz(n, 1);
    for (int i = 0; i < n; ++i) id[i] = i;
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < scores[i].size(); ++c) {
                const double diff = scores[i][c] - scores[j][c];
                s += diff * diff;
            }
            d[i][j] = d[j][i] = 0.5 * s;
        }

    Dendrogram den;
    den.leaves = n;
    std::vector<int> active(n);
    for (int i = 0; i < n; ++i) active[i] = i;

    for (int step = 0; step < n - 1; ++step) {
        int bi = -1, bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < active.size(); ++p)
            for (std::size_t q = p + 1; q < active.size(); ++q) {
                const double v = d[active[p]][active[q]];
                if (v < best - 1e-15) { best = v; bi = static_cast<int>(p); bj = static_cast<int>(q); }
            }
        const int i = active[bi], j = active[bj];
        den.merges.push_back({std::min(id[i], id[j]), std::max(id[i], id[j]), best, sz[i] + sz[j]});
        // Lance-Williams: d(k, i+j)
        for (int kslot : active) {
            if (kslot == i || kslot == j) continue;
            const double ni = sz[i], nj = sz[j], nk = sz[kslot];
            const double v = ((ni + nk) * d[kslot][i] + (nj + nk) * d[kslot][j] - nk * d[i][j]) /
                             (ni + nj + nk);
            d[kslot][i] = d[i][kslot] = v;
        }
        sz[i] += sz[j];
        id[i] = n + step;
        active.erase(active.begin() + bj);
    }
    return den;
}

// Labels in 0..k-1 from cutting the dendrogram at k clusters; label order
// follows the lowest leaf index in each cluster.
inline std::vector<int> cut(const Dendrogram& den, int k) {
    const int n = den.leaves;
    if (k < 1 || k > n) throw std::invalid_argument("cut: k out of range");
    std::vector<int> parent(2 * n - 1);
    for (int i = 0; i < 2 * n - 1; ++i) parent[i] = i;
    // apply the first n-k merges
    for (int s = 0; s < n - k; ++s) {
        const auto& mg = den.merges[s];
        auto root = [&](int x) { while (parent[x] != x) x = parent[x] = parent[parent[x]]; return x; };
        parent[root(mg.a)] = n + s;
        parent[root(mg.b)] = n + s;
    }
    auto root = [&](int x) { while (parent[x] != x) x = parent[x] = parent[parent[x]]; return x; };
    std::map<int, int> relabel;
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        const int r = root(i);
        auto it = relabel.find(r);
        if (it == relabel.end()) it = relabel.emplace(r, static_cast<int>(relabel.size())).first;
        labels[i] = it->second;
    }
    return labels;
}

inline std::vector<BarycentreResult> cluster_barycentres(
    const std::vector<int>& labels, const std::vector<PeriodicMeasure>& measures,
    double eps = 1e-4, int max_iter = 200) {
    if (labels.size() != measures.size())
        throw std::invalid_argument("cluster_barycentres: label/measure mismatch");
    int k = 0;
    for (int l : labels) k = std::max(k, l + 1);
    std::vector<BarycentreResult> out;
    for (int c = 0; c < k; ++c) {
        std::vector<PeriodicMeasure> group;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) group.push_back(measures[i]);
        if (group.empty()) continue;
        out.push_back(procrustes_barycentre(group, eps, max_iter));
    }
    return out;
}

}  // namespace otc
