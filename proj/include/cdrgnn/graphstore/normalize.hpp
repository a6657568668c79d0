#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "cdrgnn/graphstore/split.hpp"
#include "cdrgnn/graphstore/types.hpp"

namespace cdrgnn::graphstore {

inline constexpr std::size_t kNodeFeatures = 4;  // age, gender, latitude, longitude
inline constexpr std::size_t kEdgeFeatures = 4;

/// Min/max of age, latitude, longitude over all nodes; mean/std of the four
/// edge counts over training months (population std).
struct NormStats {
    std::array<double, 3> node_min{};
    std::array<double, 3> node_max{};
    std::array<double, 4> edge_mean{};
    std::array<double, 4> edge_std{};

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

using NodeFeatures = std::array<double, kNodeFeatures>;
using EdgeFeatures = std::array<double, kEdgeFeatures>;

inline EdgeFeatures standardize(const EdgeAttr& a, const NormStats& s) {
    const auto raw = a.as_array();
    EdgeFeatures out{};
    for (std::size_t k = 0; k < 4; ++k) out[k] = (raw[k] - s.edge_mean[k]) / s.edge_std[k];
    return out;
}

inline EdgeFeatures destandardize(const EdgeFeatures& z, const NormStats& s) {
    EdgeFeatures out{};
    for (std::size_t k = 0; k < 4; ++k) out[k] = z[k] * s.edge_std[k] + s.edge_mean[k];
    return out;
}

/// Scales into [-1, 1]; a degenerate range maps to 0.
inline double scale_symmetric(double v, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    return 2.0 * (v - lo) / (hi - lo) - 1.0;
}

inline NodeFeatures node_features(const NodeAttr& a, const NormStats& s) {
    return {scale_symmetric(a.age, s.node_min[0], s.node_max[0]), a.gender == Gender::b ? 1.0 : 0.0,
            scale_symmetric(a.latitude, s.node_min[1], s.node_max[1]),
            scale_symmetric(a.longitude, s.node_min[2], s.node_max[2])};
}

/// Model inputs derived from a graph; raw counts stay in the graph as regression targets.
struct NormalizedFeatures {
    NormStats stats;
    std::vector<NodeFeatures> nodes;
    std::vector<std::vector<EdgeFeatures>> edges;  // [month - 1][edge position in snapshot]
    std::vector<std::string> warnings;

    const EdgeFeatures& edge(Month m, std::size_t position) const { return edges[std::size_t(m - 1)][position]; }
};

inline NormStats compute_norm_stats(const TemporalGraph& graph, const Split& split, std::vector<std::string>* warnings) {
    split.validate(graph.num_months());
    NormStats s;
    if (graph.num_nodes() > 0) {
        s.node_min = {1e300, 1e300, 1e300};
        s.node_max = {-1e300, -1e300, -1e300};
        for (const auto& n : graph.nodes()) {
            const std::array<double, 3> v{double(n.attr.age), n.attr.latitude, n.attr.longitude};
            for (std::size_t k = 0; k < 3; ++k) {
                s.node_min[k] = std::min(s.node_min[k], v[k]);
                s.node_max[k] = std::max(s.node_max[k], v[k]);
            }
        }
        static constexpr std::array<const char*, 3> names{"age", "latitude", "longitude"};
        for (std::size_t k = 0; k < 3; ++k)
            if (!(s.node_max[k] > s.node_min[k]) && warnings)
                warnings->push_back(std::string("node feature '") + names[k] + "' is constant; normalized to 0");
    }

    std::array<double, 4> sum{}, sq{};
    std::size_t count = 0;
    for (Month m = 1; m <= split.train_cutoff; ++m)
        for (const auto& e : graph.snapshot(m).edges) {
            const auto v = e.attr.as_array();
            for (std::size_t k = 0; k < 4; ++k) sum[k] += v[k];
            ++count;
        }
    if (count == 0) throw DataError("normalize: training months contain no edges");
    for (std::size_t k = 0; k < 4; ++k) s.edge_mean[k] = sum[k] / double(count);
    for (Month m = 1; m <= split.train_cutoff; ++m)
        for (const auto& e : graph.snapshot(m).edges) {
            const auto v = e.attr.as_array();
            for (std::size_t k = 0; k < 4; ++k) sq[k] += (v[k] - s.edge_mean[k]) * (v[k] - s.edge_mean[k]);
        }
    for (std::size_t k = 0; k < 4; ++k) {
        s.edge_std[k] = std::sqrt(sq[k] / double(count));
        if (!(s.edge_std[k] > 0.0))
            throw DataError(std::string("normalize: edge feature '") + kEdgeFeatureNames[k] +
                            "' has zero variance over the training months");
    }
    return s;
}

inline NormalizedFeatures apply_norm_stats(const TemporalGraph& graph, const NormStats& stats) {
    NormalizedFeatures out;
    out.stats = stats;
    out.nodes.reserve(graph.num_nodes());
    for (const auto& n : graph.nodes()) out.nodes.push_back(node_features(n.attr, stats));
    out.edges.resize(std::size_t(graph.num_months()));
    for (Month m = 1; m <= graph.num_months(); ++m) {
        auto& dst = out.edges[std::size_t(m - 1)];
        for (const auto& e : graph.snapshot(m).edges) dst.push_back(standardize(e.attr, stats));
    }
    return out;
}

inline NormalizedFeatures normalize(const TemporalGraph& graph, const Split& split) {
    std::vector<std::string> warnings;
    const NormStats stats = compute_norm_stats(graph, split, &warnings);
    NormalizedFeatures out = apply_norm_stats(graph, stats);
    out.warnings = std::move(warnings);
    return out;
}

}  // namespace cdrgnn::graphstore
