#pragma once

#include <algorithm>
#include <deque>
#include <optional>
#include <vector>

#include "cdrgnn/graphstore/types.hpp"

namespace cdrgnn::graphstore {

/// Undirected union of all snapshots; neighbor lists are sorted.
class UnionAdjacency {
public:
    explicit UnionAdjacency(const TemporalGraph& graph) : adj_(graph.num_nodes()) {
        for (const auto& s : graph.snapshots())
            for (const auto& e : s.edges) {
                adj_[e.source].push_back(e.destination);
                adj_[e.destination].push_back(e.source);
            }
        for (auto& list : adj_) {
            std::sort(list.begin(), list.end());
            list.erase(std::unique(list.begin(), list.end()), list.end());
        }
    }

    std::size_t size() const { return adj_.size(); }
    const std::vector<NodeIndex>& neighbors(NodeIndex v) const { return adj_.at(v); }
    bool adjacent(NodeIndex u, NodeIndex v) const {
        const auto& l = adj_.at(u);
        return std::binary_search(l.begin(), l.end(), v);
    }

private:
    std::vector<std::vector<NodeIndex>> adj_;
};

using LocalIndex = std::uint32_t;

struct LocalEdge {
    LocalIndex source = 0;
    LocalIndex destination = 0;
    std::uint32_t position = 0;  // index of the edge inside the parent snapshot

    friend bool operator==(const LocalEdge&, const LocalEdge&) = default;
};

/// Ball of radius k around a seed, with every snapshot induced on that ball.
struct Subgraph {
    NodeIndex seed = 0;
    LocalIndex seed_local = 0;
    int hops = 0;
    std::vector<NodeIndex> nodes;                // sorted global indices
    std::vector<std::vector<LocalEdge>> months;  // [month - 1], sorted by (source, destination)

    std::size_t size() const { return nodes.size(); }
    int num_months() const { return int(months.size()); }
    const std::vector<LocalEdge>& edges(Month m) const { return months.at(std::size_t(m - 1)); }

    std::optional<LocalIndex> local_of(NodeIndex v) const {
        auto it = std::lower_bound(nodes.begin(), nodes.end(), v);
        if (it == nodes.end() || *it != v) return std::nullopt;
        return LocalIndex(it - nodes.begin());
    }

    friend bool operator==(const Subgraph&, const Subgraph&) = default;
};

/// BFS distances from `seed` over the union adjacency, -1 for unreachable.
inline std::vector<int> bfs_distances(const UnionAdjacency& adj, NodeIndex seed, int max_depth) {
    std::vector<int> dist(adj.size(), -1);
    std::deque<NodeIndex> queue{seed};
    dist[seed] = 0;
    while (!queue.empty()) {
        const NodeIndex v = queue.front();
        queue.pop_front();
        if (dist[v] == max_depth) continue;
        for (NodeIndex u : adj.neighbors(v))
            if (dist[u] < 0) {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
    }
    return dist;
}

inline Subgraph sample_khop(const TemporalGraph& graph, const UnionAdjacency& adj, NodeIndex seed, int k) {
    if (k < 0) throw ValidationError("sample_khop: hop count must be >= 0");
    if (seed >= graph.num_nodes()) throw ValidationError("sample_khop: seed index out of range");
    Subgraph sg;
    sg.seed = seed;
    sg.hops = k;
    const auto dist = bfs_distances(adj, seed, k);
    for (NodeIndex v = 0; v < dist.size(); ++v)
        if (dist[v] >= 0) sg.nodes.push_back(v);
    sg.seed_local = *sg.local_of(seed);

    std::vector<std::int64_t> local(graph.num_nodes(), -1);
    for (LocalIndex i = 0; i < sg.nodes.size(); ++i) local[sg.nodes[i]] = i;
    sg.months.resize(std::size_t(graph.num_months()));
    for (Month m = 1; m <= graph.num_months(); ++m) {
        const auto& edges = graph.snapshot(m).edges;
        auto& out = sg.months[std::size_t(m - 1)];
        // Edges are sorted by source, so only the ranges of member sources are scanned.
        for (NodeIndex v : sg.nodes) {
            auto it = std::lower_bound(edges.begin(), edges.end(), v,
                                       [](const TemporalEdge& e, NodeIndex s) { return e.source < s; });
            for (; it != edges.end() && it->source == v; ++it)
                if (local[it->destination] >= 0)
                    out.push_back(LocalEdge{LocalIndex(local[v]), LocalIndex(local[it->destination]),
                                            std::uint32_t(it - edges.begin())});
        }
    }
    return sg;
}

/// Same as sample_khop, with the seed given by its external identifier.
inline Subgraph sample_khop_by_id(const TemporalGraph& graph, const UnionAdjacency& adj, NodeId seed, int k) {
    const auto idx = graph.index_of(seed);
    if (!idx) throw ValidationError("sample_khop: unknown seed node " + std::to_string(seed));
    return sample_khop(graph, adj, *idx, k);
}

}  // namespace cdrgnn::graphstore
