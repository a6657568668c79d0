#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "cdrgnn/common/random.hpp"
#include "cdrgnn/graphstore.hpp"
#include "cdrgnn/metrics/report.hpp"
#include "cdrgnn/nn/layers.hpp"

namespace cdrgnn::models {

using graphstore::LocalIndex;
using graphstore::Month;
using graphstore::NodeIndex;
using graphstore::Subgraph;
using graphstore::TemporalGraph;
using graphstore::UnionAdjacency;
using metrics::Channels;
using metrics::EdgeSet;

/// One query edge out of a subgraph's seed; negatives carry zero targets.
struct Query {
    LocalIndex destination = 0;
    EdgeSet set = EdgeSet::positive;
    Channels truth{};
};

struct SeedQueries {
    std::vector<Query> queries;
    bool truncated = false;  // fewer random negatives than requested
};

/// Seed edges present at month t, with their forward call/SMS counts.
inline std::vector<Query> positive_queries(const TemporalGraph& g, const Subgraph& sg, Month t) {
    std::vector<Query> out;
    const auto& snap = g.snapshot(t).edges;
    for (const auto& e : sg.edges(t))
        if (e.source == sg.seed_local) {
            const auto& a = snap[e.position].attr;
            out.push_back({e.destination, EdgeSet::positive, {double(a.calls_fwd), double(a.sms_fwd)}});
        }
    return out;
}

/// Seed pairs present in some month before t but not at t.
inline std::vector<Query> historical_negatives(const Subgraph& sg, Month t) {
    std::vector<char> past(sg.size(), 0), now(sg.size(), 0);
    for (Month m = 1; m < t; ++m)
        for (const auto& e : sg.edges(m))
            if (e.source == sg.seed_local) past[e.destination] = 1;
    for (const auto& e : sg.edges(t))
        if (e.source == sg.seed_local) now[e.destination] = 1;
    std::vector<Query> out;
    for (LocalIndex v = 0; v < sg.size(); ++v)
        if (past[v] && !now[v]) out.push_back({v, EdgeSet::historical_negative, {0.0, 0.0}});
    return out;
}

/// Up to `count` distinct subgraph members never connected to the seed in any month.
inline SeedQueries random_negatives(const UnionAdjacency& adj, const Subgraph& sg, std::size_t count, Rng& rng) {
    std::vector<LocalIndex> pool;
    for (LocalIndex v = 0; v < sg.size(); ++v)
        if (v != sg.seed_local && !adj.adjacent(sg.seed, sg.nodes[v])) pool.push_back(v);
    SeedQueries out;
    out.truncated = pool.size() < count;
    const std::size_t take = std::min(count, pool.size());
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
        out.queries.push_back({pool[i], EdgeSet::random_negative, {0.0, 0.0}});
    }
    return out;
}

/// Positives, neg_ratio x positives random negatives, and all historical negatives of the seed at t.
inline SeedQueries plan_queries(const TemporalGraph& g, const UnionAdjacency& adj, const Subgraph& sg, Month t,
                                int neg_ratio, Rng& rng) {
    if (neg_ratio < 0) throw ValidationError("neg_ratio must be >= 0");
    SeedQueries out;
    out.queries = positive_queries(g, sg, t);
    auto rnd = random_negatives(adj, sg, out.queries.size() * std::size_t(neg_ratio), rng);
    out.truncated = rnd.truncated;
    out.queries.insert(out.queries.end(), rnd.queries.begin(), rnd.queries.end());
    const auto hist = historical_negatives(sg, t);
    out.queries.insert(out.queries.end(), hist.begin(), hist.end());
    return out;
}

/// Stream for the negatives of one (seed, month), independent of batching and model.
inline Rng query_rng(std::uint64_t base, NodeIndex seed, Month t) {
    return Rng(splitmix64(splitmix64(base ^ std::uint64_t(seed)) + std::uint64_t(t)));
}

/// Queries of one target month, in batch-local indices.
struct QueryBlock {
    nn::Indices source, destination;
    nn::Matrix truth;         // q x 2
    std::vector<EdgeSet> set;
    std::vector<NodeIndex> global_source, global_destination;
    std::size_t truncated = 0;  // seeds whose random negatives were cut short

    std::size_t size() const { return source.size(); }
};

/// Disjoint union of subgraphs with normalized node and edge features for months 1..months.size().
struct Batch {
    Eigen::Index n = 0;
    nn::Matrix node_features;               // n x 4
    std::vector<nn::GraphEdges> months;     // [month - 1]
    std::vector<Eigen::Index> offset;       // first batch row of each subgraph
    std::vector<const Subgraph*> members;

    const nn::GraphEdges& edges(Month m) const { return months.at(std::size_t(m - 1)); }
    int num_months() const { return int(months.size()); }
};

inline Batch assemble_batch(const graphstore::NormalizedFeatures& norm, std::span<const Subgraph* const> parts,
                            Month last_month) {
    Batch b;
    for (const Subgraph* sg : parts) {
        if (sg->num_months() < last_month) throw ValidationError("assemble_batch: subgraph shorter than requested");
        b.offset.push_back(b.n);
        b.members.push_back(sg);
        b.n += Eigen::Index(sg->size());
    }
    b.node_features.resize(b.n, Eigen::Index(graphstore::kNodeFeatures));
    for (std::size_t p = 0; p < parts.size(); ++p)
        for (std::size_t i = 0; i < parts[p]->size(); ++i) {
            const auto& f = norm.nodes.at(parts[p]->nodes[i]);
            for (std::size_t k = 0; k < f.size(); ++k) b.node_features(b.offset[p] + Eigen::Index(i), Eigen::Index(k)) = f[k];
        }
    b.months.resize(std::size_t(last_month));
    for (Month m = 1; m <= last_month; ++m) {
        auto& ge = b.months[std::size_t(m - 1)];
        ge.n = b.n;
        std::size_t total = 0;
        for (const Subgraph* sg : parts) total += sg->edges(m).size();
        nn::Matrix feats(Eigen::Index(total), Eigen::Index(graphstore::kEdgeFeatures));
        ge.src.reserve(total);
        ge.dst.reserve(total);
        for (std::size_t p = 0; p < parts.size(); ++p)
            for (const auto& e : parts[p]->edges(m)) {
                const auto r = Eigen::Index(ge.src.size());
                ge.src.push_back(int(b.offset[p] + e.source));
                ge.dst.push_back(int(b.offset[p] + e.destination));
                const auto& f = norm.edge(m, e.position);
                for (std::size_t k = 0; k < f.size(); ++k) feats(r, Eigen::Index(k)) = f[k];
            }
        ge.features = nn::Tensor::constant(std::move(feats));
    }
    return b;
}

/// Collects per-seed queries for target month t into one block.
inline QueryBlock make_block(const Batch& b, const std::vector<SeedQueries>& per_member) {
    QueryBlock q;
    std::size_t total = 0;
    for (const auto& s : per_member) total += s.queries.size();
    q.truth.resize(Eigen::Index(total), 2);
    for (std::size_t p = 0; p < per_member.size(); ++p) {
        const Subgraph& sg = *b.members[p];
        if (per_member[p].truncated) ++q.truncated;
        for (const auto& x : per_member[p].queries) {
            const auto r = Eigen::Index(q.source.size());
            q.source.push_back(int(b.offset[p] + sg.seed_local));
            q.destination.push_back(int(b.offset[p] + x.destination));
            q.truth(r, 0) = x.truth[0];
            q.truth(r, 1) = x.truth[1];
            q.set.push_back(x.set);
            q.global_source.push_back(sg.seed);
            q.global_destination.push_back(sg.nodes[x.destination]);
        }
    }
    return q;
}

}  // namespace cdrgnn::models
