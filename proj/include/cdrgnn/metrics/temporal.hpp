#pragma once

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cdrgnn/graphstore/types.hpp"

namespace cdrgnn::metrics {

using graphstore::Month;
using graphstore::NodeIndex;
using graphstore::TemporalGraph;

// Edge identity is the ordered pair; (i, j) and (j, i) are different edges.
using EdgeKey = std::uint64_t;

inline EdgeKey edge_key(NodeIndex s, NodeIndex d) { return (EdgeKey(s) << 32) | d; }
inline NodeIndex key_source(EdgeKey k) { return NodeIndex(k >> 32); }
inline NodeIndex key_destination(EdgeKey k) { return NodeIndex(k & 0xffffffffu); }

/// Distinct edges over months [first, last].
inline std::unordered_set<EdgeKey> edge_set(const TemporalGraph& g, Month first, Month last) {
    std::unordered_set<EdgeKey> out;
    for (Month m = std::max(first, 1); m <= std::min(last, g.num_months()); ++m)
        for (const auto& e : g.snapshot(m).edges) out.insert(edge_key(e.source, e.destination));
    return out;
}

inline double novelty(const TemporalGraph& g) {
    std::unordered_set<EdgeKey> seen;
    double sum = 0.0;
    int counted = 0;
    for (const auto& s : g.snapshots()) {
        if (s.edges.empty()) continue;
        std::size_t fresh = 0;
        for (const auto& e : s.edges)
            if (!seen.count(edge_key(e.source, e.destination))) ++fresh;
        for (const auto& e : s.edges) seen.insert(edge_key(e.source, e.destination));
        sum += double(fresh) / double(s.edges.size());
        ++counted;
    }
    if (counted == 0) throw DataError("novelty: graph has no edges");
    return sum / counted;
}

inline void check_cutoff(const TemporalGraph& g, Month cutoff) {
    if (cutoff < 1 || cutoff >= g.num_months())
        throw ValidationError("cutoff must satisfy 1 <= cutoff < T (got " + std::to_string(cutoff) + ", T=" +
                              std::to_string(g.num_months()) + ")");
}

/// |E_dev ∩ E_test| / |E_dev|, dev = months 1..cutoff, test = cutoff+1..T.
inline double reoccurrence(const TemporalGraph& g, Month cutoff) {
    check_cutoff(g, cutoff);
    const auto dev = edge_set(g, 1, cutoff);
    if (dev.empty()) throw DataError("reoccurrence: no edges before the cutoff");
    const auto test = edge_set(g, cutoff + 1, g.num_months());
    std::size_t both = 0;
    for (EdgeKey k : dev) both += test.count(k);
    return double(both) / double(dev.size());
}

/// |E_test \ E_dev| / |E_test|.
inline double surprise(const TemporalGraph& g, Month cutoff) {
    check_cutoff(g, cutoff);
    const auto test = edge_set(g, cutoff + 1, g.num_months());
    if (test.empty()) throw DataError("surprise: no edges after the cutoff");
    const auto dev = edge_set(g, 1, cutoff);
    std::size_t fresh = 0;
    for (EdgeKey k : test) fresh += dev.count(k) ? 0 : 1;
    return double(fresh) / double(test.size());
}

struct TeaMonth {
    Month month = 1;
    std::size_t novel = 0;
    std::size_t reoccurring = 0;

    friend bool operator==(const TeaMonth&, const TeaMonth&) = default;
};
using TeaSeries = std::vector<TeaMonth>;

inline TeaSeries tea_series(const TemporalGraph& g) {
    TeaSeries out;
    std::unordered_set<EdgeKey> seen;
    for (const auto& s : g.snapshots()) {
        TeaMonth row{s.month, 0, 0};
        for (const auto& e : s.edges) {
            if (seen.count(edge_key(e.source, e.destination)))
                ++row.reoccurring;
            else
                ++row.novel;
        }
        for (const auto& e : s.edges) seen.insert(edge_key(e.source, e.destination));
        out.push_back(row);
    }
    return out;
}

enum class EdgeClass : std::uint8_t { train_only, transductive, inductive };

inline const char* to_string(EdgeClass c) {
    switch (c) {
        case EdgeClass::train_only: return "train_only";
        case EdgeClass::transductive: return "transductive";
        case EdgeClass::inductive: return "inductive";
    }
    return "?";
}

struct TetEntry {
    NodeIndex source = 0;
    NodeIndex destination = 0;
    Month first = 0;
    Month last = 0;
    EdgeClass cls = EdgeClass::train_only;
    std::vector<Month> months;  // every month the edge is present

    friend bool operator==(const TetEntry&, const TetEntry&) = default;
};
using TetLayout = std::vector<TetEntry>;

/// Blocks by first appearance, then last appearance, then (source id, destination id).
inline TetLayout tet_layout(const TemporalGraph& g, Month cutoff) {
    check_cutoff(g, cutoff);
    std::unordered_map<EdgeKey, std::size_t> where;
    TetLayout out;
    for (const auto& s : g.snapshots())
        for (const auto& e : s.edges) {
            const EdgeKey k = edge_key(e.source, e.destination);
            auto [it, fresh] = where.try_emplace(k, out.size());
            if (fresh) out.push_back(TetEntry{e.source, e.destination, s.month, s.month, EdgeClass::train_only, {}});
            auto& entry = out[it->second];
            entry.last = s.month;
            entry.months.push_back(s.month);
        }
    for (auto& e : out) {
        const bool in_dev = e.first <= cutoff;
        const bool in_test = e.last > cutoff;
        e.cls = in_dev && in_test ? EdgeClass::transductive : in_dev ? EdgeClass::train_only : EdgeClass::inductive;
    }
    std::sort(out.begin(), out.end(), [&](const TetEntry& a, const TetEntry& b) {
        return std::tuple{a.first, a.last, g.node(a.source).id, g.node(a.destination).id} <
               std::tuple{b.first, b.last, g.node(b.source).id, g.node(b.destination).id};
    });
    return out;
}

}  // namespace cdrgnn::metrics
