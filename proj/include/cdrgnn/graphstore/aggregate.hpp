#pragma once

#include <map>
#include <tuple>

#include "cdrgnn/graphstore/ingest.hpp"

namespace cdrgnn::graphstore {

/// Builds monthly snapshots. A pair with activity in either direction during month t
/// yields both ordered edges (i, j) and (j, i) in snapshot t, with mirrored attributes.
inline TemporalGraph aggregate_monthly(const RawStore& store) {
    std::vector<NodeRecord> nodes;
    for (NodeId id : store.node_ids()) {
        auto it = store.attributes.find(id);
        if (it == store.attributes.end() || !it->second.complete())
            throw DataError("aggregate_monthly: node " + std::to_string(id) +
                            " has incomplete attributes; run filter_users first");
        nodes.push_back(NodeRecord{id, it->second.value()});
    }
    auto index_of = [&](NodeId id) {
        auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                                   [](const NodeRecord& r, NodeId v) { return r.id < v; });
        return NodeIndex(it - nodes.begin());
    };

    const int T = store.window.n_months;
    // (month, lo, hi) -> attr of edge lo -> hi
    std::map<std::tuple<Month, NodeIndex, NodeIndex>, EdgeAttr> pairs;
    for (const auto& [key, counts] : store.buckets) {
        const NodeIndex s = index_of(key.sender);
        const NodeIndex r = index_of(key.receiver);
        const bool forward = s < r;
        EdgeAttr& a = pairs[{key.month, std::min(s, r), std::max(s, r)}];
        if (forward) {
            a.calls_fwd += counts.calls;
            a.sms_fwd += counts.sms;
        } else {
            a.calls_bwd += counts.calls;
            a.sms_bwd += counts.sms;
        }
    }

    std::vector<Snapshot> snapshots(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) snapshots[std::size_t(t)].month = t + 1;
    for (const auto& [key, attr] : pairs) {
        const auto& [month, lo, hi] = key;
        if (attr.total() == 0) continue;
        auto& edges = snapshots[std::size_t(month - 1)].edges;
        edges.push_back(TemporalEdge{lo, hi, attr});
        edges.push_back(TemporalEdge{hi, lo, attr.mirrored()});
    }
    for (auto& s : snapshots)
        std::sort(s.edges.begin(), s.edges.end(), [](const TemporalEdge& a, const TemporalEdge& b) {
            return std::pair{a.source, a.destination} < std::pair{b.source, b.destination};
        });
    return TemporalGraph(store.window, std::move(nodes), std::move(snapshots));
}

}  // namespace cdrgnn::graphstore
