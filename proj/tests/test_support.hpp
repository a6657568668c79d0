#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "cdrgnn/graphstore.hpp"

namespace testing_support {

using namespace cdrgnn::graphstore;

inline TemporalGraph make_graph(const std::vector<std::vector<std::tuple<NodeIndex, NodeIndex, EdgeAttr>>>& months,
                                std::size_t n, std::vector<NodeAttr> attrs = {}) {
    std::vector<NodeRecord> nodes;
    for (std::size_t i = 0; i < n; ++i)
        nodes.push_back(NodeRecord{NodeId(i), attrs.empty() ? NodeAttr{20 + int(i), Gender::a, 60.0 + double(i), 24.0}
                                                            : attrs[i]});
    std::vector<Snapshot> snaps;
    for (std::size_t t = 0; t < months.size(); ++t) {
        Snapshot s{Month(t + 1), {}};
        for (auto [a, b, attr] : months[t]) s.edges.push_back({a, b, attr});
        std::sort(s.edges.begin(), s.edges.end(), [](auto& x, auto& y) {
            return std::pair{x.source, x.destination} < std::pair{y.source, y.destination};
        });
        snaps.push_back(s);
    }
    return TemporalGraph(ObservationWindow{2007, 1, int(months.size())}, nodes, snaps);
}

/// Random directed snapshots; `keep` is the chance an edge carries into the next month.
inline TemporalGraph random_graph(std::mt19937_64& rng, std::size_t n, int T, double density = 0.08,
                                  double keep = 0.6, bool mirrored = false) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> count(0, 6), age(16, 70);
    std::vector<NodeRecord> nodes;
    for (std::size_t i = 0; i < n; ++i)
        nodes.push_back(NodeRecord{NodeId(100 + 3 * i),
                                   NodeAttr{age(rng), u(rng) < 0.5 ? Gender::a : Gender::b, 60.0 + u(rng), 24.0 + u(rng)}});
    std::vector<Snapshot> snaps;
    std::set<std::pair<NodeIndex, NodeIndex>> prev;
    for (int t = 1; t <= T; ++t) {
        std::set<std::pair<NodeIndex, NodeIndex>> cur;
        for (auto p : prev)
            if (u(rng) < keep) cur.insert(p);
        for (NodeIndex i = 0; i < n; ++i)
            for (NodeIndex j = 0; j < n; ++j)
                if (i != j && u(rng) < density / std::max(1, T / 3)) cur.insert({i, j});
        if (mirrored) {
            auto copy = cur;
            for (auto [a, b] : copy) cur.insert({b, a});
        }
        Snapshot s{t, {}};
        for (auto [a, b] : cur) {
            EdgeAttr e{std::uint32_t(count(rng)), std::uint32_t(count(rng)), std::uint32_t(count(rng)),
                       std::uint32_t(count(rng))};
            if (e.total() == 0) e.calls_fwd = 1;
            s.edges.push_back({a, b, e});
        }
        if (mirrored)  // mirrored graphs carry mirrored attributes, like aggregate_monthly output
            for (auto& e : s.edges)
                if (e.source > e.destination)
                    for (const auto& f : s.edges)
                        if (f.source == e.destination && f.destination == e.source) e.attr = f.attr.mirrored();
        snaps.push_back(s);
        prev = cur;
    }
    return TemporalGraph(ObservationWindow{2007, 1, T}, nodes, snaps);
}

}  // namespace testing_support
