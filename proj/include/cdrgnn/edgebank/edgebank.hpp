#pragma once

#include <array>
#include <limits>
#include <span>
#include <unordered_map>
#include <variant>
#include <vector>

#include "cdrgnn/graphstore/types.hpp"
#include "cdrgnn/metrics/mae.hpp"
#include "cdrgnn/metrics/temporal.hpp"

namespace cdrgnn::edgebank {

using graphstore::EdgeAttr;
using graphstore::Month;
using graphstore::NodeIndex;
using graphstore::TemporalGraph;
using metrics::EdgeKey;

using Prediction = std::array<double, 4>;

/// Per ordered pair, the months it was present (increasing) with its attributes,
/// for months 1..frontier.
class EdgeHistory {
public:
    struct Observation {
        Month month;
        EdgeAttr attr;
    };

    EdgeHistory() = default;
    EdgeHistory(const TemporalGraph& g, Month frontier) { advance_to(g, frontier); }

    Month frontier() const { return frontier_; }

    void advance_to(const TemporalGraph& g, Month frontier) {
        if (frontier < frontier_) throw ValidationError("EdgeHistory: frontier cannot move backwards");
        if (frontier > g.num_months()) throw ValidationError("EdgeHistory: frontier beyond the last month");
        for (Month m = frontier_ + 1; m <= frontier; ++m)
            for (const auto& e : g.snapshot(m).edges) memory_[metrics::edge_key(e.source, e.destination)].push_back({m, e.attr});
        frontier_ = frontier;
    }

    const std::vector<Observation>* find(NodeIndex s, NodeIndex d) const {
        auto it = memory_.find(metrics::edge_key(s, d));
        return it == memory_.end() ? nullptr : &it->second;
    }

    std::size_t pair_count() const { return memory_.size(); }

private:
    Month frontier_ = 0;
    std::unordered_map<EdgeKey, std::vector<Observation>> memory_;
};

/// Mean attributes over the months in [t-w, t-1] where (s, d) was present; zero when absent.
inline Prediction redgebank_predict(const EdgeHistory& h, NodeIndex s, NodeIndex d, Month t, int w) {
    if (w < 1) throw ValidationError("rEdgeBank window must be >= 1");
    if (t > h.frontier() + 1)
        throw ValidationError("rEdgeBank: month " + std::to_string(t) + " lies beyond the history frontier");
    Prediction out{};
    const auto* obs = h.find(s, d);
    if (!obs) return out;
    int n = 0;
    for (auto it = obs->rbegin(); it != obs->rend(); ++it) {
        if (it->month >= t) continue;
        if (it->month < t - w) break;
        const auto a = it->attr.as_array();
        for (std::size_t k = 0; k < 4; ++k) out[k] += a[k];
        ++n;
    }
    if (n > 0)
        for (double& v : out) v /= n;
    return out;
}

/// Regression target channels (calls, SMS from source to destination).
inline metrics::Channels forward_channels(const Prediction& p) { return {p[0], p[1]}; }

struct Unlimited {};
struct Window {
    int w;
};

inline bool edgebank_exists(const EdgeHistory& h, NodeIndex s, NodeIndex d, Month t, std::variant<Unlimited, Window> mode) {
    const auto* obs = h.find(s, d);
    if (!obs) return false;
    const Month lo = std::holds_alternative<Window>(mode) ? t - std::get<Window>(mode).w : std::numeric_limits<Month>::min();
    for (const auto& o : *obs)
        if (o.month < t && o.month >= lo) return true;
    return false;
}

struct WindowScore {
    int w;
    double mae;  // positive-edge MAE averaged over both channels
};

/// Picks w minimising positive-edge MAE over the given months; ties keep the smaller w.
inline int tune_window(const TemporalGraph& g, std::span<const Month> months, std::span<const int> candidates,
                       std::vector<WindowScore>* scores = nullptr) {
    if (candidates.empty()) throw ValidationError("tune_window: no candidate windows");
    std::size_t n_edges = 0;
    for (Month t : months) n_edges += g.snapshot(t).edges.size();
    if (n_edges == 0) throw DataError("tune_window: validation months contain no edges");
    Month last = 0;
    for (Month t : months) last = std::max(last, t);
    const EdgeHistory h(g, last - 1);

    int best_w = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int w : candidates) {
        std::vector<metrics::Channels> p, truth;
        for (Month t : months)
            for (const auto& e : g.snapshot(t).edges) {
                p.push_back(forward_channels(redgebank_predict(h, e.source, e.destination, t, w)));
                truth.push_back({double(e.attr.calls_fwd), double(e.attr.sms_fwd)});
            }
        const auto s = metrics::mae(p, truth);
        const double score = 0.5 * (s.mean[0] + s.mean[1]);
        if (scores) scores->push_back({w, score});
        if (score < best || (score == best && w < best_w)) {
            best = score;
            best_w = w;
        }
    }
    return best_w;
}

}  // namespace cdrgnn::edgebank
