#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdrgnn/common/error.hpp"

namespace cdrgnn::graphstore {

using NodeId = std::int64_t;      // identifier as it appears in the input files
using NodeIndex = std::uint32_t;  // dense position in a TemporalGraph's node table
using Month = int;                // 1-based month index within the observation window

enum class EventKind : std::uint8_t { call, sms };
enum class Direction : std::uint8_t { outgoing, incoming };
enum class Gender : std::uint8_t { a, b };

inline const char* to_string(EventKind k) { return k == EventKind::call ? "call" : "sms"; }
inline const char* to_string(Direction d) { return d == Direction::outgoing ? "out" : "in"; }
inline const char* to_string(Gender g) { return g == Gender::a ? "A" : "B"; }

/// One logged call or SMS as seen from the ego's side. `outgoing` means ego -> alter.
struct EventRecord {
    NodeId ego = 0;
    NodeId alter = 0;
    std::int64_t timestamp = 0;  // seconds since the Unix epoch, UTC
    EventKind kind = EventKind::call;
    Direction direction = Direction::outgoing;

    NodeId sender() const { return direction == Direction::outgoing ? ego : alter; }
    NodeId receiver() const { return direction == Direction::outgoing ? alter : ego; }

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct NodeAttr {
    int age = 0;
    Gender gender = Gender::a;
    double latitude = 0.0;
    double longitude = 0.0;

    friend bool operator==(const NodeAttr&, const NodeAttr&) = default;
};

/// Attribute row as read from disk; any field may be missing.
struct PartialNodeAttr {
    std::optional<int> age;
    std::optional<Gender> gender;
    std::optional<double> latitude;
    std::optional<double> longitude;

    bool complete() const { return age && gender && latitude && longitude; }
    NodeAttr value() const { return NodeAttr{*age, *gender, *latitude, *longitude}; }

    friend bool operator==(const PartialNodeAttr&, const PartialNodeAttr&) = default;
};

/// Monthly counts for a directed edge (s, d): forward is s -> d, backward is d -> s.
struct EdgeAttr {
    std::uint32_t calls_fwd = 0;
    std::uint32_t sms_fwd = 0;
    std::uint32_t calls_bwd = 0;
    std::uint32_t sms_bwd = 0;

    static constexpr std::size_t size = 4;

    std::array<double, 4> as_array() const {
        return {double(calls_fwd), double(sms_fwd), double(calls_bwd), double(sms_bwd)};
    }
    EdgeAttr mirrored() const { return EdgeAttr{calls_bwd, sms_bwd, calls_fwd, sms_fwd}; }
    std::uint64_t total() const { return std::uint64_t(calls_fwd) + sms_fwd + calls_bwd + sms_bwd; }

    friend bool operator==(const EdgeAttr&, const EdgeAttr&) = default;
};

inline constexpr std::array<const char*, 4> kEdgeFeatureNames = {"calls_fwd", "sms_fwd", "calls_bwd",
                                                                 "sms_bwd"};

struct TemporalEdge {
    NodeIndex source = 0;
    NodeIndex destination = 0;
    EdgeAttr attr;

    friend bool operator==(const TemporalEdge&, const TemporalEdge&) = default;
};

/// Edges of one month, sorted by (source, destination); at most one record per ordered pair.
struct Snapshot {
    Month month = 1;
    std::vector<TemporalEdge> edges;

    friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct NodeRecord {
    NodeId id = 0;
    NodeAttr attr;

    friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

/// Calendar months [start, start + n_months) in UTC.
struct ObservationWindow {
    int start_year = 2007;
    unsigned start_month = 1;
    int n_months = 36;

    std::chrono::sys_days month_start(Month m) const {
        using namespace std::chrono;
        const year_month first{year{start_year}, month{start_month}};
        const year_month ym = first + months{m - 1};
        return sys_days{ym / 1};
    }

    std::int64_t start_timestamp() const { return to_seconds(month_start(1)); }
    std::int64_t end_timestamp() const { return to_seconds(month_start(n_months + 1)); }

    /// Month index for a timestamp, or nullopt when it falls outside the window.
    std::optional<Month> month_of(std::int64_t timestamp) const {
        using namespace std::chrono;
        if (timestamp < start_timestamp() || timestamp >= end_timestamp()) return std::nullopt;
        const sys_days day = floor<days>(sys_seconds{seconds{timestamp}});
        const year_month_day ymd{day};
        const int delta = (int(ymd.year()) - start_year) * 12 + int(unsigned(ymd.month())) - int(start_month);
        return delta + 1;
    }

    /// Calendar month (1..12) of window month m.
    unsigned calendar_month(Month m) const {
        return (start_month - 1 + unsigned(m - 1)) % 12 + 1;
    }

    int first_year() const { return start_year; }
    int last_year() const { return start_year + int((start_month - 1 + unsigned(n_months - 1)) / 12); }
    int year_count() const { return last_year() - first_year() + 1; }

    int year_of(std::int64_t timestamp) const {
        using namespace std::chrono;
        const year_month_day ymd{floor<days>(sys_seconds{seconds{timestamp}})};
        return int(ymd.year());
    }

    static std::int64_t day_number(std::int64_t timestamp) {
        using namespace std::chrono;
        return floor<days>(sys_seconds{seconds{timestamp}}).time_since_epoch().count();
    }

    void validate() const {
        require(start_month >= 1 && start_month <= 12, "observation window: start month must be in 1..12");
        require(n_months >= 1, "observation window: n_months must be >= 1");
    }

    friend bool operator==(const ObservationWindow&, const ObservationWindow&) = default;

private:
    static std::int64_t to_seconds(std::chrono::sys_days d) {
        return std::chrono::duration_cast<std::chrono::seconds>(d.time_since_epoch()).count();
    }
};

/// Nodes (sorted by id) plus one snapshot per month 1..T.
class TemporalGraph {
public:
    TemporalGraph() = default;
    TemporalGraph(ObservationWindow window, std::vector<NodeRecord> nodes, std::vector<Snapshot> snapshots)
        : window_(window), nodes_(std::move(nodes)), snapshots_(std::move(snapshots)) {
        check_invariants();
    }

    const ObservationWindow& window() const { return window_; }
    std::size_t num_nodes() const { return nodes_.size(); }
    int num_months() const { return int(snapshots_.size()); }

    const std::vector<NodeRecord>& nodes() const { return nodes_; }
    const NodeRecord& node(NodeIndex i) const { return nodes_.at(i); }

    const std::vector<Snapshot>& snapshots() const { return snapshots_; }
    const Snapshot& snapshot(Month m) const {
        if (m < 1 || m > num_months()) throw ValidationError("snapshot month out of range: " + std::to_string(m));
        return snapshots_[std::size_t(m - 1)];
    }

    std::optional<NodeIndex> index_of(NodeId id) const {
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                                   [](const NodeRecord& r, NodeId v) { return r.id < v; });
        if (it == nodes_.end() || it->id != id) return std::nullopt;
        return NodeIndex(it - nodes_.begin());
    }

    std::size_t temporal_edge_count() const {
        std::size_t n = 0;
        for (const auto& s : snapshots_) n += s.edges.size();
        return n;
    }

    /// Edge attributes of (s, d) in month m, if the edge exists.
    const EdgeAttr* find_edge(Month m, NodeIndex s, NodeIndex d) const {
        const auto& edges = snapshot(m).edges;
        auto it = std::lower_bound(edges.begin(), edges.end(), std::pair{s, d},
                                   [](const TemporalEdge& e, const std::pair<NodeIndex, NodeIndex>& k) {
                                       return std::pair{e.source, e.destination} < k;
                                   });
        if (it == edges.end() || it->source != s || it->destination != d) return nullptr;
        return &it->attr;
    }

    friend bool operator==(const TemporalGraph&, const TemporalGraph&) = default;

private:
    void check_invariants() const {
        for (std::size_t i = 1; i < nodes_.size(); ++i)
            if (!(nodes_[i - 1].id < nodes_[i].id)) throw DataError("temporal graph: node ids must be strictly increasing");
        for (std::size_t t = 0; t < snapshots_.size(); ++t) {
            const auto& s = snapshots_[t];
            if (s.month != Month(t + 1)) throw DataError("temporal graph: snapshot months must be contiguous from 1");
            for (std::size_t e = 0; e < s.edges.size(); ++e) {
                const auto& edge = s.edges[e];
                if (edge.source >= nodes_.size() || edge.destination >= nodes_.size())
                    throw DataError("temporal graph: edge endpoint outside node table");
                if (e > 0) {
                    const auto& prev = s.edges[e - 1];
                    if (!(std::pair{prev.source, prev.destination} < std::pair{edge.source, edge.destination}))
                        throw DataError("temporal graph: duplicate or unsorted edge in month " + std::to_string(s.month));
                }
            }
        }
    }

    ObservationWindow window_;
    std::vector<NodeRecord> nodes_;
    std::vector<Snapshot> snapshots_;
};

}  // namespace cdrgnn::graphstore
