#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cdrgnn/common/csv.hpp"
#include "cdrgnn/graphstore/types.hpp"

namespace cdrgnn::graphstore {

inline constexpr const char* kEventHeader = "ego,alter,timestamp,kind,direction";
inline constexpr const char* kAttributeHeader = "node,age,gender,lat,lon";

struct Diagnostic {
    std::string source;  // "events" or "attributes"
    std::size_t line = 0;
    std::string message;
};

/// Per-user activity measured on every accepted event the user took part in,
/// before any filtering. Filter predicates read these, which keeps filtering idempotent.
struct ActivitySummary {
    std::int64_t first_timestamp = 0;
    std::int64_t last_timestamp = 0;
    std::uint64_t calls = 0;
    std::uint64_t sms = 0;
    std::uint64_t years_active = 0;  // bit y set: active in window year first_year + y

    friend bool operator==(const ActivitySummary&, const ActivitySummary&) = default;
};

struct DirectedMonthKey {
    NodeId sender = 0;
    NodeId receiver = 0;
    Month month = 1;

    friend auto operator<=>(const DirectedMonthKey&, const DirectedMonthKey&) = default;
};

struct DirectedCounts {
    std::uint32_t calls = 0;
    std::uint32_t sms = 0;

    friend bool operator==(const DirectedCounts&, const DirectedCounts&) = default;
};

/// Events grouped per (sender, receiver, month), plus everything the filter stage needs.
struct RawStore {
    ObservationWindow window;
    std::map<NodeId, PartialNodeAttr> attributes;
    std::map<NodeId, ActivitySummary> activity;
    std::map<DirectedMonthKey, DirectedCounts> buckets;
    std::set<NodeId> unknown_ids;  // appear in events but not in the attribute table
    std::vector<Diagnostic> diagnostics;
    std::uint64_t event_count = 0;

    std::set<NodeId> node_ids() const {
        std::set<NodeId> ids;
        for (const auto& [id, _] : attributes) ids.insert(id);
        for (const auto& [id, _] : activity) ids.insert(id);
        return ids;
    }
    std::size_t node_count() const { return node_ids().size(); }

    friend bool operator==(const RawStore& a, const RawStore& b) {
        return a.window == b.window && a.attributes == b.attributes && a.activity == b.activity &&
               a.buckets == b.buckets && a.unknown_ids == b.unknown_ids && a.event_count == b.event_count;
    }
};

namespace detail {

inline std::optional<EventRecord> parse_event(std::string_view line, std::string& error) {
    const auto f = csv::split(line);
    if (f.size() != 5) {
        error = "expected 5 fields, got " + std::to_string(f.size());
        return std::nullopt;
    }
    EventRecord ev;
    auto ego = csv::parse_number<NodeId>(f[0]);
    auto alter = csv::parse_number<NodeId>(f[1]);
    auto ts = csv::parse_number<std::int64_t>(f[2]);
    if (!ego || !alter) {
        error = "unparsable node id";
        return std::nullopt;
    }
    if (!ts) {
        error = "unparsable timestamp";
        return std::nullopt;
    }
    ev.ego = *ego;
    ev.alter = *alter;
    ev.timestamp = *ts;
    if (f[3] == "call") ev.kind = EventKind::call;
    else if (f[3] == "sms") ev.kind = EventKind::sms;
    else {
        error = "unknown kind '" + std::string(f[3]) + "'";
        return std::nullopt;
    }
    if (f[4] == "out") ev.direction = Direction::outgoing;
    else if (f[4] == "in") ev.direction = Direction::incoming;
    else {
        error = "unknown direction '" + std::string(f[4]) + "'";
        return std::nullopt;
    }
    return ev;
}

inline bool parse_attribute(std::string_view line, NodeId& id, PartialNodeAttr& attr, std::string& error) {
    const auto f = csv::split(line);
    if (f.size() != 5) {
        error = "expected 5 fields, got " + std::to_string(f.size());
        return false;
    }
    auto node = csv::parse_number<NodeId>(f[0]);
    if (!node) {
        error = "unparsable node id";
        return false;
    }
    id = *node;
    attr = {};
    if (!f[1].empty()) {
        attr.age = csv::parse_number<int>(f[1]);
        if (!attr.age) {
            error = "unparsable age";
            return false;
        }
    }
    if (!f[2].empty()) {
        if (f[2] == "A") attr.gender = Gender::a;
        else if (f[2] == "B") attr.gender = Gender::b;
        else {
            error = "unknown gender '" + std::string(f[2]) + "'";
            return false;
        }
    }
    if (!f[3].empty()) {
        attr.latitude = csv::parse_number<double>(f[3]);
        if (!attr.latitude) {
            error = "unparsable latitude";
            return false;
        }
    }
    if (!f[4].empty()) {
        attr.longitude = csv::parse_number<double>(f[4]);
        if (!attr.longitude) {
            error = "unparsable longitude";
            return false;
        }
    }
    return true;
}

inline void touch_activity(RawStore& store, NodeId id, const EventRecord& ev) {
    auto [it, inserted] = store.activity.try_emplace(id);
    ActivitySummary& a = it->second;
    if (inserted) {
        a.first_timestamp = ev.timestamp;
        a.last_timestamp = ev.timestamp;
    } else {
        a.first_timestamp = std::min(a.first_timestamp, ev.timestamp);
        a.last_timestamp = std::max(a.last_timestamp, ev.timestamp);
    }
    (ev.kind == EventKind::call ? a.calls : a.sms) += 1;
    const int year_offset = store.window.year_of(ev.timestamp) - store.window.first_year();
    a.years_active |= std::uint64_t{1} << year_offset;
}

}  // namespace detail

/// Validates an event against the store's window and folds it into the buckets.
/// Returns an error message when the event is rejected.
inline std::optional<std::string> add_event(RawStore& store, const EventRecord& ev) {
    if (ev.ego == ev.alter) return std::string("ego equals alter");
    const auto month = store.window.month_of(ev.timestamp);
    if (!month) return std::string("timestamp outside observation window");
    DirectedCounts& c = store.buckets[DirectedMonthKey{ev.sender(), ev.receiver(), *month}];
    (ev.kind == EventKind::call ? c.calls : c.sms) += 1;
    detail::touch_activity(store, ev.ego, ev);
    detail::touch_activity(store, ev.alter, ev);
    ++store.event_count;
    return std::nullopt;
}

inline void finalize_unknown_ids(RawStore& store) {
    store.unknown_ids.clear();
    for (const auto& [id, _] : store.activity)
        if (!store.attributes.contains(id)) store.unknown_ids.insert(id);
}

/// In-memory ingestion; rejected events become diagnostics with their 1-based position.
inline RawStore ingest(std::span<const EventRecord> events, const std::map<NodeId, PartialNodeAttr>& attributes,
                       const ObservationWindow& window) {
    window.validate();
    RawStore store;
    store.window = window;
    store.attributes = attributes;
    for (std::size_t i = 0; i < events.size(); ++i)
        if (auto err = add_event(store, events[i])) store.diagnostics.push_back({"events", i + 1, *err});
    finalize_unknown_ids(store);
    return store;
}

/// Parses the two delimiter-separated inputs. Malformed rows become diagnostics
/// (line numbers count the header as line 1); only a header mismatch aborts.
inline RawStore ingest(std::istream& events, std::istream& attributes, const ObservationWindow& window) {
    window.validate();
    RawStore store;
    store.window = window;

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(attributes, line) || csv::trim(line) != kAttributeHeader)
        throw DataError(std::string("attribute file: header mismatch, expected '") + kAttributeHeader + "'");
    line_no = 1;
    while (std::getline(attributes, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        NodeId id = 0;
        PartialNodeAttr attr;
        std::string error;
        if (!detail::parse_attribute(line, id, attr, error)) {
            store.diagnostics.push_back({"attributes", line_no, error});
            continue;
        }
        if (!store.attributes.emplace(id, attr).second)
            store.diagnostics.push_back({"attributes", line_no, "duplicate node id " + std::to_string(id)});
    }

    if (!std::getline(events, line) || csv::trim(line) != kEventHeader)
        throw DataError(std::string("event file: header mismatch, expected '") + kEventHeader + "'");
    line_no = 1;
    while (std::getline(events, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        std::string error;
        auto ev = detail::parse_event(line, error);
        if (!ev) {
            store.diagnostics.push_back({"events", line_no, error});
            continue;
        }
        if (auto err = add_event(store, *ev)) store.diagnostics.push_back({"events", line_no, *err});
    }
    finalize_unknown_ids(store);
    return store;
}

inline RawStore ingest_files(const std::filesystem::path& events, const std::filesystem::path& attributes,
                             const ObservationWindow& window) {
    std::ifstream ev(events);
    if (!ev) throw DataError("cannot open event file " + events.string());
    std::ifstream at(attributes);
    if (!at) throw DataError("cannot open attribute file " + attributes.string());
    return ingest(ev, at, window);
}

inline void write_events(std::ostream& out, std::span<const EventRecord> events) {
    out << kEventHeader << '\n';
    for (const auto& e : events)
        out << e.ego << ',' << e.alter << ',' << e.timestamp << ',' << to_string(e.kind) << ','
            << to_string(e.direction) << '\n';
}

inline void write_attributes(std::ostream& out, const std::map<NodeId, PartialNodeAttr>& attributes) {
    out << kAttributeHeader << '\n';
    for (const auto& [id, a] : attributes) {
        out << id << ',';
        if (a.age) out << *a.age;
        out << ',';
        if (a.gender) out << to_string(*a.gender);
        out << ',';
        if (a.latitude) out << csv::format_double(*a.latitude);
        out << ',';
        if (a.longitude) out << csv::format_double(*a.longitude);
        out << '\n';
    }
}

}  // namespace cdrgnn::graphstore
