#pragma once

#include <set>

#include "cdrgnn/graphstore/ingest.hpp"

namespace cdrgnn::graphstore {

struct FilterPolicy {
    int min_age = 18;
    int max_age = 65;
    double max_daily_calls = 8.0;
    bool require_yearly_activity = true;

    void validate() const {
        require(min_age <= max_age, "filter policy: min_age must not exceed max_age");
        require(max_daily_calls >= 0.0, "filter policy: max_daily_calls must be non-negative");
    }
};

/// Calls per day over the user's active span, counted in whole calendar days
/// from the first to the last event inclusive (so never below one day).
inline double daily_call_average(const ActivitySummary& a) {
    const std::int64_t days =
        ObservationWindow::day_number(a.last_timestamp) - ObservationWindow::day_number(a.first_timestamp) + 1;
    return double(a.calls) / double(std::max<std::int64_t>(days, 1));
}

inline bool active_every_year(const ActivitySummary& a, const ObservationWindow& w) {
    const int years = w.year_count();
    const std::uint64_t all = years >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << years) - 1;
    return (a.years_active & all) == all;
}

inline bool passes(const RawStore& store, NodeId id, const FilterPolicy& policy) {
    auto attr = store.attributes.find(id);
    if (attr == store.attributes.end() || !attr->second.complete()) return false;
    const int age = *attr->second.age;
    if (age < policy.min_age || age > policy.max_age) return false;
    auto act = store.activity.find(id);
    if (act != store.activity.end() && daily_call_average(act->second) > policy.max_daily_calls) return false;
    if (policy.require_yearly_activity) {
        if (act == store.activity.end() || !active_every_year(act->second, store.window)) return false;
    }
    return true;
}

/// Keeps users that satisfy every policy predicate and drops all events touching anyone else.
inline RawStore filter_users(const RawStore& store, const FilterPolicy& policy = {}) {
    policy.validate();
    std::set<NodeId> keep;
    for (NodeId id : store.node_ids())
        if (passes(store, id, policy)) keep.insert(id);

    RawStore out;
    out.window = store.window;
    out.diagnostics = store.diagnostics;
    for (NodeId id : keep) {
        out.attributes.emplace(id, store.attributes.at(id));
        if (auto it = store.activity.find(id); it != store.activity.end()) out.activity.emplace(id, it->second);
    }
    for (const auto& [key, counts] : store.buckets) {
        if (!keep.contains(key.sender) || !keep.contains(key.receiver)) continue;
        out.buckets.emplace(key, counts);
        out.event_count += std::uint64_t(counts.calls) + counts.sms;
    }
    return out;
}

}  // namespace cdrgnn::graphstore
