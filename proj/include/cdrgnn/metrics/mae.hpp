#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdrgnn/graphstore/types.hpp"

namespace cdrgnn::metrics {

// Channel 0 is calls, channel 1 is SMS, both from source to destination.
using Channels = std::array<double, 2>;
inline constexpr std::array<const char*, 2> kChannelNames = {"call", "sms"};

struct ChannelStats {
    Channels mean{};
    Channels std{};  // population standard deviation
    std::size_t count = 0;

    friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

inline ChannelStats mae(std::span<const Channels> preds, std::span<const Channels> truths) {
    if (preds.size() != truths.size())
        throw ValidationError("mae: " + std::to_string(preds.size()) + " predictions vs " +
                              std::to_string(truths.size()) + " targets");
    ChannelStats out;
    out.count = preds.size();
    if (preds.empty()) return out;
    const double n = double(preds.size());
    for (int c = 0; c < 2; ++c) {
        double sum = 0.0;
        for (std::size_t i = 0; i < preds.size(); ++i) sum += std::abs(truths[i][c] - preds[i][c]);
        const double mean = sum / n;
        double sq = 0.0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const double r = std::abs(truths[i][c] - preds[i][c]) - mean;
            sq += r * r;
        }
        out.mean[c] = mean;
        out.std[c] = std::sqrt(sq / n);
    }
    return out;
}

enum class Scheme { gender_pairs, age_grid, per_month };

inline const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::gender_pairs: return "gender";
        case Scheme::age_grid: return "age";
        case Scheme::per_month: return "month";
    }
    return "?";
}

struct AgeGroup {
    int lo, hi;
    std::string label() const { return std::to_string(lo) + "-" + std::to_string(hi); }
};
inline constexpr std::array<AgeGroup, 4> kAgeGroups = {{{18, 21}, {25, 35}, {45, 55}, {60, 65}}};

inline std::optional<std::size_t> age_group(int age) {
    for (std::size_t i = 0; i < kAgeGroups.size(); ++i)
        if (age >= kAgeGroups[i].lo && age <= kAgeGroups[i].hi) return i;
    return std::nullopt;
}

/// What the strata need to know about one evaluated edge.
struct EdgeContext {
    graphstore::NodeAttr source;
    graphstore::NodeAttr destination;
    graphstore::Month month = 1;
};

struct StratumCell {
    std::string row;  // source group, or the month
    std::string col;  // destination group; "all" for per-month cells
    std::optional<ChannelStats> stats;  // empty stratum stays absent, never 0

    friend bool operator==(const StratumCell&, const StratumCell&) = default;
};

struct StrataTable {
    Scheme scheme = Scheme::gender_pairs;
    std::vector<StratumCell> cells;

    friend bool operator==(const StrataTable&, const StrataTable&) = default;
};

/// `months` lists the per-month cells to emit (the test months).
inline StrataTable stratified_mae(std::span<const Channels> preds, std::span<const Channels> truths,
                                  std::span<const EdgeContext> context, Scheme scheme,
                                  std::span<const graphstore::Month> months = {}) {
    if (preds.size() != truths.size() || preds.size() != context.size())
        throw ValidationError("stratified_mae: predictions, targets and context must align");
    StrataTable table{scheme, {}};
    std::vector<std::vector<std::size_t>> members;
    std::vector<std::pair<std::string, std::string>> labels;
    auto assign = [&](auto&& cell_of) {
        for (std::size_t i = 0; i < preds.size(); ++i)
            if (auto c = cell_of(context[i])) members[*c].push_back(i);
    };
    switch (scheme) {
        case Scheme::gender_pairs:
            for (auto s : {graphstore::Gender::a, graphstore::Gender::b})
                for (auto d : {graphstore::Gender::a, graphstore::Gender::b})
                    labels.emplace_back(graphstore::to_string(s), graphstore::to_string(d));
            members.resize(labels.size());
            assign([](const EdgeContext& c) -> std::optional<std::size_t> {
                return std::size_t(c.source.gender) * 2 + std::size_t(c.destination.gender);
            });
            break;
        case Scheme::age_grid:
            for (const auto& s : kAgeGroups)
                for (const auto& d : kAgeGroups) labels.emplace_back(s.label(), d.label());
            members.resize(labels.size());
            assign([](const EdgeContext& c) -> std::optional<std::size_t> {
                auto s = age_group(c.source.age), d = age_group(c.destination.age);
                if (!s || !d) return std::nullopt;
                return *s * kAgeGroups.size() + *d;
            });
            break;
        case Scheme::per_month:
            for (auto m : months) labels.emplace_back(std::to_string(m), "all");
            members.resize(labels.size());
            assign([&](const EdgeContext& c) -> std::optional<std::size_t> {
                for (std::size_t i = 0; i < months.size(); ++i)
                    if (months[i] == c.month) return i;
                return std::nullopt;
            });
            break;
    }
    for (std::size_t c = 0; c < labels.size(); ++c) {
        StratumCell cell{labels[c].first, labels[c].second, std::nullopt};
        if (!members[c].empty()) {
            std::vector<Channels> p, t;
            for (std::size_t i : members[c]) {
                p.push_back(preds[i]);
                t.push_back(truths[i]);
            }
            cell.stats = mae(p, t);
        }
        table.cells.push_back(std::move(cell));
    }
    return table;
}

}  // namespace cdrgnn::metrics
