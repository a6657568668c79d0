#pragma once

#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "cdrgnn/common/csv.hpp"
#include "cdrgnn/metrics/mae.hpp"
#include "cdrgnn/metrics/temporal.hpp"
#include "cdrgnn/metrics/wilcoxon.hpp"

namespace cdrgnn::metrics {

enum class EdgeSet : std::uint8_t { positive, random_negative, historical_negative };
inline constexpr std::array<EdgeSet, 3> kEdgeSets = {EdgeSet::positive, EdgeSet::random_negative,
                                                     EdgeSet::historical_negative};

inline const char* to_string(EdgeSet s) {
    switch (s) {
        case EdgeSet::positive: return "positive";
        case EdgeSet::random_negative: return "random_negative";
        case EdgeSet::historical_negative: return "historical_negative";
    }
    return "?";
}

/// One query edge with the prediction for month `month` and its raw target.
struct EvaluatedEdge {
    NodeIndex source = 0;
    NodeIndex destination = 0;
    Month month = 1;
    EdgeSet set = EdgeSet::positive;
    Channels pred{};
    Channels truth{};

    friend bool operator==(const EvaluatedEdge&, const EvaluatedEdge&) = default;
};

struct StrataBlock {
    EdgeSet set;
    StrataTable table;

    friend bool operator==(const StrataBlock&, const StrataBlock&) = default;
};

struct EvalReport {
    std::string model;
    std::array<ChannelStats, 3> sets{};  // indexed by EdgeSet
    Channels ave{};                      // unweighted mean of the set means that have edges
    std::vector<StrataBlock> strata;

    const ChannelStats& operator[](EdgeSet s) const { return sets[std::size_t(s)]; }
    double ave_mae() const { return 0.5 * (ave[0] + ave[1]); }

    const StrataTable* table(EdgeSet set, Scheme scheme) const {
        for (const auto& b : strata)
            if (b.set == set && b.table.scheme == scheme) return &b.table;
        return nullptr;
    }

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline Channels average_of_means(const std::array<ChannelStats, 3>& sets) {
    Channels ave{};
    int used = 0;
    for (const auto& s : sets) {
        if (s.count == 0) continue;
        ave[0] += s.mean[0];
        ave[1] += s.mean[1];
        ++used;
    }
    if (used > 0) {
        ave[0] /= used;
        ave[1] /= used;
    }
    return ave;
}

inline EvalReport build_report(std::string model, const TemporalGraph& g, const std::vector<EvaluatedEdge>& edges,
                               std::span<const Month> months, std::span<const Scheme> schemes) {
    if (edges.empty()) throw DataError("evaluate: no query edges in the evaluated months");
    EvalReport r;
    r.model = std::move(model);
    for (EdgeSet set : kEdgeSets) {
        std::vector<Channels> p, t;
        std::vector<EdgeContext> ctx;
        for (const auto& e : edges) {
            if (e.set != set) continue;
            p.push_back(e.pred);
            t.push_back(e.truth);
            ctx.push_back(EdgeContext{g.node(e.source).attr, g.node(e.destination).attr, e.month});
        }
        r.sets[std::size_t(set)] = mae(p, t);
        for (Scheme s : schemes) r.strata.push_back(StrataBlock{set, stratified_mae(p, t, ctx, s, months)});
    }
    r.ave = average_of_means(r.sets);
    return r;
}

inline std::string fmt(double v) { return csv::format_fixed(v, 6); }

inline constexpr const char* kSummaryHeader = "model,set,channel,mean,std,count";

inline void write_summary_rows(std::ostream& out, const EvalReport& r) {
    for (EdgeSet set : kEdgeSets) {
        const auto& s = r[set];
        for (int c = 0; c < 2; ++c) {
            out << r.model << ',' << to_string(set) << ',' << kChannelNames[c] << ',';
            if (s.count == 0)
                out << "absent,absent,0\n";
            else
                out << fmt(s.mean[c]) << ',' << fmt(s.std[c]) << ',' << s.count << '\n';
        }
    }
    std::size_t total = 0;
    for (const auto& s : r.sets) total += s.count;
    for (int c = 0; c < 2; ++c)
        out << r.model << ",ave," << kChannelNames[c] << ',' << fmt(r.ave[c]) << ",," << total << '\n';
}

inline constexpr const char* kStrataHeader = "model,set,channel,row,col,mean,std,count";

inline void write_strata_rows(std::ostream& out, const EvalReport& r, Scheme scheme) {
    for (const auto& b : r.strata) {
        if (b.table.scheme != scheme) continue;
        for (int c = 0; c < 2; ++c)
            for (const auto& cell : b.table.cells) {
                out << r.model << ',' << to_string(b.set) << ',' << kChannelNames[c] << ',' << cell.row << ','
                    << cell.col << ',';
                if (cell.stats)
                    out << fmt(cell.stats->mean[c]) << ',' << fmt(cell.stats->std[c]) << ',' << cell.stats->count
                        << '\n';
                else
                    out << "absent,absent,0\n";
            }
    }
}

inline constexpr const char* kPredictionHeader =
    "set,month,source,destination,pred_call,pred_sms,true_call,true_sms";

inline void write_predictions(std::ostream& out, const TemporalGraph& g, const std::vector<EvaluatedEdge>& edges) {
    out << kPredictionHeader << '\n';
    for (const auto& e : edges)
        out << to_string(e.set) << ',' << e.month << ',' << g.node(e.source).id << ',' << g.node(e.destination).id
            << ',' << csv::format_double(e.pred[0]) << ',' << csv::format_double(e.pred[1]) << ','
            << csv::format_double(e.truth[0]) << ',' << csv::format_double(e.truth[1]) << '\n';
}

inline void write_tea(std::ostream& out, const TeaSeries& tea) {
    out << "month,novel,reoccurring\n";
    for (const auto& m : tea) out << m.month << ',' << m.novel << ',' << m.reoccurring << '\n';
}

/// `presence` holds one 0/1 character per month.
inline void write_tet(std::ostream& out, const TemporalGraph& g, const TetLayout& tet) {
    out << "rank,source,destination,first_month,last_month,class,presence\n";
    for (std::size_t i = 0; i < tet.size(); ++i) {
        const auto& e = tet[i];
        std::string presence(std::size_t(g.num_months()), '0');
        for (Month m : e.months) presence[std::size_t(m - 1)] = '1';
        out << i << ',' << g.node(e.source).id << ',' << g.node(e.destination).id << ',' << e.first << ','
            << e.last << ',' << to_string(e.cls) << ',' << presence << '\n';
    }
}

/// Rows grouped per channel; best_columns lists the columns (lowest mean) this row wins.
inline void write_comparison(std::ostream& out, const std::vector<EvalReport>& reports) {
    out << "channel,model,positive_mean,positive_std,random_negative_mean,random_negative_std,"
           "historical_negative_mean,historical_negative_std,ave,best_columns\n";
    for (int c = 0; c < 2; ++c) {
        std::array<double, 4> best;
        best.fill(std::numeric_limits<double>::infinity());
        auto value = [&](const EvalReport& r, std::size_t col) {
            if (col == 3) return r.ave[c];
            const auto& s = r.sets[col];
            return s.count ? s.mean[c] : std::numeric_limits<double>::infinity();
        };
        for (const auto& r : reports)
            for (std::size_t col = 0; col < 4; ++col) best[col] = std::min(best[col], std::stod(fmt(value(r, col))));
        static constexpr std::array<const char*, 4> names = {"positive", "random_negative", "historical_negative",
                                                             "ave"};
        for (const auto& r : reports) {
            out << kChannelNames[c] << ',' << r.model;
            for (std::size_t s = 0; s < 3; ++s) {
                if (r.sets[s].count)
                    out << ',' << fmt(r.sets[s].mean[c]) << ',' << fmt(r.sets[s].std[c]);
                else
                    out << ",absent,absent";
            }
            out << ',' << fmt(r.ave[c]) << ',';
            std::string wins;
            for (std::size_t col = 0; col < 4; ++col)
                if (std::isfinite(value(r, col)) && std::stod(fmt(value(r, col))) == best[col])
                    wins += (wins.empty() ? "" : ";") + std::string(names[col]);
            out << wins << '\n';
        }
    }
}

}  // namespace cdrgnn::metrics
