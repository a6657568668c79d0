#include <gtest/gtest.h>

#include <sstream>

#include "cdrgnn/graphstore.hpp"
#include "cdrgnn/metrics.hpp"
#include "cdrgnn/synthgen.hpp"

using namespace cdrgnn;
using namespace cdrgnn::synthgen;

namespace {

GenConfig small_config(int nodes = 300, int months = 12) {
    GenConfig c;
    c.n_nodes = nodes;
    c.n_months = months;
    c.rng_seed = 42;
    return c;
}

graphstore::TemporalGraph pipeline(const GeneratedData& d) {
    auto store = graphstore::ingest(d.events, d.attributes, d.window);
    EXPECT_TRUE(store.diagnostics.empty());
    return graphstore::aggregate_monthly(graphstore::filter_users(store));
}

std::vector<double> events_per_month(const GeneratedData& d) {
    std::vector<double> n(std::size_t(d.window.n_months), 0.0);
    for (const auto& e : d.events) n[std::size_t(*d.window.month_of(e.timestamp) - 1)] += 1.0;
    return n;
}

}  // namespace

TEST(GenConfig, RoundTripAndErrors) {
    GenConfig c = small_config();
    c.tie_persistence = 0.8125;
    c.profile[1][3] = {2.5, 7.25};
    std::stringstream buf;
    write_config(buf, c);
    EXPECT_EQ(read_config(buf), c);

    std::istringstream no_version("n_nodes = 10\n");
    EXPECT_THROW(read_config(no_version), DataError);
    std::istringstream unknown("version = 1\nwarp = 3\n");
    EXPECT_THROW(read_config(unknown), DataError);
    std::istringstream bad_prob("version = 1\ntie_persistence = 1.5\n");
    EXPECT_THROW(read_config(bad_prob), ValidationError);
    std::istringstream partial("# comment\nversion = 1\nn_nodes = 77\n");
    EXPECT_EQ(read_config(partial).n_nodes, 77);
}

TEST(Generate, DeterministicBytes) {
    const auto c = small_config(150, 6);
    const auto a = generate(c), b = generate(c);
    std::ostringstream ea, eb, na, nb;
    graphstore::write_events(ea, a.events);
    graphstore::write_events(eb, b.events);
    graphstore::write_attributes(na, a.attributes);
    graphstore::write_attributes(nb, b.attributes);
    EXPECT_EQ(ea.str(), eb.str());
    EXPECT_EQ(na.str(), nb.str());
    auto c2 = c;
    c2.rng_seed = 43;
    EXPECT_NE(generate(c2).events, a.events);
}

TEST(Generate, IngestsWithoutRejectedRows) {
    const auto d = generate(small_config());
    std::ostringstream ev, at;
    graphstore::write_events(ev, d.events);
    graphstore::write_attributes(at, d.attributes);
    std::istringstream ei(ev.str()), ai(at.str());
    const auto store = graphstore::ingest(ei, ai, d.window);
    EXPECT_TRUE(store.diagnostics.empty());
    EXPECT_EQ(store.event_count, d.events.size());
    EXPECT_TRUE(store.unknown_ids.empty());
}

TEST(Generate, FullPersistenceNoBirthsGivesNoveltyOneOverT) {
    auto c = small_config(200, 12);
    c.tie_persistence = 1.0;
    c.novel_tie_rate = 0.0;
    const auto g = pipeline(generate(c));
    EXPECT_DOUBLE_EQ(metrics::novelty(g), 1.0 / 12.0);
}

TEST(Generate, AboutHalfOfTiesPresentInFirstMonth) {
    const auto c = small_config(1000, 36);
    const SeedSplitter seeds(c.rng_seed);
    const auto pop = make_population(c, seeds);
    const auto ties = simulate_ties(c, pop, seeds);
    std::size_t first = 0, ever = 0;
    for (const auto& t : ties) {
        bool any = false;
        for (auto a : t.active) any |= a != 0;
        ever += any;
        first += t.active[0] != 0;
    }
    const double share = double(first) / double(ever);
    EXPECT_GT(share, 0.35);
    EXPECT_LT(share, 0.65);
}

TEST(Generate, DecemberBoost) {
    for (double boost : {1.0, 2.0}) {
        auto c = small_config(2000, 24);
        c.december_boost = boost;
        const auto n = events_per_month(generate(c));
        double others = 0.0;
        int k = 0;
        for (int m = 1; m <= 24; ++m)
            if (m % 12 != 0) {
                others += n[std::size_t(m - 1)];
                ++k;
            }
        others /= k;
        const double ratio = 0.5 * (n[11] + n[23]) / others;
        EXPECT_NEAR(ratio, boost, 0.1 * boost) << "boost " << boost;
    }
}

TEST(Generate, ReoccurrenceMonotoneInPersistence) {
    auto c = small_config(2000, 36);
    double prev = -1.0;
    for (double p = 0.40; p <= 0.96; p += 0.04) {
        c.tie_persistence = p;
        const double r = measure_presence(c).reoccurrence;
        EXPECT_GE(r, prev) << "p=" << p;
        prev = r;
    }
}

TEST(Generate, PresenceIndicesMatchPipeline) {
    const auto c = small_config(600, 12);
    const auto g = pipeline(generate(c));
    const auto x = measure_presence(c);
    const int cut = graphstore::default_split(12).val_cutoff;
    // filtering can drop a few sparse users, so agreement is close rather than exact
    EXPECT_NEAR(metrics::novelty(g), x.novelty, 0.01);
    EXPECT_NEAR(metrics::reoccurrence(g, cut), x.reoccurrence, 0.02);
    EXPECT_NEAR(metrics::surprise(g, cut), x.surprise, 0.02);
}

TEST(Calibrate, FeasibleStartIsFixedPoint) {
    auto c = small_config(2000, 36);
    const CalibrationTarget target;
    const auto x = measure_presence(c);
    ASSERT_TRUE(target.satisfied(x)) << x.novelty << ' ' << x.reoccurrence << ' ' << x.surprise;
    const auto r = calibrate(c, target, 10);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.evaluations, 1);
    EXPECT_EQ(r.config, c);
}

TEST(Calibrate, ExhaustedBudgetAndRecovery) {
    auto c = small_config(2000, 36);
    c.tie_persistence = 0.45;
    c.novel_tie_rate = 0.08;
    const CalibrationTarget target;
    const auto stuck = calibrate(c, target, 1);
    EXPECT_FALSE(stuck.converged);
    EXPECT_EQ(stuck.config, c);
    const auto r = calibrate(c, target, 60);
    EXPECT_TRUE(r.converged) << r.achieved.novelty << ' ' << r.achieved.reoccurrence << ' ' << r.achieved.surprise;
    EXPECT_THROW(calibrate(c, target, 0), ValidationError);
}
