#include <gtest/gtest.h>

#include <sstream>

#include "cdrgnn/metrics.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace cdrgnn;
using namespace cdrgnn::metrics;
using graphstore::EdgeAttr;
using testing_support::make_graph;

namespace {

const EdgeAttr one{1, 0, 0, 0};

// e1 = (0,1), e2 = (1,2), e3 = (2,0), e4 = (0,2)
TemporalGraph dev_test_graph() {
    return make_graph({{{0, 1, one}, {1, 2, one}}, {{2, 0, one}}, {{1, 2, one}, {2, 0, one}, {0, 2, one}}}, 3);
}

}  // namespace

TEST(Novelty, SingleMonthIsOne) {
    EXPECT_DOUBLE_EQ(novelty(make_graph({{{0, 1, one}, {1, 0, one}}}, 2)), 1.0);
}

TEST(Novelty, TwoMonths) {
    const auto g = make_graph({{{0, 1, one}, {1, 2, one}}, {{0, 1, one}, {2, 0, one}}}, 3);
    EXPECT_DOUBLE_EQ(novelty(g), 0.75);
}

TEST(Novelty, SkipsEmptyMonthsAndRejectsEmptyGraph) {
    const auto g = make_graph({{{0, 1, one}}, {}, {{0, 1, one}}}, 2);
    EXPECT_DOUBLE_EQ(novelty(g), 0.5);
    EXPECT_THROW(novelty(make_graph({{}, {}}, 2)), DataError);
}

TEST(Reoccurrence, DevTestExample) {
    const auto g = dev_test_graph();
    // E_dev = {e1, e2, e3}, E_test = {e2, e3, e4}
    EXPECT_DOUBLE_EQ(reoccurrence(g, 2), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(surprise(g, 2), 1.0 / 3.0);
}

TEST(Reoccurrence, DisjointAndSubset) {
    const auto g = make_graph({{{0, 1, one}}, {{1, 0, one}}}, 2);
    EXPECT_DOUBLE_EQ(reoccurrence(g, 1), 0.0);
    const auto h = make_graph({{{0, 1, one}, {1, 0, one}}, {{1, 0, one}}}, 2);
    EXPECT_DOUBLE_EQ(surprise(h, 1), 0.0);
}

TEST(Reoccurrence, BadCutoffsAndEmptySides) {
    const auto g = dev_test_graph();
    EXPECT_THROW(reoccurrence(g, 0), ValidationError);
    EXPECT_THROW(reoccurrence(g, 3), ValidationError);
    EXPECT_THROW(reoccurrence(make_graph({{}, {{0, 1, one}}}, 2), 1), DataError);
    EXPECT_THROW(surprise(make_graph({{{0, 1, one}}, {}}, 2), 1), DataError);
}

TEST(Tea, Examples) {
    const auto g = make_graph({{{0, 1, one}}, {{0, 1, one}, {1, 2, one}}}, 3);
    const auto tea = tea_series(g);
    ASSERT_EQ(tea.size(), 2u);
    EXPECT_EQ(tea[0], (TeaMonth{1, 1, 0}));
    EXPECT_EQ(tea[1], (TeaMonth{2, 1, 1}));

    const auto same = make_graph({{{0, 1, one}, {1, 0, one}}, {{0, 1, one}, {1, 0, one}}, {{0, 1, one}, {1, 0, one}}}, 2);
    const auto s = tea_series(same);
    EXPECT_EQ(s[0], (TeaMonth{1, 2, 0}));
    EXPECT_EQ(s[1], (TeaMonth{2, 0, 2}));
    EXPECT_EQ(s[2], (TeaMonth{3, 0, 2}));
}

TEST(Tet, ClassesAndOrder) {
    const auto always = make_graph({{{0, 1, one}}, {{0, 1, one}}, {{0, 1, one}}}, 2);
    const auto t1 = tet_layout(always, 2);
    ASSERT_EQ(t1.size(), 1u);
    EXPECT_EQ(t1[0].cls, EdgeClass::transductive);

    const auto late = make_graph({{{0, 1, one}}, {}, {{1, 0, one}}}, 2);
    const auto t2 = tet_layout(late, 2);
    ASSERT_EQ(t2.size(), 2u);
    EXPECT_EQ(t2[0].cls, EdgeClass::train_only);
    EXPECT_EQ(t2[1].cls, EdgeClass::inductive);

    const auto tie = make_graph({{{2, 1, one}, {0, 2, one}}, {{2, 1, one}, {0, 2, one}}}, 3);
    const auto t3 = tet_layout(tie, 1);
    EXPECT_EQ(t3[0].source, 0u);
    EXPECT_EQ(t3[1].source, 2u);
}

TEST(Tet, PermutationOfDistinctEdges) {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const auto g = testing_support::random_graph(rng, 15, 6);
        const auto tet = tet_layout(g, 4);
        std::set<std::pair<NodeIndex, NodeIndex>> seen;
        for (const auto& e : tet) EXPECT_TRUE(seen.insert({e.source, e.destination}).second);
        EXPECT_EQ(seen, oracle::range_edges(g, 1, 6));
    }
}

TEST(Metrics, MatchBruteForceOnRandomGraphs) {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 60; ++rep) {
        const int T = 2 + int(rng() % 10);
        const auto g = testing_support::random_graph(rng, 5 + rng() % 40, T);
        if (g.temporal_edge_count() == 0) continue;
        EXPECT_DOUBLE_EQ(novelty(g), oracle::novelty(g));
        const auto tea = tea_series(g);
        const auto ref = oracle::tea(g);
        for (int t = 0; t < T; ++t) {
            EXPECT_EQ(tea[t].novel, ref[t][0]);
            EXPECT_EQ(tea[t].reoccurring, ref[t][1]);
            EXPECT_EQ(tea[t].novel + tea[t].reoccurring, g.snapshot(t + 1).edges.size());
        }
        for (Month cut = 1; cut < T; ++cut) {
            const auto dev = oracle::range_edges(g, 1, cut), test = oracle::range_edges(g, cut + 1, T);
            if (!dev.empty()) {
                const double r = reoccurrence(g, cut);
                EXPECT_DOUBLE_EQ(r, oracle::reoccurrence(g, cut));
                // complementarity over E_dev
                EXPECT_DOUBLE_EQ(r + double(oracle::minus(dev, test).size()) / double(dev.size()), 1.0);
            }
            if (!test.empty()) {
                EXPECT_DOUBLE_EQ(surprise(g, cut), oracle::surprise(g, cut));
            }
        }
    }
}

TEST(Mae, Examples) {
    std::vector<Channels> truth{{3, 2}, {1, 0}}, pred{{1, 2}, {1, 0}};
    const auto s = mae(pred, truth);
    EXPECT_DOUBLE_EQ(s.mean[0], 1.0);
    EXPECT_DOUBLE_EQ(s.mean[1], 0.0);
    EXPECT_DOUBLE_EQ(s.std[0], 1.0);
    const auto perfect = mae(truth, truth);
    EXPECT_EQ(perfect.mean, (Channels{0, 0}));
    EXPECT_EQ(perfect.std, (Channels{0, 0}));
    std::vector<Channels> a{{5, 1}}, b{{2, 2}};
    EXPECT_DOUBLE_EQ(mae(a, b).std[0], 0.0);
    EXPECT_THROW(mae(a, truth), ValidationError);
}

TEST(Mae, MatchesScalarLoop) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3, 10);
    for (std::size_t n : {1u, 7u, 100u, 10000u}) {
        std::vector<Channels> p(n), t(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = {u(rng), u(rng)};
            t[i] = {std::round(u(rng)), std::round(u(rng))};
        }
        const auto s = mae(p, t);
        const auto ref = oracle::mae({p.begin(), p.end()}, {t.begin(), t.end()});
        for (int c = 0; c < 2; ++c) {
            EXPECT_EQ(s.mean[c], ref[c][0]);
            EXPECT_EQ(s.std[c], ref[c][1]);
            EXPECT_GE(s.std[c], 0.0);
        }
    }
}

TEST(Strata, GenderAgeMonth) {
    using graphstore::Gender;
    using graphstore::NodeAttr;
    NodeAttr f{30, Gender::b, 0, 0}, m{23, Gender::a, 0, 0};
    std::vector<Channels> p{{1, 1}, {0, 0}}, t{{2, 1}, {0, 3}};
    std::vector<EdgeContext> ctx{{f, m, 5}, {f, m, 6}};
    const auto g = stratified_mae(p, t, ctx, Scheme::gender_pairs);
    ASSERT_EQ(g.cells.size(), 4u);
    int populated = 0;
    for (const auto& c : g.cells)
        if (c.stats) {
            ++populated;
            EXPECT_EQ(c.row, "B");
            EXPECT_EQ(c.col, "A");
            EXPECT_EQ(c.stats->count, 2u);
        }
    EXPECT_EQ(populated, 1);

    const auto age = stratified_mae(p, t, ctx, Scheme::age_grid);
    EXPECT_EQ(age.cells.size(), 16u);
    for (const auto& c : age.cells) EXPECT_FALSE(c.stats) << "aged 23 falls outside every group";

    const std::vector<Month> months{1, 2, 3, 4, 5, 6};
    const auto pm = stratified_mae(p, t, ctx, Scheme::per_month, months);
    ASSERT_EQ(pm.cells.size(), 6u);
    EXPECT_FALSE(pm.cells[0].stats);
    ASSERT_TRUE(pm.cells[4].stats);
    EXPECT_DOUBLE_EQ(pm.cells[4].stats->mean[0], 1.0);
    EXPECT_DOUBLE_EQ(pm.cells[5].stats->mean[1], 3.0);
}

TEST(Wilcoxon, Examples) {
    std::vector<double> a{1, 2, 3, 4, 5, 6}, b{2, 3, 4, 5, 6, 7};
    const auto r = wilcoxon_signed_rank(a, b);
    EXPECT_DOUBLE_EQ(r.p_value, 0.03125);
    EXPECT_DOUBLE_EQ(r.statistic, 0.0);
    const auto same = wilcoxon_signed_rank(a, a);
    EXPECT_EQ(same.p_value, 1.0);
    EXPECT_EQ(same.n, 0u);
    std::vector<double> c{1, 2};
    EXPECT_THROW(wilcoxon_signed_rank(a, c), ValidationError);
}

TEST(Wilcoxon, ExactMatchesEnumeration) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> v(0, 6);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 5 + rng() % 8;
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = v(rng);
            b[i] = v(rng);
        }
        EXPECT_NEAR(wilcoxon_signed_rank(a, b).p_value, oracle::wilcoxon_p(a, b), 1e-12);
    }
}

TEST(Wilcoxon, NormalApproximationNearEnumeration) {
    std::mt19937_64 rng(19);
    std::normal_distribution<double> z(0, 1);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 26 + rng() % 5;
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = z(rng) + 0.3;
            b[i] = z(rng);
        }
        const auto r = wilcoxon_signed_rank(a, b);
        EXPECT_FALSE(r.exact);
        EXPECT_NEAR(r.p_value, oracle::wilcoxon_p(a, b), 0.02);
    }
}

TEST(Report, AverageAndAbsentCells) {
    const auto g = dev_test_graph();
    std::vector<EvaluatedEdge> edges{{0, 1, 3, EdgeSet::positive, {1, 0}, {3, 1}},
                                     {1, 0, 3, EdgeSet::random_negative, {0, 0}, {0, 0}}};
    const std::vector<Month> months{3};
    const std::vector<Scheme> schemes{Scheme::per_month};
    const auto r = build_report("m", g, edges, months, schemes);
    EXPECT_DOUBLE_EQ(r[EdgeSet::positive].mean[0], 2.0);
    EXPECT_EQ(r[EdgeSet::historical_negative].count, 0u);
    EXPECT_DOUBLE_EQ(r.ave[0], 1.0);  // mean of the two populated sets
    std::ostringstream out;
    write_summary_rows(out, r);
    EXPECT_NE(out.str().find("m,historical_negative,call,absent,absent,0"), std::string::npos);
    EXPECT_THROW(build_report("m", g, {}, months, schemes), DataError);
}
