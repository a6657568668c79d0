#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "cdrgnn/models.hpp"
#include "gradcheck.hpp"
#include "test_support.hpp"

using namespace cdrgnn;
using namespace cdrgnn::models;
using graphstore::EdgeAttr;
using metrics::EdgeSet;
using testing_support::grad_check;

namespace {

// Seed 0 with 7 neighbours (edges in month 2), each neighbour linked to 10 private nodes in month 1.
TemporalGraph star_graph() {
    std::vector<std::vector<std::tuple<NodeIndex, NodeIndex, EdgeAttr>>> months(3);
    NodeIndex next = 8;
    for (NodeIndex i = 1; i <= 7; ++i) {
        for (int j = 0; j < 10; ++j, ++next) {
            months[0].push_back({i, next, EdgeAttr{1, 1, 1, 1}});
            months[0].push_back({next, i, EdgeAttr{1, 1, 1, 1}});
        }
        months[1].push_back({0, i, EdgeAttr{i, 2 * i, 0, 0}});
        months[1].push_back({i, 0, EdgeAttr{0, 0, i, 2 * i}});
    }
    months[2].push_back({0, 1, EdgeAttr{3, 3, 3, 3}});
    months[2].push_back({1, 0, EdgeAttr{3, 3, 3, 3}});
    return testing_support::make_graph(months, next);
}

TemporalGraph small_graph(std::uint64_t seed, std::size_t n = 9, int T = 4) {
    std::mt19937_64 rng(seed);
    return testing_support::random_graph(rng, n, T, 0.5, 0.7, true);
}

ModelConfig tiny(Architecture a, int hidden = 3) {
    ModelConfig c = default_config(a);
    c.hidden_dim = hidden;
    c.chebyshev_K = 2;
    c.hops = 2;
    c.neg_ratio = 2;
    c.batch_subgraphs = 4;
    c.learning_rate = 1e-2;
    c.rng_seed = 11;
    return c;
}

graphstore::Split split_for(int T) {
    return T == 4 ? graphstore::temporal_split(4, 2, 3, 4) : graphstore::default_split(T);
}

}  // namespace

TEST(ModelConfig, DefaultsPerArchitecture) {
    EXPECT_EQ(default_config(Architecture::roland).hidden_dim, 160);
    EXPECT_DOUBLE_EQ(default_config(Architecture::roland).learning_rate, 3e-5);
    EXPECT_EQ(default_config(Architecture::gcrn).hidden_dim, 176);
    EXPECT_EQ(default_config(Architecture::gcrn).chebyshev_K, 3);
    EXPECT_DOUBLE_EQ(default_config(Architecture::gcrn).learning_rate, 3e-4);
    EXPECT_EQ(default_config(Architecture::vgrnn).hidden_dim, 176);
    EXPECT_EQ(default_config(Architecture::dysat).hidden_dim, 89);
    EXPECT_EQ(default_config(Architecture::roland).patience, 20);
    EXPECT_EQ(default_config(Architecture::roland).batch_subgraphs, 100);
    EXPECT_EQ(default_config(Architecture::roland).neg_ratio, 10);
}

TEST(ModelConfig, RoundTripAndErrors) {
    ModelConfig c = tiny(Architecture::dysat);
    c.aggregation = nn::Aggregation::max;
    c.negative_weight = 0.25;
    std::stringstream s;
    write_model_config(s, c);
    const ModelConfig r = read_model_config(s);
    std::stringstream a, b;
    write_model_config(a, c);
    write_model_config(b, r);
    EXPECT_EQ(a.str(), b.str());
    std::stringstream bad("architecture = transformer\n");
    EXPECT_THROW(read_model_config(bad), DataError);
    EXPECT_FALSE(parse_architecture("gat"));
    c.hidden_dim = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = tiny(Architecture::gcrn);
    c.learning_rate = 0;
    EXPECT_THROW(build_model(c), ValidationError);
}

TEST(Queries, TenTimesPositives) {
    const auto g = star_graph();
    UnionAdjacency adj(g);
    const auto sg = graphstore::sample_khop(g, adj, 0, 2);
    Rng rng(1);
    auto q = plan_queries(g, adj, sg, 2, 10, rng);
    std::size_t pos = 0, rnd = 0;
    for (const auto& x : q.queries) {
        pos += x.set == EdgeSet::positive;
        rnd += x.set == EdgeSet::random_negative;
    }
    EXPECT_EQ(pos, 7u);
    EXPECT_EQ(rnd, 70u);
    EXPECT_FALSE(q.truncated);
    auto q0 = plan_queries(g, adj, sg, 2, 0, rng);
    EXPECT_EQ(q0.queries.size(), 7u);
    auto q11 = plan_queries(g, adj, sg, 2, 11, rng);
    EXPECT_TRUE(q11.truncated);
    EXPECT_EQ(q11.queries.size(), 77u);
}

TEST(Queries, PositiveTargetsAreForwardCounts) {
    const auto g = star_graph();
    UnionAdjacency adj(g);
    const auto sg = graphstore::sample_khop(g, adj, 0, 1);
    for (const auto& q : positive_queries(g, sg, 2)) {
        const NodeIndex d = sg.nodes[q.destination];
        EXPECT_EQ(q.truth[0], double(d));
        EXPECT_EQ(q.truth[1], 2.0 * d);
    }
}

TEST(Queries, HistoricalNegatives) {
    const auto g = star_graph();
    UnionAdjacency adj(g);
    const auto sg = graphstore::sample_khop(g, adj, 0, 1);
    const auto h = historical_negatives(sg, 3);
    std::set<NodeIndex> got;
    for (const auto& q : h) got.insert(sg.nodes[q.destination]);
    EXPECT_EQ(got, (std::set<NodeIndex>{2, 3, 4, 5, 6, 7}));
    EXPECT_TRUE(historical_negatives(sg, 2).empty());
}

TEST(Queries, RandomNegativesNeverTrueEdges) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto g = small_graph(s, 14, 6);
        UnionAdjacency adj(g);
        for (NodeIndex v = 0; v < g.num_nodes(); ++v) {
            const auto sg = graphstore::sample_khop(g, adj, v, 2);
            for (Month t = 2; t <= 6; ++t) {
                Rng rng = query_rng(s, v, t);
                const auto q = plan_queries(g, adj, sg, t, 3, rng);
                std::set<LocalIndex> seen;
                for (const auto& x : q.queries) {
                    EXPECT_TRUE(seen.insert(x.destination).second);
                    if (x.set != EdgeSet::random_negative) continue;
                    EXPECT_NE(x.destination, sg.seed_local);
                    for (Month m = 1; m <= 6; ++m) {
                        EXPECT_EQ(g.find_edge(m, v, sg.nodes[x.destination]), nullptr);
                        EXPECT_EQ(g.find_edge(m, sg.nodes[x.destination], v), nullptr);
                    }
                }
            }
        }
    }
}

TEST(Batch, DisjointUnionKeepsEdgesAndFeatures) {
    const auto g = small_graph(3, 10, 4);
    const auto ds = prepare_dataset(g, split_for(4), 1);
    const std::vector<NodeIndex> seeds{0, 4, 7};
    const auto pb = plan_batch(ds, seeds, 2, 4, 4, 2, 99);
    std::size_t nodes = 0;
    for (const auto& s : pb.seeds) nodes += s.subgraph.size();
    EXPECT_EQ(pb.batch.n, Eigen::Index(nodes));
    for (Month m = 1; m <= 4; ++m) {
        std::size_t e = 0;
        for (const auto& s : pb.seeds) e += s.subgraph.edges(m).size();
        EXPECT_EQ(pb.batch.edges(m).size(), e);
        const auto& ge = pb.batch.edges(m);
        for (std::size_t k = 0; k < ge.size(); ++k) {
            // both endpoints in the same member
            auto member = [&](int row) {
                return std::upper_bound(pb.batch.offset.begin(), pb.batch.offset.end(), Eigen::Index(row)) -
                       pb.batch.offset.begin();
            };
            EXPECT_EQ(member(ge.src[k]), member(ge.dst[k]));
        }
    }
    for (std::size_t i = 0; i < pb.blocks[3].size(); ++i)
        EXPECT_EQ(pb.blocks[3].global_source[i], seeds[std::size_t(
            std::upper_bound(pb.batch.offset.begin(), pb.batch.offset.end(), Eigen::Index(pb.blocks[3].source[i])) -
            pb.batch.offset.begin() - 1)]);
}

TEST(Loss, MseExamples) {
    using metrics::EdgeSet;
    const nn::Matrix zero = nn::Matrix::Zero(2, 2);
    const std::vector<EdgeSet> sets{EdgeSet::positive, EdgeSet::random_negative};
    EXPECT_EQ(mse_loss(nn::Tensor::constant(zero), zero, sets).item(), 0.0);
    const nn::Matrix one = nn::Matrix::Ones(1, 2);
    EXPECT_DOUBLE_EQ(mse_loss(nn::Tensor::constant(one), nn::Matrix::Zero(1, 2), {EdgeSet::positive}).item(), 1.0);
    nn::Matrix p(2, 2);
    p << 1, 2, 3, 4;
    const double base = mse_loss(nn::Tensor::constant(p), zero, sets, 1.0, 1.0).item();
    const double pos_only = mse_loss(nn::Tensor::constant(p), zero, sets, 1.0, 0.0).item();
    const double doubled = mse_loss(nn::Tensor::constant(p), zero, sets, 1.0, 2.0).item();
    EXPECT_DOUBLE_EQ(doubled - pos_only, 2.0 * (base - pos_only));
    EXPECT_THROW(mse_loss(nn::Tensor::constant(p), zero, {EdgeSet::positive}), ValidationError);
}

TEST(Loss, ZeroNegativeWeightBlocksGradient) {
    nn::Tensor p = nn::Tensor::parameter((nn::Matrix(3, 2) << 1, 2, 3, 4, 5, 6).finished());
    nn::backward(mse_loss(p, nn::Matrix::Zero(3, 2),
                          {EdgeSet::positive, EdgeSet::random_negative, EdgeSet::historical_negative}, 1.0, 0.0));
    EXPECT_NE(p.grad().row(0).norm(), 0.0);
    EXPECT_EQ(p.grad().row(1).norm(), 0.0);
    EXPECT_EQ(p.grad().row(2).norm(), 0.0);
}

TEST(Loss, GaussianKlAndLikelihood) {
    using nn::Tensor;
    const auto one = Tensor::constant(nn::Matrix::Ones(1, 3)), zero = Tensor::zeros(1, 3);
    EXPECT_NEAR(gaussian_kl(one, one, one, one).item(), 0.0, 1e-15);
    EXPECT_NEAR(gaussian_kl(one, one, zero, one).item(), 1.5, 1e-15);  // 0.5 per dimension
    nn::Matrix mu(1, 2), x(1, 2);
    mu << 1, 2;
    x << 2, 0;
    EXPECT_NEAR(unit_gaussian_nll(mu, x) - unit_gaussian_nll(x, x), 0.5 * 5.0, 1e-12);
}

class FullModel : public ::testing::TestWithParam<Architecture> {};

TEST_P(FullModel, GradientsMatchFiniteDifferences) {
    const auto g = small_graph(5, 9, 4);
    ModelConfig cfg = tiny(GetParam());
    const auto ds = prepare_dataset(g, split_for(4), cfg.hops);
    const std::vector<NodeIndex> seeds{0, 3, 6};
    const auto pb = plan_batch(ds, seeds, 2, 4, 4, cfg.neg_ratio, 5);
    ASSERT_LE(pb.batch.n, 30);
    auto model = build_model(cfg);
    testing_support::jitter(model->params(), 23);
    auto f = [&] {
        Rng noise(17);
        const auto fo = model->forward(pb.batch, pb.plan, Mode::train, noise);
        return objective(cfg, fo, pb.plan);
    };
    const auto r = grad_check(f, testing_support::trainable(model->params()));
    EXPECT_TRUE(r.ok) << r.detail;
    EXPECT_GT(r.checked, 50u);
}

TEST_P(FullModel, EvalPredictionsAreCausal) {
    const auto g = small_graph(6, 9, 4);
    const ModelConfig cfg = tiny(GetParam());
    const auto ds = prepare_dataset(g, split_for(4), cfg.hops);
    const std::vector<NodeIndex> seeds{1, 2, 5};
    auto model = build_model(cfg);
    Rng unused(0);
    for (Month target = 2; target <= 4; ++target) {
        auto pb = plan_batch(ds, seeds, target, target, 4, cfg.neg_ratio, 5);
        const auto base = model->forward(pb.batch, pb.plan, Mode::eval, unused).preds[std::size_t(target)].value();
        for (Month m = target; m <= 4; ++m) {
            auto& ge = pb.batch.months[std::size_t(m - 1)];
            ge.src.clear();
            ge.dst.clear();
            ge.features = nn::Tensor::zeros(0, 4);
        }
        const auto moved = model->forward(pb.batch, pb.plan, Mode::eval, unused).preds[std::size_t(target)].value();
        EXPECT_EQ(base, moved) << "target " << target;
    }
}

TEST_P(FullModel, FirstMonthAloneGivesPredictionForSecond) {
    const auto g = small_graph(7, 9, 4);
    const ModelConfig cfg = tiny(GetParam());
    const auto ds = prepare_dataset(g, split_for(4), cfg.hops);
    const std::vector<NodeIndex> seeds{0, 1, 2, 3};
    const auto pb = plan_batch(ds, seeds, 2, 2, 1, cfg.neg_ratio, 5);
    auto model = build_model(cfg);
    Rng unused(0);
    const auto fo = model->forward(pb.batch, pb.plan, Mode::eval, unused);
    ASSERT_TRUE(fo.preds[2].defined());
    EXPECT_EQ(std::size_t(fo.preds[2].rows()), pb.blocks[2].size());
    EXPECT_TRUE(fo.preds[2].value().allFinite());
}

TEST_P(FullModel, QueryOutsideBatchIsRejected) {
    const auto g = small_graph(8, 9, 4);
    const ModelConfig cfg = tiny(GetParam());
    const auto ds = prepare_dataset(g, split_for(4), cfg.hops);
    const std::vector<NodeIndex> seeds{0};
    auto pb = plan_batch(ds, seeds, 2, 2, 2, cfg.neg_ratio, 5);
    QueryBlock q;
    q.source = {0};
    q.destination = {int(pb.batch.n) + 3};
    q.truth = nn::Matrix::Zero(1, 2);
    q.set = {EdgeSet::positive};
    pb.plan[2] = &q;
    auto model = build_model(cfg);
    Rng noise(0);
    EXPECT_THROW(model->forward(pb.batch, pb.plan, Mode::eval, noise), ValidationError);
}

TEST_P(FullModel, TrainingLossDescends) {
    // A single memorizable subgraph sequence: the whole graph reachable from every seed.
    const auto g = small_graph(9, 8, 6);
    ModelConfig cfg = tiny(GetParam(), 8);
    cfg.batch_subgraphs = 8;
    cfg.max_epochs = 5;
    cfg.patience = 100;
    cfg.learning_rate = 0.02;
    const auto ds = prepare_dataset(g, split_for(6), cfg.hops);
    const auto tm = train(ds, cfg);
    ASSERT_EQ(tm.curve.size(), 5u);
    EXPECT_LT(tm.curve.back().train_loss, tm.curve.front().train_loss);
}

TEST_P(FullModel, TrainingIsDeterministic) {
    const auto g = small_graph(10, 10, 6);
    ModelConfig cfg = tiny(GetParam());
    cfg.max_epochs = 2;
    const auto ds = prepare_dataset(g, split_for(6), cfg.hops);
    const auto a = train(ds, cfg), b = train(ds, cfg);
    ASSERT_EQ(a.curve.size(), b.curve.size());
    for (std::size_t i = 0; i < a.curve.size(); ++i) {
        EXPECT_EQ(a.curve[i].train_loss, b.curve[i].train_loss);
        EXPECT_EQ(a.curve[i].val_mae, b.curve[i].val_mae);
    }
    EXPECT_EQ(a.model->params().values(), b.model->params().values());
    const auto pa = predict_model(*a.model, ds, 5, 6, 3), pb = predict_model(*b.model, ds, 5, 6, 3);
    EXPECT_EQ(pa.edges, pb.edges);
}

INSTANTIATE_TEST_SUITE_P(All, FullModel, ::testing::ValuesIn(kArchitectures),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Training, EarlyStoppingRestoresBestParameters) {
    const auto g = small_graph(12, 10, 6);
    ModelConfig cfg = tiny(Architecture::roland, 6);
    cfg.max_epochs = 12;
    cfg.patience = 2;
    cfg.learning_rate = 0.05;
    const auto ds = prepare_dataset(g, split_for(6), cfg.hops);
    const auto tm = train(ds, cfg);
    ASSERT_GE(tm.best_epoch, 1);
    EXPECT_EQ(tm.best_val, tm.curve[std::size_t(tm.best_epoch - 1)].val_mae);
    EXPECT_EQ(validation_mae(*tm.model, ds), tm.best_val);
    // the restored parameters survive a checkpoint round trip bit for bit
    std::stringstream ck;
    nn::write_checkpoint(ck, tm.model->params());
    auto fresh = build_model(cfg);
    nn::read_checkpoint(ck, fresh->params());
    EXPECT_EQ(fresh->params().values(), tm.model->params().values());
    EXPECT_EQ(validation_mae(*fresh, ds), tm.best_val);
}

TEST(Training, PatienceZeroStopsAtFirstNonImprovingEpoch) {
    const auto g = small_graph(13, 10, 6);
    ModelConfig cfg = tiny(Architecture::gcrn);
    cfg.max_epochs = 30;
    cfg.patience = 0;
    cfg.learning_rate = 0.05;
    const auto ds = prepare_dataset(g, split_for(6), cfg.hops);
    const auto tm = train(ds, cfg);
    const auto& c = tm.curve;
    for (std::size_t i = 1; i + 1 < c.size(); ++i) {
        double best = c[0].val_mae;
        for (std::size_t j = 1; j < i; ++j) best = std::min(best, c[j].val_mae);
        EXPECT_LT(c[i].val_mae, best) << "epoch " << i + 1 << " did not improve yet training continued";
    }
    if (c.size() < 30u && c.size() > 1u) {
        double best = c[0].val_mae;
        for (std::size_t j = 1; j + 1 < c.size(); ++j) best = std::min(best, c[j].val_mae);
        EXPECT_GE(c.back().val_mae, best);
    }
}

TEST(Training, MaxEpochsOne) {
    const auto g = small_graph(14, 10, 6);
    ModelConfig cfg = tiny(Architecture::dysat);
    cfg.max_epochs = 1;
    const auto ds = prepare_dataset(g, split_for(6), cfg.hops);
    EXPECT_EQ(train(ds, cfg).curve.size(), 1u);
}

TEST(Training, NonFiniteLossAborts) {
    const auto g = small_graph(15, 10, 6);
    ModelConfig cfg = tiny(Architecture::roland);
    cfg.batch_subgraphs = 1;
    cfg.learning_rate = 1e300;
    const auto ds = prepare_dataset(g, split_for(6), cfg.hops);
    try {
        train(ds, cfg);
        FAIL() << "expected an abort";
    } catch (const DataError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("epoch 1"), std::string::npos);
        EXPECT_NE(what.find("parameter norms"), std::string::npos);
    }
}

TEST(Evaluation, ZeroPredictorGivesMeanAbsoluteTarget) {
    const auto g = small_graph(16, 12, 6);
    const auto ds = prepare_dataset(g, split_for(6), 2);
    auto pred = predict_redgebank(ds, 4, 3, 5, 6, 7);
    double sum[2] = {0, 0};
    std::size_t n = 0;
    for (auto& e : pred.edges) {
        e.pred = {0.0, 0.0};
        if (e.set != EdgeSet::positive) continue;
        sum[0] += std::abs(e.truth[0]);
        sum[1] += std::abs(e.truth[1]);
        ++n;
    }
    const std::vector<Month> months{5, 6};
    const auto r = metrics::build_report("zero", g, pred.edges, months, {});
    EXPECT_NEAR(r[EdgeSet::positive].mean[0], sum[0] / double(n), 1e-12);
    EXPECT_NEAR(r[EdgeSet::positive].mean[1], sum[1] / double(n), 1e-12);
}

TEST(Evaluation, RedgebankRandomNegativesExactlyZeroAndQueriesShared) {
    const auto g = small_graph(17, 14, 6);
    const auto ds = prepare_dataset(g, split_for(6), 2);
    const auto eb = predict_redgebank(ds, 4, 3, 5, 6, 21);
    const std::vector<Month> months{5, 6};
    const auto r = metrics::build_report("redgebank", g, eb.edges, months, {});
    ASSERT_GT(r[EdgeSet::random_negative].count, 0u);
    EXPECT_EQ(r[EdgeSet::random_negative].mean[0], 0.0);
    EXPECT_EQ(r[EdgeSet::random_negative].std[1], 0.0);
    ModelConfig cfg = tiny(Architecture::gcrn);
    cfg.neg_ratio = 3;
    auto model = build_model(cfg);
    const auto pm = predict_model(*model, ds, 5, 6, 21);
    ASSERT_EQ(pm.edges.size(), eb.edges.size());
    for (std::size_t i = 0; i < pm.edges.size(); ++i) {
        EXPECT_EQ(pm.edges[i].source, eb.edges[i].source);
        EXPECT_EQ(pm.edges[i].destination, eb.edges[i].destination);
        EXPECT_EQ(pm.edges[i].set, eb.edges[i].set);
        EXPECT_EQ(pm.edges[i].truth, eb.edges[i].truth);
    }
    // batch size does not change the query set or the predictions
    cfg.batch_subgraphs = 5;
    auto other = build_model(cfg);
    EXPECT_EQ(predict_model(*other, ds, 5, 6, 21).edges, pm.edges);
}

TEST(RunFiles, NormStatsRoundTrip) {
    const auto g = small_graph(18, 10, 6);
    const auto ds = prepare_dataset(g, split_for(6), 1);
    const auto path = std::filesystem::temp_directory_path() / "cdrgnn_norm_test.bin";
    save_norm_stats(path, ds.norm.stats);
    EXPECT_EQ(load_norm_stats(path), ds.norm.stats);
    std::filesystem::remove(path);
}
