#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <vector>

#include "cdrgnn/edgebank/edgebank.hpp"
#include "cdrgnn/models/architectures.hpp"

namespace cdrgnn::models {

/// Graph, split and derived inputs shared by training and evaluation.
struct Dataset {
    const TemporalGraph* graph = nullptr;
    graphstore::Split split;
    graphstore::NormalizedFeatures norm;
    std::unique_ptr<UnionAdjacency> adj;
    int hops = 1;

    const TemporalGraph& g() const { return *graph; }
};

/// Inputs are normalized with statistics from the training months unless `stats` is given.
inline Dataset prepare_dataset(const TemporalGraph& g, const graphstore::Split& split, int hops,
                               const std::optional<graphstore::NormStats>& stats = {}) {
    if (hops < 1) throw ValidationError("hops must be >= 1");
    split.validate(g.num_months());
    Dataset ds;
    ds.graph = &g;
    ds.split = split;
    ds.norm = stats ? graphstore::apply_norm_stats(g, *stats) : graphstore::normalize(g, split);
    ds.adj = std::make_unique<UnionAdjacency>(g);
    ds.hops = hops;
    return ds;
}

/// Queries of one seed across the target months [first, last].
struct SeedPlan {
    NodeIndex seed = 0;
    Subgraph subgraph;
    std::vector<SeedQueries> by_month;  // [t - first]
};

inline SeedPlan plan_seed(const Dataset& ds, NodeIndex seed, Month first, Month last, int neg_ratio,
                          std::uint64_t query_seed) {
    SeedPlan p;
    p.seed = seed;
    p.subgraph = graphstore::sample_khop(ds.g(), *ds.adj, seed, ds.hops);
    for (Month t = first; t <= last; ++t) {
        Rng rng = query_rng(query_seed, seed, t);
        p.by_month.push_back(plan_queries(ds.g(), *ds.adj, p.subgraph, t, neg_ratio, rng));
    }
    return p;
}

/// Batch with its per-month query blocks (index = target month).
struct PlannedBatch {
    std::vector<SeedPlan> seeds;
    Batch batch;
    std::vector<QueryBlock> blocks;
    QueryPlan plan;
    std::size_t truncated = 0;
};

inline PlannedBatch plan_batch(const Dataset& ds, std::span<const NodeIndex> seeds, Month first, Month last,
                               Month input_months, int neg_ratio, std::uint64_t query_seed) {
    if (first < 2) throw ValidationError("target months start at 2");
    if (last < first) throw ValidationError("empty target range");
    PlannedBatch pb;
    for (NodeIndex s : seeds) pb.seeds.push_back(plan_seed(ds, s, first, last, neg_ratio, query_seed));
    std::vector<const Subgraph*> parts;
    for (const auto& s : pb.seeds) parts.push_back(&s.subgraph);
    pb.batch = assemble_batch(ds.norm, parts, input_months);
    pb.blocks.resize(std::size_t(last) + 1);
    pb.plan.assign(std::size_t(last) + 1, nullptr);
    for (Month t = first; t <= last; ++t) {
        std::vector<SeedQueries> per;
        for (const auto& s : pb.seeds) per.push_back(s.by_month[std::size_t(t - first)]);
        pb.blocks[std::size_t(t)] = make_block(pb.batch, per);
        pb.truncated += pb.blocks[std::size_t(t)].truncated;
        pb.plan[std::size_t(t)] = &pb.blocks[std::size_t(t)];
    }
    return pb;
}

inline std::vector<NodeIndex> all_seeds(const TemporalGraph& g) {
    std::vector<NodeIndex> s(g.num_nodes());
    std::iota(s.begin(), s.end(), NodeIndex(0));
    return s;
}

inline void sort_edges(std::vector<metrics::EvaluatedEdge>& edges) {
    std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
        return std::tie(a.month, a.source, a.destination) < std::tie(b.month, b.source, b.destination);
    });
}

struct Predictions {
    std::vector<metrics::EvaluatedEdge> edges;  // sorted by (month, source, destination)
    std::size_t truncated = 0;                  // (seed, month) pairs short of random negatives
};

/// Model predictions for every seed's queries over target months [first, last].
inline Predictions predict_model(Model& model, const Dataset& ds, Month first, Month last,
                                 std::uint64_t query_seed) {
    const auto& cfg = model.config();
    const auto seeds = all_seeds(ds.g());
    Predictions out;
    nn::NoGradGuard guard;
    Rng unused(0);
    for (std::size_t at = 0; at < seeds.size(); at += std::size_t(cfg.batch_subgraphs)) {
        const std::size_t end = std::min(seeds.size(), at + std::size_t(cfg.batch_subgraphs));
        const auto pb = plan_batch(ds, std::span(seeds).subspan(at, end - at), first, last, last - 1, cfg.neg_ratio,
                                   query_seed);
        out.truncated += pb.truncated;
        const auto fo = model.forward(pb.batch, pb.plan, Mode::eval, unused);
        for (Month t = first; t <= last; ++t) {
            const auto& q = pb.blocks[std::size_t(t)];
            if (q.size() == 0) continue;
            const nn::Matrix& p = fo.preds[std::size_t(t)].value();
            for (std::size_t i = 0; i < q.size(); ++i)
                out.edges.push_back({q.global_source[i], q.global_destination[i], t, q.set[i],
                                     {p(Eigen::Index(i), 0), p(Eigen::Index(i), 1)},
                                     {q.truth(Eigen::Index(i), 0), q.truth(Eigen::Index(i), 1)}});
        }
    }
    sort_edges(out.edges);
    return out;
}

/// rEdgeBank predictions on exactly the query set the models see.
inline Predictions predict_redgebank(const Dataset& ds, int window, int neg_ratio, Month first, Month last,
                                     std::uint64_t query_seed) {
    if (window < 1) throw ValidationError("rEdgeBank window must be >= 1");
    Predictions out;
    for (NodeIndex s : all_seeds(ds.g())) {
        const auto p = plan_seed(ds, s, first, last, neg_ratio, query_seed);
        for (Month t = first; t <= last; ++t) {
            const auto& sq = p.by_month[std::size_t(t - first)];
            if (sq.truncated) ++out.truncated;
            for (const auto& q : sq.queries)
                out.edges.push_back({s, p.subgraph.nodes[q.destination], t, q.set, {}, q.truth});
        }
    }
    sort_edges(out.edges);
    edgebank::EdgeHistory h;
    for (auto& e : out.edges) {
        if (h.frontier() < e.month - 1) h.advance_to(ds.g(), e.month - 1);
        e.pred = edgebank::forward_channels(edgebank::redgebank_predict(h, e.source, e.destination, e.month, window));
    }
    return out;
}

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_mae = 0.0;
};

struct TrainedModel {
    std::unique_ptr<Model> model;
    graphstore::NormStats stats;
    std::vector<EpochRecord> curve;
    int best_epoch = 0;
    double best_val = 0.0;
};

struct TrainHooks {
    std::function<void(const EpochRecord&)> on_epoch;
};

inline constexpr const char* kQueryStream = "evaluate";

/// Validation Ave MAE (both channels) of the current parameters.
inline double validation_mae(Model& model, const Dataset& ds) {
    const auto& sp = ds.split;
    const auto pred = predict_model(model, ds, sp.train_cutoff + 1, sp.val_cutoff,
                                    SeedSplitter(model.config().rng_seed).seed_for("validation"));
    const std::vector<Month> months;
    return metrics::build_report("validation", ds.g(), pred.edges, months, {}).ave_mae();
}

inline std::string parameter_norms(const nn::ParamStore& ps) {
    std::ostringstream os;
    for (const auto& e : ps.entries()) os << ' ' << e.name << '=' << e.tensor.value().norm();
    return os.str();
}

/// One optimizer step per batch over the training months; early stopping on validation MAE,
/// restoring the best parameters at the end.
inline TrainedModel train(const Dataset& ds, const ModelConfig& cfg, const TrainHooks& hooks = {}) {
    cfg.validate();
    if (ds.hops != cfg.hops) throw ValidationError("train: dataset hops differ from the model config");
    const auto& sp = ds.split;
    if (sp.train_cutoff < 2) throw ValidationError("train: need at least two training months");
    TrainedModel tm;
    tm.model = build_model(cfg);
    tm.stats = ds.norm.stats;
    Model& model = *tm.model;
    nn::Adam opt(model.params(), {.lr = cfg.learning_rate});
    const SeedSplitter seeds(cfg.rng_seed);
    auto order = all_seeds(ds.g());
    std::vector<nn::Matrix> best_values = model.params().values();
    double best = std::numeric_limits<double>::infinity();
    int bad = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const SeedSplitter es = seeds.child("epoch" + std::to_string(epoch));
        Rng shuffle = es.stream("batches");
        std::shuffle(order.begin(), order.end(), shuffle);
        Rng noise = es.stream("noise");
        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t at = 0; at < order.size(); at += std::size_t(cfg.batch_subgraphs)) {
            const std::size_t end = std::min(order.size(), at + std::size_t(cfg.batch_subgraphs));
            const auto pb = plan_batch(ds, std::span(order).subspan(at, end - at), 2, sp.train_cutoff,
                                       sp.train_cutoff, cfg.neg_ratio, es.seed_for("negatives"));
            model.params().zero_grad();
            const auto fo = model.forward(pb.batch, pb.plan, Mode::train, noise);
            const nn::Tensor loss = objective(cfg, fo, pb.plan);
            const double value = loss.item();
            if (!std::isfinite(value))
                throw DataError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                std::to_string(batches + 1) + "; parameter norms:" + parameter_norms(model.params()));
            nn::backward(loss);
            opt.step();
            loss_sum += value;
            ++batches;
        }
        EpochRecord rec{epoch, loss_sum / std::max(batches, 1), validation_mae(model, ds)};
        tm.curve.push_back(rec);
        if (hooks.on_epoch) hooks.on_epoch(rec);
        if (rec.val_mae < best) {
            best = rec.val_mae;
            best_values = model.params().values();
            tm.best_epoch = epoch;
            bad = 0;
        } else if (++bad >= std::max(cfg.patience, 1)) {
            break;
        }
    }
    model.params().set_values(best_values);
    tm.best_val = best;
    return tm;
}

// ---- run directories ----

inline constexpr char kNormMagic[9] = "CDRGNORM";

inline void save_norm_stats(const std::filesystem::path& path, const graphstore::NormStats& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    binary::write_magic(out, kNormMagic);
    for (double v : s.node_min) binary::write_f64(out, v);
    for (double v : s.node_max) binary::write_f64(out, v);
    for (double v : s.edge_mean) binary::write_f64(out, v);
    for (double v : s.edge_std) binary::write_f64(out, v);
}

inline graphstore::NormStats load_norm_stats(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    binary::expect_magic(in, kNormMagic);
    graphstore::NormStats s;
    for (double& v : s.node_min) v = binary::read_f64(in);
    for (double& v : s.node_max) v = binary::read_f64(in);
    for (double& v : s.edge_mean) v = binary::read_f64(in);
    for (double& v : s.edge_std) v = binary::read_f64(in);
    return s;
}

inline void write_curve(std::ostream& out, const std::vector<EpochRecord>& curve) {
    out << "epoch,train_loss,val_mae\n";
    for (const auto& r : curve)
        out << r.epoch << ',' << csv::format_double(r.train_loss) << ',' << csv::format_double(r.val_mae) << '\n';
}

}  // namespace cdrgnn::models
