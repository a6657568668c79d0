#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "cdrgnn/models/batch.hpp"
#include "cdrgnn/models/config.hpp"
#include "cdrgnn/models/loss.hpp"
#include "cdrgnn/nn.hpp"

namespace cdrgnn::models {

using nn::Tensor;

enum class Mode { train, eval };

struct ForwardOutput {
    std::vector<Tensor> preds;  // [target month], q x 2 in raw count scale; undefined where no queries
    Tensor kl;                  // summed KL, variational model in training mode only
    std::size_t kl_terms = 0;   // node-steps contributing to kl
};

/// queries[t] holds the queries of target month t (nullptr or empty for none); the last index is the
/// latest target. Predictions for month t use months < t only, except the variational model in training
/// mode, whose reconstruction term encodes month t itself.
using QueryPlan = std::vector<const QueryBlock*>;

class Model {
public:
    explicit Model(const ModelConfig& cfg) : cfg_(cfg), params_(SeedSplitter(cfg.rng_seed).seed_for("init")) {
        cfg.validate();
    }
    virtual ~Model() = default;

    virtual ForwardOutput forward(const Batch& b, const QueryPlan& queries, Mode mode, Rng& noise) = 0;

    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    const ModelConfig& config() const { return cfg_; }

protected:
    static bool wants(const QueryPlan& q, Month t) {
        return t >= 0 && std::size_t(t) < q.size() && q[std::size_t(t)] && q[std::size_t(t)]->size() > 0;
    }
    static Month last_target(const Batch& b, const QueryPlan& q) {
        if (q.size() < 2) throw ValidationError("forward: no target months");
        const Month last = Month(q.size() - 1);
        if (b.num_months() < last - 1) throw ValidationError("forward: batch lacks input months");
        return last;
    }
    static Tensor edge_features(const nn::GraphEdges& g) {
        return g.size() ? g.features : Tensor::zeros(0, Eigen::Index(graphstore::kEdgeFeatures));
    }

    ModelConfig cfg_;
    nn::ParamStore params_;
};

namespace detail {

inline Tensor edge_weights(const nn::EdgeWeightMlp& mlp, const nn::GraphEdges& g) {
    return g.size() ? mlp(g.features) : Tensor::zeros(0, 1);
}

inline nn::ScaledLaplacian laplacian(const nn::EdgeWeightMlp& mlp, const nn::GraphEdges& g) {
    return nn::ScaledLaplacian(g.n, g.src, g.dst, edge_weights(mlp, g));
}

}  // namespace detail

/// Chebyshev-convolutional LSTM with learned scalar edge weights and an inner-product decoder.
class Gcrn final : public Model {
public:
    explicit Gcrn(const ModelConfig& cfg) : Model(cfg) {
        const auto h = Eigen::Index(cfg.hidden_dim), f = Eigen::Index(graphstore::kNodeFeatures);
        edge_ = nn::EdgeWeightMlp(params_, "edge_weight", Eigen::Index(graphstore::kEdgeFeatures), h);
        lstm_ = nn::LstmCell(params_, "lstm", f, h, cfg.chebyshev_K);
        decoder_ = nn::InnerProductDecoder(params_, "decoder", h, h);
    }

    ForwardOutput forward(const Batch& b, const QueryPlan& q, Mode, Rng&) override {
        const Month last = last_target(b, q);
        ForwardOutput out;
        out.preds.resize(q.size());
        const Tensor x = Tensor::constant(b.node_features);
        nn::LstmState s = lstm_.zero_state(b.n);
        for (Month t = 1; t < last; ++t) {
            const auto L = detail::laplacian(edge_, b.edges(t));
            s = lstm_(x, s, &L);
            if (wants(q, t + 1)) out.preds[std::size_t(t + 1)] = decoder_(s.h, q[t + 1]->source, q[t + 1]->destination);
        }
        return out;
    }

private:
    nn::EdgeWeightMlp edge_;
    nn::LstmCell lstm_;
    nn::InnerProductDecoder decoder_;
};

/// Variational graph RNN: Chebyshev encoder, GRU carry, prior network on the previous carry.
class Vgrnn final : public Model {
public:
    explicit Vgrnn(const ModelConfig& cfg) : Model(cfg) {
        const auto h = Eigen::Index(cfg.hidden_dim), f = Eigen::Index(graphstore::kNodeFeatures);
        const int K = cfg.chebyshev_K;
        edge_ = nn::EdgeWeightMlp(params_, "edge_weight", Eigen::Index(graphstore::kEdgeFeatures), h);
        phi_x_ = nn::Linear(params_, "phi_x", f, h);
        enc_ = nn::ChebConv(params_, "enc", 2 * h, h, K);
        enc_mu_ = nn::ChebConv(params_, "enc_mu", h, h, K);
        enc_sd_ = nn::ChebConv(params_, "enc_sd", h, h, K);
        // narrow initial posterior: softplus(-2) ~ 0.13
        nn::Tensor sd_bias = params_.get("enc_sd.bias");
        sd_bias.mutable_value().setConstant(-2.0);
        prior_ = nn::Linear(params_, "prior", h, h);
        prior_mu_ = nn::Linear(params_, "prior_mu", h, h);
        prior_sd_ = nn::Linear(params_, "prior_sd", h, h);
        phi_z_ = nn::Linear(params_, "phi_z", h, h);
        gru_ = nn::GruCell(params_, "gru", 2 * h, h, K);
        decoder_ = nn::InnerProductDecoder(params_, "decoder", h, h);
    }

    ForwardOutput forward(const Batch& b, const QueryPlan& q, Mode mode, Rng& noise) override {
        using namespace nn;
        const Month last = last_target(b, q);
        const bool training = mode == Mode::train;
        if (training && b.num_months() < last) throw ValidationError("forward: batch lacks the target month");
        ForwardOutput out;
        out.preds.resize(q.size());
        const auto hd = Eigen::Index(cfg_.hidden_dim);
        const Tensor px = relu(phi_x_(Tensor::constant(b.node_features)));
        Tensor h = Tensor::zeros(b.n, hd);
        std::normal_distribution<double> nd;
        for (Month t = 1; t <= last; ++t) {
            const Tensor ph = relu(prior_(h));
            const Tensor mu_p = prior_mu_(ph), sd_p = positive(prior_sd_(ph));
            if (!training && wants(q, t)) out.preds[std::size_t(t)] = decoder_(mu_p, q[t]->source, q[t]->destination);
            if (!training && t == last) break;
            const auto L = detail::laplacian(edge_, b.edges(t));
            const Tensor e = relu(enc_(concat_cols({px, h}), L));
            const Tensor mu_q = enc_mu_(e, L), sd_q = positive(enc_sd_(e, L));
            Tensor z = mu_q;
            if (training) {
                Matrix eps(b.n, hd);
                for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = nd(noise);
                z = add(mu_q, mul(sd_q, Tensor::constant(eps)));
                const Tensor kl = gaussian_kl(mu_q, sd_q, mu_p, sd_p);
                out.kl = out.kl.defined() ? add(out.kl, kl) : kl;
                out.kl_terms += std::size_t(b.n);
                if (wants(q, t)) out.preds[std::size_t(t)] = decoder_(z, q[t]->source, q[t]->destination);
            }
            if (t < last) h = gru_(concat_cols({px, relu(phi_z_(z))}), h, &L);
        }
        return out;
    }

private:
    static Tensor positive(const Tensor& x) { return nn::add_scalar(nn::softplus(x), 1e-4); }

    nn::EdgeWeightMlp edge_;
    nn::Linear phi_x_, prior_, prior_mu_, prior_sd_, phi_z_;
    nn::ChebConv enc_, enc_mu_, enc_sd_;
    nn::GruCell gru_;
    nn::InnerProductDecoder decoder_;
};

/// Structural attention per snapshot, causal temporal attention over snapshots.
class Dysat final : public Model {
public:
    explicit Dysat(const ModelConfig& cfg) : Model(cfg) {
        const auto h = Eigen::Index(cfg.hidden_dim), f = Eigen::Index(graphstore::kNodeFeatures);
        edge_ = nn::EdgeWeightMlp(params_, "edge_weight", Eigen::Index(graphstore::kEdgeFeatures), h);
        structural_ = nn::StructuralAttention(params_, "structural", f, h);
        temporal_ = nn::TemporalAttention(params_, "temporal", h);
        decoder_ = nn::InnerProductDecoder(params_, "decoder", h, h);
    }

    ForwardOutput forward(const Batch& b, const QueryPlan& q, Mode, Rng&) override {
        const Month last = last_target(b, q);
        ForwardOutput out;
        out.preds.resize(q.size());
        const Tensor x = Tensor::constant(b.node_features);
        std::vector<Tensor> seq;
        for (Month t = 1; t < last; ++t) {
            const auto& g = b.edges(t);
            seq.push_back(structural_(x, g, detail::edge_weights(edge_, g)));
            if (wants(q, t + 1))
                out.preds[std::size_t(t + 1)] = decoder_(temporal_(seq), q[t + 1]->source, q[t + 1]->destination);
        }
        return out;
    }

private:
    nn::EdgeWeightMlp edge_;
    nn::StructuralAttention structural_;
    nn::TemporalAttention temporal_;
    nn::InnerProductDecoder decoder_;
};

/// conv, conv, GRU, conv, GRU, conv, conv, conv; each conv is MPA + batch norm + ReLU with a skip
/// connection, each GRU carries its layer's node states across months.
class Roland final : public Model {
public:
    explicit Roland(const ModelConfig& cfg) : Model(cfg) {
        const auto h = Eigen::Index(cfg.hidden_dim);
        pre_ = nn::Linear(params_, "pre", Eigen::Index(graphstore::kNodeFeatures), h);
        for (int i = 0; i < 6; ++i) {
            const std::string name = "conv" + std::to_string(i);
            conv_.emplace_back(params_, name, h, Eigen::Index(graphstore::kEdgeFeatures), h, cfg.aggregation);
            bn_.emplace_back(params_, name + ".bn", h);
        }
        for (int i = 0; i < 2; ++i) gru_.emplace_back(params_, "gru" + std::to_string(i), h, h);
        readout_ = nn::MlpReadout(params_, "readout", h, h);
    }

    ForwardOutput forward(const Batch& b, const QueryPlan& q, Mode mode, Rng&) override {
        using namespace nn;
        const Month last = last_target(b, q);
        const bool training = mode == Mode::train;
        ForwardOutput out;
        out.preds.resize(q.size());
        const Tensor x = pre_(Tensor::constant(b.node_features));
        std::vector<Tensor> carry(2, Tensor::zeros(b.n, Eigen::Index(cfg_.hidden_dim)));
        static constexpr char kStack[] = "ccgcgccc";
        for (Month t = 1; t < last; ++t) {
            const auto& g = b.edges(t);
            Tensor h = x;
            std::size_t c = 0, r = 0;
            for (char layer : std::string_view(kStack)) {
                if (layer == 'c') {
                    h = add(h, relu(bn_[c](conv_[c](h, g), training)));
                    ++c;
                } else {
                    h = gru_[r](h, carry[r]);
                    carry[r] = h;
                    ++r;
                }
            }
            if (wants(q, t + 1)) out.preds[std::size_t(t + 1)] = readout_(h, q[t + 1]->source, q[t + 1]->destination);
        }
        return out;
    }

private:
    nn::Linear pre_;
    std::vector<nn::MpaLayer> conv_;
    std::vector<nn::BatchNorm> bn_;
    std::vector<nn::GruCell> gru_;
    nn::MlpReadout readout_;
};

inline std::unique_ptr<Model> build_model(const ModelConfig& cfg) {
    cfg.validate();
    switch (cfg.architecture) {
        case Architecture::gcrn: return std::make_unique<Gcrn>(cfg);
        case Architecture::vgrnn: return std::make_unique<Vgrnn>(cfg);
        case Architecture::dysat: return std::make_unique<Dysat>(cfg);
        case Architecture::roland: return std::make_unique<Roland>(cfg);
    }
    throw ValidationError("unknown architecture");
}

/// Training objective of one forward pass over all query blocks.
inline Tensor objective(const ModelConfig& cfg, const ForwardOutput& out, const QueryPlan& q) {
    std::vector<Tensor> preds;
    std::vector<metrics::EdgeSet> sets;
    std::vector<const nn::Matrix*> truths;
    Eigen::Index rows = 0;
    for (std::size_t t = 0; t < q.size(); ++t) {
        if (!q[t] || q[t]->size() == 0) continue;
        if (!out.preds[t].defined()) throw ValidationError("objective: missing predictions for a target month");
        preds.push_back(out.preds[t]);
        sets.insert(sets.end(), q[t]->set.begin(), q[t]->set.end());
        truths.push_back(&q[t]->truth);
        rows += q[t]->truth.rows();
    }
    nn::Matrix truth(rows, 2);
    Eigen::Index at = 0;
    for (const auto* m : truths) {
        truth.middleRows(at, m->rows()) = *m;
        at += m->rows();
    }
    Tensor loss = preds.empty() ? Tensor::scalar(0.0)
                                : mse_loss(nn::concat_rows(preds), truth, sets, cfg.positive_weight, cfg.negative_weight);
    if (cfg.architecture == Architecture::vgrnn && out.kl.defined()) {
        // Unit-variance Gaussian likelihood: the reconstruction term is half the squared error.
        loss = nn::add(nn::scale(loss, 0.5), nn::scale(out.kl, 1.0 / double(std::max<std::size_t>(out.kl_terms, 1))));
    }
    return loss;
}

}  // namespace cdrgnn::models
