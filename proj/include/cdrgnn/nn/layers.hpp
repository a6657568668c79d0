#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cdrgnn/nn/ops.hpp"
#include "cdrgnn/nn/params.hpp"

namespace cdrgnn::nn {

/// Directed edges of one snapshot on n nodes, with one feature row per edge.
struct GraphEdges {
    Eigen::Index n = 0;
    Indices src;
    Indices dst;
    Tensor features;  // m x d_e

    std::size_t size() const { return src.size(); }
};

class Linear {
public:
    Linear() = default;
    Linear(ParamStore& ps, const std::string& name, Eigen::Index in, Eigen::Index out, bool bias = true)
        : w_(ps.add_uniform(name + ".weight", in, out, in)) {
        if (bias) b_ = ps.add_constant(name + ".bias", 1, out, 0.0);
    }

    Tensor operator()(const Tensor& x) const {
        Tensor y = matmul(x, w_);
        return b_.defined() ? add_row(y, b_) : y;
    }

    const Tensor& weight() const { return w_; }
    const Tensor& bias() const { return b_; }
    Eigen::Index in() const { return w_.rows(); }
    Eigen::Index out() const { return w_.cols(); }

private:
    Tensor w_, b_;
};

/// Two-layer perceptron used for edge weights and the readout head.
class Mlp {
public:
    enum class Hidden { relu, tanh };

    Mlp() = default;
    Mlp(ParamStore& ps, const std::string& name, Eigen::Index in, Eigen::Index hidden, Eigen::Index out,
        Hidden act = Hidden::relu)
        : l1_(ps, name + ".0", in, hidden), l2_(ps, name + ".1", hidden, out), act_(act) {}

    Tensor operator()(const Tensor& x) const {
        Tensor h = l1_(x);
        h = act_ == Hidden::relu ? relu(h) : tanh(h);
        return l2_(h);
    }

    const Linear& first() const { return l1_; }
    const Linear& second() const { return l2_; }

private:
    Linear l1_, l2_;
    Hidden act_ = Hidden::relu;
};

/// Maps 4-dim edge features to a scalar weight in (0, 1).
class EdgeWeightMlp {
public:
    EdgeWeightMlp() = default;
    EdgeWeightMlp(ParamStore& ps, const std::string& name, Eigen::Index in, Eigen::Index hidden)
        : mlp_(ps, name, in, hidden, 1, Mlp::Hidden::tanh) {}

    Tensor operator()(const Tensor& edge_features) const { return sigmoid(mlp_(edge_features)); }

    const Mlp& mlp() const { return mlp_; }

private:
    Mlp mlp_;
};

/// Dense scaled Laplacian 2·L/λ − I, L = I − D^(−1/2) W D^(−1/2); isolated nodes get a zero
/// row in the normalized adjacency. Reference implementation for tests.
inline Matrix scaled_laplacian_dense(const Matrix& w, double lambda_max = 2.0) {
    if (w.rows() != w.cols()) throw ValidationError("scaled_laplacian: adjacency must be square");
    if ((w.array() < 0).any()) throw ValidationError("scaled_laplacian: negative edge weight");
    if (w != w.transpose())
        throw ValidationError("scaled_laplacian: adjacency must be symmetric");
    const Eigen::Index n = w.rows();
    Eigen::VectorXd dinv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = w.row(i).sum();
        dinv(i) = d > 0 ? 1.0 / std::sqrt(d) : 0.0;
    }
    const Matrix a = dinv.asDiagonal() * w * dinv.asDiagonal();
    const Matrix l = Matrix::Identity(n, n) - a;
    return (2.0 / lambda_max) * l - Matrix::Identity(n, n);
}

/// Sparse scaled Laplacian acting on node features. Directed weights are averaged per
/// unordered pair first, so the operator is symmetric.
class ScaledLaplacian {
public:
    ScaledLaplacian(Eigen::Index n, const Indices& src, const Indices& dst, const Tensor& weights,
                    double lambda_max = 2.0)
        : n_(n), lambda_(lambda_max) {
        if (weights.rows() != Eigen::Index(src.size()) || weights.cols() != 1 || src.size() != dst.size())
            throw ValidationError("ScaledLaplacian: one weight per edge");
        if ((weights.value().array() < 0).any()) throw ValidationError("ScaledLaplacian: negative edge weight");
        if (lambda_max <= 0) throw ValidationError("ScaledLaplacian: lambda_max must be > 0");
        std::map<std::pair<int, int>, int> pair_id;
        Indices pair_of_edge;
        std::vector<int> lo, hi;
        Indices member_edges;
        for (std::size_t e = 0; e < src.size(); ++e) {
            if (src[e] == dst[e]) continue;
            const auto key = std::minmax(src[e], dst[e]);
            auto [it, fresh] = pair_id.try_emplace({key.first, key.second}, int(lo.size()));
            if (fresh) {
                lo.push_back(key.first);
                hi.push_back(key.second);
            }
            pair_of_edge.push_back(it->second);
            member_edges.push_back(int(e));
        }
        const auto pairs = Eigen::Index(lo.size());
        if (pairs == 0) return;
        Matrix counts = Matrix::Zero(pairs, 1);
        for (int p : pair_of_edge) counts(p, 0) += 1.0;
        const Tensor w_members = gather_rows(weights, member_edges);
        const Tensor pair_w =
            mul_col(scatter_add_rows(w_members, pair_of_edge, pairs), Tensor::constant(counts.cwiseInverse()));
        Indices pick;
        for (int p = 0; p < int(pairs); ++p) {
            src_.push_back(lo[std::size_t(p)]);
            dst_.push_back(hi[std::size_t(p)]);
            pick.push_back(p);
        }
        for (int p = 0; p < int(pairs); ++p) {
            src_.push_back(hi[std::size_t(p)]);
            dst_.push_back(lo[std::size_t(p)]);
            pick.push_back(p);
        }
        const Tensor w2 = gather_rows(pair_w, pick);
        const Tensor dinv = rsqrt_or_zero(scatter_add_rows(w2, dst_, n));
        norm_ = mul(mul(w2, gather_rows(dinv, src_)), gather_rows(dinv, dst_));
    }

    /// L̃ X = (2/λ − 1) X − (2/λ) Â X.
    Tensor apply(const Tensor& x) const {
        if (x.rows() != n_) throw ValidationError("ScaledLaplacian: feature rows differ from node count");
        const double c0 = 2.0 / lambda_ - 1.0;
        Tensor ax = norm_.defined() ? propagate(x, src_, dst_, norm_, n_) : Tensor::zeros(n_, x.cols());
        Tensor out = scale(ax, -2.0 / lambda_);
        return c0 != 0.0 ? add(out, scale(x, c0)) : out;
    }

    Eigen::Index size() const { return n_; }

private:
    Eigen::Index n_;
    double lambda_;
    Indices src_, dst_;
    Tensor norm_;
};

/// H = Σ_k T_k(L̃) X θ_k + b.
class ChebConv {
public:
    ChebConv() = default;
    ChebConv(ParamStore& ps, const std::string& name, Eigen::Index in, Eigen::Index out, int K) {
        if (K < 1) throw ValidationError("ChebConv: K must be >= 1");
        for (int k = 0; k < K; ++k) theta_.emplace_back(ps, name + ".theta" + std::to_string(k), in, out, false);
        b_ = ps.add_constant(name + ".bias", 1, out, 0.0);
    }

    Tensor operator()(const Tensor& x, const ScaledLaplacian& L) const {
        if (x.cols() != theta_[0].in()) throw ValidationError("ChebConv: input width mismatch");
        Tensor t_prev = x;
        Tensor h = theta_[0](x);
        Tensor t_cur;
        for (std::size_t k = 1; k < theta_.size(); ++k) {
            Tensor t_next = k == 1 ? L.apply(x) : sub(scale(L.apply(t_cur), 2.0), t_prev);
            if (k > 1) t_prev = t_cur;
            t_cur = t_next;
            h = add(h, theta_[k](t_cur));
        }
        return add_row(h, b_);
    }

    int K() const { return int(theta_.size()); }

private:
    std::vector<Linear> theta_;
    Tensor b_;
};

/// Linear map used inside recurrent cells: dense, or a Chebyshev convolution.
class GraphMap {
public:
    GraphMap() = default;
    GraphMap(ParamStore& ps, const std::string& name, Eigen::Index in, Eigen::Index out, int cheb_K, bool bias)
        : cheb_(cheb_K > 0) {
        if (cheb_)
            conv_ = ChebConv(ps, name, in, out, cheb_K);
        else
            lin_ = Linear(ps, name, in, out, bias);
    }

    Tensor operator()(const Tensor& x, const ScaledLaplacian* L) const {
        if (!cheb_) return lin_(x);
        if (!L) throw ValidationError("GraphMap: Chebyshev map needs a Laplacian");
        return conv_(x, *L);
    }

private:
    bool cheb_ = false;
    Linear lin_;
    ChebConv conv_;
};

/// z = σ(.), r = σ(.), h̃ = tanh(M_x x + M_h (r ⊙ h)), h' = z ⊙ h + (1 − z) ⊙ h̃.
class GruCell {
public:
    GruCell() = default;
    GruCell(ParamStore& ps, const std::string& name, Eigen::Index in, Eigen::Index hidden, int cheb_K = 0)
        : xz_(ps, name + ".xz", in, hidden, cheb_K, true),
          hz_(ps, name + ".hz", hidden, hidden, cheb_K, false),
          xr_(ps, name + ".xr", in, hidden, cheb_K, true),
          hr_(ps, name + ".hr", hidden, hidden, cheb_K, false),
          xh_(ps, name + ".xh", in, hidden, cheb_K, true),
          hh_(ps, name + ".hh", hidden, hidden, cheb_K, false),
          hidden_(hidden) {}

    Tensor operator()(const Tensor& x, const Tensor& h, const ScaledLaplacian* L = nullptr) const {
        const Tensor z = sigmoid(add(xz_(x, L), hz_(h, L)));
        return step(x, h, z, L);
    }

    /// Same update with the gate supplied externally (tests pin it to 1).
    Tensor step(const Tensor& x, const Tensor& h, const Tensor& z, const ScaledLaplacian* L = nullptr) const {
        const Tensor r = sigmoid(add(xr_(x, L), hr_(h, L)));
        const Tensor cand = tanh(add(xh_(x, L), hh_(mul(r, h), L)));
        return add(mul(z, h), mul(one_minus(z), cand));
    }

    Eigen::Index hidden() const { return hidden_; }

private:
    GraphMap xz_, hz_, xr_, hr_, xh_, hh_;
    Eigen::Index hidden_ = 0;
};

struct LstmState {
    Tensor h;
    Tensor c;
};

/// Graph LSTM: every matrix product replaced by a GraphMap. Forget-gate bias starts at 1.
class LstmCell {
public:
    LstmCell() = default;
    LstmCell(ParamStore& ps, const std::string& name, Eigen::Index in, Eigen::Index hidden, int cheb_K = 0)
        : hidden_(hidden) {
        for (const char* g : {"i", "f", "o", "g"}) {
            x_.emplace_back(ps, name + ".x" + g, in, hidden, cheb_K, false);
            h_.emplace_back(ps, name + ".h" + g, hidden, hidden, cheb_K, false);
            b_.push_back(ps.add_constant(name + ".b" + g, 1, hidden, std::string(g) == "f" ? 1.0 : 0.0));
        }
    }

    LstmState operator()(const Tensor& x, const LstmState& s, const ScaledLaplacian* L = nullptr) const {
        auto gate = [&](std::size_t k) { return add_row(add(x_[k](x, L), h_[k](s.h, L)), b_[k]); };
        const Tensor i = sigmoid(gate(0)), f = sigmoid(gate(1)), o = sigmoid(gate(2)), g = tanh(gate(3));
        const Tensor c = add(mul(f, s.c), mul(i, g));
        return {mul(o, tanh(c)), c};
    }

    LstmState zero_state(Eigen::Index n) const { return {Tensor::zeros(n, hidden_), Tensor::zeros(n, hidden_)}; }
    Eigen::Index hidden() const { return hidden_; }

private:
    std::vector<GraphMap> x_, h_;
    std::vector<Tensor> b_;
    Eigen::Index hidden_ = 0;
};

enum class Aggregation { mean, max };

/// Message passing with edge features: m_{s→d} = W_s x_s + W_d x_d + W_e e_sd + b, aggregated
/// over in-neighbours plus a self-loop whose edge feature is zero.
class MpaLayer {
public:
    MpaLayer() = default;
    MpaLayer(ParamStore& ps, const std::string& name, Eigen::Index in, Eigen::Index edge_dim, Eigen::Index out,
             Aggregation agg = Aggregation::mean)
        : ws_(ps, name + ".src", in, out, false),
          wd_(ps, name + ".dst", in, out, false),
          we_(ps, name + ".edge", edge_dim, out, false),
          b_(ps.add_constant(name + ".bias", 1, out, 0.0)),
          agg_(agg) {}

    Tensor operator()(const Tensor& x, const GraphEdges& g) const {
        if (x.rows() != g.n) throw ValidationError("MpaLayer: feature rows differ from node count");
        const Tensor xs = ws_(x), xd = wd_(x);
        const Tensor self_msg = add_row(add(xs, xd), b_);
        if (g.size() == 0) return self_msg;
        const Tensor msg = add_row(add(add(gather_rows(xs, g.src), gather_rows(xd, g.dst)), we_(g.features)), b_);
        if (agg_ == Aggregation::mean) {
            Matrix inv(g.n, 1);
            inv.setOnes();
            for (int d : g.dst) inv(d, 0) += 1.0;
            inv = inv.cwiseInverse();
            return mul_col(add(scatter_add_rows(msg, g.dst, g.n), self_msg), Tensor::constant(inv));
        }
        Indices seg = g.dst;
        for (int i = 0; i < int(g.n); ++i) seg.push_back(i);
        return segment_max(concat_rows({msg, self_msg}), seg, g.n);
    }

private:
    Linear ws_, wd_, we_;
    Tensor b_;
    Aggregation agg_ = Aggregation::mean;
};

/// Single-head graph attention; logits are scaled by the edge weight, self-loops weigh 1.
class StructuralAttention {
public:
    StructuralAttention() = default;
    StructuralAttention(ParamStore& ps, const std::string& name, Eigen::Index in, Eigen::Index out)
        : w_(ps, name + ".proj", in, out, false),
          a_src_(ps.add_uniform(name + ".att_src", out, 1, out)),
          a_dst_(ps.add_uniform(name + ".att_dst", out, 1, out)) {}

    Tensor operator()(const Tensor& x, const GraphEdges& g, const Tensor& edge_weight) const {
        if (x.rows() != g.n) throw ValidationError("StructuralAttention: feature rows differ from node count");
        Indices src = g.src, dst = g.dst;
        for (int i = 0; i < int(g.n); ++i) {
            src.push_back(i);
            dst.push_back(i);
        }
        const Tensor hw = w_(x);
        const Tensor s = matmul(hw, a_src_), d = matmul(hw, a_dst_);
        const Tensor w = g.size() ? concat_rows({edge_weight, Tensor::constant(Matrix::Ones(g.n, 1))})
                                  : Tensor::constant(Matrix::Ones(g.n, 1));
        const Tensor logits = leaky_relu(mul(w, add(gather_rows(s, src), gather_rows(d, dst))));
        const Tensor alpha = segment_softmax(logits, dst, g.n);
        return elu(propagate(hw, src, dst, alpha, g.n));
    }

private:
    Linear w_;
    Tensor a_src_, a_dst_;
};

/// Causal temporal self-attention with a linear recency penalty (ALiBi):
/// Z_t = Σ_{τ≤t} softmax_τ(q_t·k_τ/√d − slope·(t−τ)) v_τ, per node.
class TemporalAttention {
public:
    TemporalAttention() = default;
    TemporalAttention(ParamStore& ps, const std::string& name, Eigen::Index dim, double slope = std::ldexp(1.0, -8))
        : wq_(ps, name + ".q", dim, dim, false),
          wk_(ps, name + ".k", dim, dim, false),
          wv_(ps, name + ".v", dim, dim, false),
          slope_(slope),
          dim_(dim) {}

    /// Output at the last step of `h` (which holds H_1..H_t).
    Tensor operator()(const std::vector<Tensor>& h, Tensor* weights = nullptr) const {
        if (h.empty()) throw ValidationError("TemporalAttention: empty sequence");
        const std::size_t t = h.size();
        const Tensor q = wq_(h.back());
        std::vector<Tensor> scores, values;
        const double inv_sqrt = 1.0 / std::sqrt(double(dim_));
        for (std::size_t tau = 0; tau < t; ++tau) {
            const Tensor k = wk_(h[tau]);
            scores.push_back(add_scalar(scale(row_dot(q, k), inv_sqrt), -slope_ * double(t - 1 - tau)));
            values.push_back(wv_(h[tau]));
        }
        const Tensor a = softmax_rows(concat_cols(scores));
        if (weights) *weights = a;
        Tensor z = mul_col(values[0], slice_cols(a, 0, 1));
        for (std::size_t tau = 1; tau < t; ++tau) z = add(z, mul_col(values[tau], slice_cols(a, Eigen::Index(tau), 1)));
        return z;
    }

    double slope() const { return slope_; }

private:
    Linear wq_, wk_, wv_;
    double slope_ = 0.0;
    Eigen::Index dim_ = 0;
};

/// calls = (S_c O_s)·(D_c O_d), sms = (S_m O_s)·(D_m O_d); returns q x 2.
class InnerProductDecoder {
public:
    InnerProductDecoder() = default;
    InnerProductDecoder(ParamStore& ps, const std::string& name, Eigen::Index dim, Eigen::Index proj)
        : sc_(ps, name + ".S_c", dim, proj, false),
          dc_(ps, name + ".D_c", dim, proj, false),
          sm_(ps, name + ".S_m", dim, proj, false),
          dm_(ps, name + ".D_m", dim, proj, false) {}

    Tensor operator()(const Tensor& o, const Indices& src, const Indices& dst) const {
        const Tensor os = gather_rows(o, src), od = gather_rows(o, dst);
        return decode(os, od);
    }

    Tensor decode(const Tensor& os, const Tensor& od) const {
        return concat_cols({row_dot(sc_(os), dc_(od)), row_dot(sm_(os), dm_(od))});
    }

private:
    Linear sc_, dc_, sm_, dm_;
};

/// MLP on [O_s ; O_d] to (calls, sms).
class MlpReadout {
public:
    MlpReadout() = default;
    MlpReadout(ParamStore& ps, const std::string& name, Eigen::Index dim, Eigen::Index hidden)
        : mlp_(ps, name, 2 * dim, hidden, 2) {}

    Tensor operator()(const Tensor& o, const Indices& src, const Indices& dst) const {
        return decode(gather_rows(o, src), gather_rows(o, dst));
    }

    Tensor decode(const Tensor& os, const Tensor& od) const { return mlp_(concat_cols({os, od})); }

    const Mlp& mlp() const { return mlp_; }

private:
    Mlp mlp_;
};

/// Batch normalization over nodes. One set of running statistics is shared by all time steps.
class BatchNorm {
public:
    BatchNorm() = default;
    BatchNorm(ParamStore& ps, const std::string& name, Eigen::Index dim, double momentum = 0.1, double eps = 1e-5)
        : gamma_(ps.add_constant(name + ".gamma", 1, dim, 1.0)),
          beta_(ps.add_constant(name + ".beta", 1, dim, 0.0)),
          running_mean_(ps.add_constant(name + ".running_mean", 1, dim, 0.0, false)),
          running_var_(ps.add_constant(name + ".running_var", 1, dim, 1.0, false)),
          momentum_(momentum),
          eps_(eps) {}

    Tensor operator()(const Tensor& x, bool training) const {
        if (training && x.rows() > 1) {
            const Tensor mu = mean_rows(x);
            const Tensor centered = add_row(x, scale(mu, -1.0));
            const Tensor var = mean_rows(square(centered));
            {
                Tensor rm = running_mean_, rv = running_var_;
                const double n = double(x.rows());
                rm.mutable_value() = (1 - momentum_) * rm.value() + momentum_ * mu.value();
                rv.mutable_value() = (1 - momentum_) * rv.value() + momentum_ * var.value() * (n / (n - 1));
            }
            return add_row(mul_row(mul_row(centered, rsqrt(var, eps_)), gamma_), beta_);
        }
        const Matrix inv = (running_var_.value().array() + eps_).rsqrt().matrix();
        const Tensor centered = add_row(x, Tensor::constant(-running_mean_.value()));
        return add_row(mul_row(mul_row(centered, Tensor::constant(inv)), gamma_), beta_);
    }

private:
    Tensor gamma_, beta_, running_mean_, running_var_;
    double momentum_ = 0.1, eps_ = 1e-5;
};

}  // namespace cdrgnn::nn
