#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "cdrgnn/common/error.hpp"

namespace cdrgnn::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Indices = std::vector<int>;

struct Node {
    Matrix value;
    Matrix grad;  // empty until something flows into it
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;  // empty for leaves

    Matrix& ensure_grad() {
        if (grad.size() == 0) grad = Matrix::Zero(value.rows(), value.cols());
        return grad;
    }
};

/// Handle to a node of the dynamic reverse-mode graph. Copies share the node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Matrix value, bool requires_grad = false) : node_(std::make_shared<Node>()) {
        node_->value = std::move(value);
        node_->requires_grad = requires_grad;
    }

    static Tensor constant(Matrix value) { return Tensor(std::move(value), false); }
    static Tensor parameter(Matrix value) { return Tensor(std::move(value), true); }
    static Tensor zeros(Eigen::Index r, Eigen::Index c) { return constant(Matrix::Zero(r, c)); }
    static Tensor scalar(double v) { return constant(Matrix::Constant(1, 1, v)); }

    bool defined() const { return node_ != nullptr; }
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    const Matrix& value() const { return node_->value; }
    Matrix& mutable_value() { return node_->value; }
    double item() const {
        require(rows() == 1 && cols() == 1, "item() needs a 1x1 tensor");
        return node_->value(0, 0);
    }

    bool requires_grad() const { return node_->requires_grad; }
    /// Gradient, or zeros when nothing has flowed back yet.
    Matrix grad() const {
        return node_->grad.size() ? node_->grad : Matrix::Zero(node_->value.rows(), node_->value.cols());
    }
    void zero_grad() { node_->grad.resize(0, 0); }

    const std::shared_ptr<Node>& node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

namespace detail {
inline thread_local bool grad_enabled = true;
}

inline bool grad_enabled() { return detail::grad_enabled; }

/// Disables graph construction in its scope (evaluation, optimizer updates).
class NoGradGuard {
public:
    NoGradGuard() : previous_(detail::grad_enabled) { detail::grad_enabled = false; }
    ~NoGradGuard() { detail::grad_enabled = previous_; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

/// Wraps an op result; parents and the backward closure are kept only when a gradient can flow.
inline Tensor make_result(Matrix value, std::initializer_list<Tensor> parents, std::function<void(Node&)> backward) {
    Tensor out(std::move(value), false);
    if (!grad_enabled()) return out;
    bool needs = false;
    for (const auto& p : parents) needs |= p.requires_grad();
    if (!needs) return out;
    auto& n = *out.node();
    n.requires_grad = true;
    for (const auto& p : parents) n.parents.push_back(p.node());
    n.backward_fn = std::move(backward);
    return out;
}

inline Tensor make_result(Matrix value, const std::vector<Tensor>& parents, std::function<void(Node&)> backward) {
    Tensor out(std::move(value), false);
    if (!grad_enabled()) return out;
    bool needs = false;
    for (const auto& p : parents) needs |= p.requires_grad();
    if (!needs) return out;
    auto& n = *out.node();
    n.requires_grad = true;
    for (const auto& p : parents) n.parents.push_back(p.node());
    n.backward_fn = std::move(backward);
    return out;
}

/// Accumulates d(loss)/d(x) into every reachable tensor with requires_grad.
/// Leaf gradients add up across calls; intermediate ones are recomputed each call.
inline void backward(const Tensor& loss) {
    if (!loss.defined() || loss.rows() != 1 || loss.cols() != 1) throw ValidationError("backward: loss must be a scalar");
    if (!loss.requires_grad()) return;
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && p->backward_fn && visited.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    for (Node* n : order)
        if (n->backward_fn) n->grad = Matrix::Zero(n->value.rows(), n->value.cols());
    loss.node()->ensure_grad()(0, 0) += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

}  // namespace cdrgnn::nn
