#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "cdrgnn/nn/tensor.hpp"

namespace cdrgnn::nn {

namespace detail {

inline void same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ValidationError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                              std::to_string(b.cols()));
}

inline Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

/// Elementwise map whose derivative is expressed through input x and output y.
template <class F, class D>
Tensor unary(const Tensor& x, F f, D dfdx) {
    Matrix y = x.value().unaryExpr(f);
    return make_result(std::move(y), {x}, [dfdx](Node& self) {
        Node& p = parent(self, 0);
        if (!p.requires_grad) return;
        p.ensure_grad().array() += self.grad.array() * p.value.binaryExpr(self.value, dfdx).array();
    });
}

}  // namespace detail

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw ValidationError("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                              std::to_string(b.rows()) + ")");
    return make_result(a.value() * b.value(), {a, b}, [](Node& self) {
        Node& a = detail::parent(self, 0);
        Node& b = detail::parent(self, 1);
        if (a.requires_grad) a.ensure_grad().noalias() += self.grad * b.value.transpose();
        if (b.requires_grad) b.ensure_grad().noalias() += a.value.transpose() * self.grad;
    });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::same_shape(a, b, "add");
    return make_result(a.value() + b.value(), {a, b}, [](Node& self) {
        for (int i = 0; i < 2; ++i) {
            Node& p = detail::parent(self, std::size_t(i));
            if (p.requires_grad) p.ensure_grad() += self.grad;
        }
    });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::same_shape(a, b, "sub");
    return make_result(a.value() - b.value(), {a, b}, [](Node& self) {
        Node& a = detail::parent(self, 0);
        Node& b = detail::parent(self, 1);
        if (a.requires_grad) a.ensure_grad() += self.grad;
        if (b.requires_grad) b.ensure_grad() -= self.grad;
    });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::same_shape(a, b, "mul");
    return make_result(a.value().cwiseProduct(b.value()), {a, b}, [](Node& self) {
        Node& a = detail::parent(self, 0);
        Node& b = detail::parent(self, 1);
        if (a.requires_grad) a.ensure_grad() += self.grad.cwiseProduct(b.value);
        if (b.requires_grad) b.ensure_grad() += self.grad.cwiseProduct(a.value);
    });
}

inline Tensor scale(const Tensor& a, double s) {
    return make_result(a.value() * s, {a}, [s](Node& self) {
        Node& p = detail::parent(self, 0);
        if (p.requires_grad) p.ensure_grad() += self.grad * s;
    });
}

inline Tensor add_scalar(const Tensor& a, double s) {
    return make_result((a.value().array() + s).matrix(), {a}, [](Node& self) {
        Node& p = detail::parent(self, 0);
        if (p.requires_grad) p.ensure_grad() += self.grad;
    });
}

inline Tensor one_minus(const Tensor& a) { return add_scalar(scale(a, -1.0), 1.0); }

/// A (n x c) + b (1 x c) broadcast over rows.
inline Tensor add_row(const Tensor& a, const Tensor& b) {
    if (b.rows() != 1 || b.cols() != a.cols()) throw ValidationError("add_row: bias must be 1 x cols");
    return make_result(a.value().rowwise() + b.value().row(0), {a, b}, [](Node& self) {
        Node& a = detail::parent(self, 0);
        Node& b = detail::parent(self, 1);
        if (a.requires_grad) a.ensure_grad() += self.grad;
        if (b.requires_grad) b.ensure_grad() += self.grad.colwise().sum();
    });
}

/// A (n x c) scaled column-wise by b (1 x c).
inline Tensor mul_row(const Tensor& a, const Tensor& b) {
    if (b.rows() != 1 || b.cols() != a.cols()) throw ValidationError("mul_row: factor must be 1 x cols");
    Matrix y = a.value();
    for (Eigen::Index r = 0; r < y.rows(); ++r) y.row(r).array() *= b.value().row(0).array();
    return make_result(std::move(y), {a, b}, [](Node& self) {
        Node& a = detail::parent(self, 0);
        Node& b = detail::parent(self, 1);
        if (a.requires_grad) {
            Matrix& g = a.ensure_grad();
            for (Eigen::Index r = 0; r < g.rows(); ++r) g.row(r).array() += self.grad.row(r).array() * b.value.row(0).array();
        }
        if (b.requires_grad) b.ensure_grad() += self.grad.cwiseProduct(a.value).colwise().sum();
    });
}

/// A (n x c) scaled row-wise by v (n x 1).
inline Tensor mul_col(const Tensor& a, const Tensor& v) {
    if (v.cols() != 1 || v.rows() != a.rows()) throw ValidationError("mul_col: factor must be rows x 1");
    Matrix y = a.value();
    for (Eigen::Index r = 0; r < y.rows(); ++r) y.row(r) *= v.value()(r, 0);
    return make_result(std::move(y), {a, v}, [](Node& self) {
        Node& a = detail::parent(self, 0);
        Node& v = detail::parent(self, 1);
        if (a.requires_grad) {
            Matrix& g = a.ensure_grad();
            for (Eigen::Index r = 0; r < g.rows(); ++r) g.row(r) += self.grad.row(r) * v.value(r, 0);
        }
        if (v.requires_grad) v.ensure_grad() += self.grad.cwiseProduct(a.value).rowwise().sum();
    });
}

inline Tensor sigmoid(const Tensor& x) {
    return detail::unary(
        x, [](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); },
        [](double, double y) { return y * (1.0 - y); });
}

inline Tensor tanh(const Tensor& x) {
    return detail::unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

inline Tensor relu(const Tensor& x) {
    return detail::unary(x, [](double v) { return v > 0 ? v : 0.0; }, [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

inline Tensor leaky_relu(const Tensor& x, double alpha = 0.2) {
    return detail::unary(
        x, [alpha](double v) { return v > 0 ? v : alpha * v; },
        [alpha](double v, double) { return v > 0 ? 1.0 : alpha; });
}

inline Tensor elu(const Tensor& x) {
    return detail::unary(
        x, [](double v) { return v > 0 ? v : std::expm1(v); }, [](double v, double y) { return v > 0 ? 1.0 : y + 1.0; });
}

inline Tensor exp(const Tensor& x) {
    return detail::unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

inline Tensor log(const Tensor& x) {
    return detail::unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

inline Tensor softplus(const Tensor& x) {
    return detail::unary(
        x, [](double v) { return v > 30 ? v : std::log1p(std::exp(v)); },
        [](double v, double) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); });
}

inline Tensor square(const Tensor& x) {
    return detail::unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

/// (x + eps)^(-1/2).
inline Tensor rsqrt(const Tensor& x, double eps = 0.0) {
    return detail::unary(
        x, [eps](double v) { return 1.0 / std::sqrt(v + eps); },
        [](double, double y) { return -0.5 * y * y * y; });
}

/// x^(-1/2) for x > 0 and 0 for x == 0 (isolated nodes).
inline Tensor rsqrt_or_zero(const Tensor& x) {
    return detail::unary(
        x, [](double v) { return v > 0 ? 1.0 / std::sqrt(v) : 0.0; },
        [](double v, double y) { return v > 0 ? -0.5 * y * y * y : 0.0; });
}

inline Tensor sum(const Tensor& x) {
    return make_result(Matrix::Constant(1, 1, x.value().sum()), {x}, [](Node& self) {
        Node& p = detail::parent(self, 0);
        if (p.requires_grad) p.ensure_grad().array() += self.grad(0, 0);
    });
}

inline Tensor mean(const Tensor& x) {
    const double n = double(x.value().size());
    if (n == 0) throw ValidationError("mean: empty tensor");
    return scale(sum(x), 1.0 / n);
}

/// Column means, 1 x c.
inline Tensor mean_rows(const Tensor& x) {
    const double n = double(x.rows());
    if (n == 0) throw ValidationError("mean_rows: no rows");
    return make_result(x.value().colwise().mean(), {x}, [n](Node& self) {
        Node& p = detail::parent(self, 0);
        if (!p.requires_grad) return;
        Matrix& g = p.ensure_grad();
        for (Eigen::Index r = 0; r < g.rows(); ++r) g.row(r) += self.grad.row(0) / n;
    });
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ValidationError("concat_cols: nothing to concatenate");
    Eigen::Index cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != parts[0].rows()) throw ValidationError("concat_cols: row counts differ");
        cols += p.cols();
    }
    Matrix y(parts[0].rows(), cols);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        y.middleCols(at, p.cols()) = p.value();
        at += p.cols();
    }
    return make_result(std::move(y), parts, [](Node& self) {
        Eigen::Index at = 0;
        for (auto& pp : self.parents) {
            const auto c = pp->value.cols();
            if (pp->requires_grad) pp->ensure_grad() += self.grad.middleCols(at, c);
            at += c;
        }
    });
}

inline Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ValidationError("concat_rows: nothing to concatenate");
    Eigen::Index rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != parts[0].cols()) throw ValidationError("concat_rows: column counts differ");
        rows += p.rows();
    }
    Matrix y(rows, parts[0].cols());
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        y.middleRows(at, p.rows()) = p.value();
        at += p.rows();
    }
    return make_result(std::move(y), parts, [](Node& self) {
        Eigen::Index at = 0;
        for (auto& pp : self.parents) {
            const auto r = pp->value.rows();
            if (pp->requires_grad) pp->ensure_grad() += self.grad.middleRows(at, r);
            at += r;
        }
    });
}

inline Tensor slice_cols(const Tensor& x, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > x.cols()) throw ValidationError("slice_cols: range out of bounds");
    return make_result(x.value().middleCols(start, count), {x}, [start, count](Node& self) {
        Node& p = detail::parent(self, 0);
        if (p.requires_grad) p.ensure_grad().middleCols(start, count) += self.grad;
    });
}

inline void check_indices(const Indices& idx, Eigen::Index bound, const char* op) {
    for (int i : idx)
        if (i < 0 || i >= bound) throw ValidationError(std::string(op) + ": index out of range");
}

/// Rows x[idx[0]], x[idx[1]], ...
inline Tensor gather_rows(const Tensor& x, const Indices& idx) {
    check_indices(idx, x.rows(), "gather_rows");
    Matrix y(Eigen::Index(idx.size()), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) y.row(Eigen::Index(i)) = x.value().row(idx[i]);
    return make_result(std::move(y), {x}, [idx](Node& self) {
        Node& p = detail::parent(self, 0);
        if (!p.requires_grad) return;
        Matrix& g = p.ensure_grad();
        for (std::size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += self.grad.row(Eigen::Index(i));
    });
}

/// out (n x c) with out[idx[i]] += x[i].
inline Tensor scatter_add_rows(const Tensor& x, const Indices& idx, Eigen::Index n) {
    if (Eigen::Index(idx.size()) != x.rows()) throw ValidationError("scatter_add_rows: one index per row");
    check_indices(idx, n, "scatter_add_rows");
    Matrix y = Matrix::Zero(n, x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) y.row(idx[i]) += x.value().row(Eigen::Index(i));
    return make_result(std::move(y), {x}, [idx](Node& self) {
        Node& p = detail::parent(self, 0);
        if (!p.requires_grad) return;
        Matrix& g = p.ensure_grad();
        for (std::size_t i = 0; i < idx.size(); ++i) g.row(Eigen::Index(i)) += self.grad.row(idx[i]);
    });
}

/// Sparse propagation: out[dst[e]] += w[e] * x[src[e]], out has n rows.
inline Tensor propagate(const Tensor& x, const Indices& src, const Indices& dst, const Tensor& w, Eigen::Index n) {
    if (src.size() != dst.size() || w.cols() != 1 || w.rows() != Eigen::Index(src.size()))
        throw ValidationError("propagate: src, dst and weights must align");
    check_indices(src, x.rows(), "propagate");
    check_indices(dst, n, "propagate");
    Matrix y = Matrix::Zero(n, x.cols());
    for (std::size_t e = 0; e < src.size(); ++e) y.row(dst[e]) += w.value()(Eigen::Index(e), 0) * x.value().row(src[e]);
    return make_result(std::move(y), {x, w}, [src, dst](Node& self) {
        Node& x = detail::parent(self, 0);
        Node& w = detail::parent(self, 1);
        if (x.requires_grad) {
            Matrix& g = x.ensure_grad();
            for (std::size_t e = 0; e < src.size(); ++e) g.row(src[e]) += w.value(Eigen::Index(e), 0) * self.grad.row(dst[e]);
        }
        if (w.requires_grad) {
            Matrix& g = w.ensure_grad();
            for (std::size_t e = 0; e < src.size(); ++e) g(Eigen::Index(e), 0) += self.grad.row(dst[e]).dot(x.value.row(src[e]));
        }
    });
}

/// Row-wise dot products, n x 1.
inline Tensor row_dot(const Tensor& a, const Tensor& b) {
    detail::same_shape(a, b, "row_dot");
    return make_result(a.value().cwiseProduct(b.value()).rowwise().sum(), {a, b}, [](Node& self) {
        Node& a = detail::parent(self, 0);
        Node& b = detail::parent(self, 1);
        for (Eigen::Index r = 0; r < self.grad.rows(); ++r) {
            const double g = self.grad(r, 0);
            if (a.requires_grad) a.ensure_grad().row(r) += g * b.value.row(r);
            if (b.requires_grad) b.ensure_grad().row(r) += g * a.value.row(r);
        }
    });
}

inline Tensor softmax_rows(const Tensor& x) {
    Matrix y = x.value();
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        const double m = y.row(r).maxCoeff();
        y.row(r) = (y.row(r).array() - m).exp().matrix();
        y.row(r) /= y.row(r).sum();
    }
    return make_result(std::move(y), {x}, [](Node& self) {
        Node& p = detail::parent(self, 0);
        if (!p.requires_grad) return;
        Matrix& g = p.ensure_grad();
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const double dot = self.grad.row(r).dot(self.value.row(r));
            g.row(r).array() += self.value.row(r).array() * (self.grad.row(r).array() - dot);
        }
    });
}

/// Softmax of a column of scores within each segment (e.g. the in-edges of a node).
inline Tensor segment_softmax(const Tensor& scores, const Indices& segment, Eigen::Index n_segments) {
    if (scores.cols() != 1 || scores.rows() != Eigen::Index(segment.size()))
        throw ValidationError("segment_softmax: one score per segment entry");
    check_indices(segment, n_segments, "segment_softmax");
    std::vector<double> hi(std::size_t(n_segments), -std::numeric_limits<double>::infinity()), total(std::size_t(n_segments), 0.0);
    const Matrix& s = scores.value();
    for (std::size_t i = 0; i < segment.size(); ++i)
        hi[std::size_t(segment[i])] = std::max(hi[std::size_t(segment[i])], s(Eigen::Index(i), 0));
    Matrix y(s.rows(), 1);
    for (std::size_t i = 0; i < segment.size(); ++i) {
        y(Eigen::Index(i), 0) = std::exp(s(Eigen::Index(i), 0) - hi[std::size_t(segment[i])]);
        total[std::size_t(segment[i])] += y(Eigen::Index(i), 0);
    }
    for (std::size_t i = 0; i < segment.size(); ++i) y(Eigen::Index(i), 0) /= total[std::size_t(segment[i])];
    return make_result(std::move(y), {scores}, [segment, n_segments](Node& self) {
        Node& p = detail::parent(self, 0);
        if (!p.requires_grad) return;
        std::vector<double> dot(std::size_t(n_segments), 0.0);
        for (std::size_t i = 0; i < segment.size(); ++i)
            dot[std::size_t(segment[i])] += self.grad(Eigen::Index(i), 0) * self.value(Eigen::Index(i), 0);
        Matrix& g = p.ensure_grad();
        for (std::size_t i = 0; i < segment.size(); ++i)
            g(Eigen::Index(i), 0) += self.value(Eigen::Index(i), 0) * (self.grad(Eigen::Index(i), 0) - dot[std::size_t(segment[i])]);
    });
}

/// Column-wise maximum over the rows of each segment; empty segments give 0.
inline Tensor segment_max(const Tensor& x, const Indices& segment, Eigen::Index n_segments) {
    if (x.rows() != Eigen::Index(segment.size())) throw ValidationError("segment_max: one segment id per row");
    check_indices(segment, n_segments, "segment_max");
    const Eigen::Index c = x.cols();
    Matrix y = Matrix::Zero(n_segments, c);
    std::vector<int> arg(std::size_t(n_segments * c), -1);
    for (std::size_t i = 0; i < segment.size(); ++i)
        for (Eigen::Index k = 0; k < c; ++k) {
            int& a = arg[std::size_t(segment[i] * c + k)];
            const double v = x.value()(Eigen::Index(i), k);
            if (a < 0 || v > y(segment[i], k)) {
                a = int(i);
                y(segment[i], k) = v;
            }
        }
    return make_result(std::move(y), {x}, [arg, c](Node& self) {
        Node& p = detail::parent(self, 0);
        if (!p.requires_grad) return;
        Matrix& g = p.ensure_grad();
        for (Eigen::Index s = 0; s < self.grad.rows(); ++s)
            for (Eigen::Index k = 0; k < c; ++k) {
                const int a = arg[std::size_t(s * c + k)];
                if (a >= 0) g(a, k) += self.grad(s, k);
            }
    });
}

}  // namespace cdrgnn::nn
