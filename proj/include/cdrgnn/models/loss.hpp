#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "cdrgnn/metrics/report.hpp"
#include "cdrgnn/nn/ops.hpp"

namespace cdrgnn::models {

/// (w_pos Σ_pos se + w_neg Σ_neg se) / (N_pos + N_neg), se = squared error averaged over the two channels.
inline nn::Tensor mse_loss(const nn::Tensor& pred, const nn::Matrix& truth, const std::vector<metrics::EdgeSet>& set,
                           double positive_weight = 1.0, double negative_weight = 1.0) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols() || std::size_t(truth.rows()) != set.size())
        throw ValidationError("mse_loss: predictions, targets and edge kinds must align");
    if (truth.rows() == 0) return nn::Tensor::scalar(0.0);
    const double denom = double(truth.rows()) * double(truth.cols());
    nn::Matrix w(truth.rows(), 1);
    for (std::size_t i = 0; i < set.size(); ++i)
        w(Eigen::Index(i), 0) = (set[i] == metrics::EdgeSet::positive ? positive_weight : negative_weight) / denom;
    const nn::Tensor se = nn::square(nn::sub(pred, nn::Tensor::constant(truth)));
    return nn::sum(nn::mul_col(se, nn::Tensor::constant(w)));
}

/// Σ KL(N(mu_q, sd_q²) || N(mu_p, sd_p²)) over all elements.
inline nn::Tensor gaussian_kl(const nn::Tensor& mu_q, const nn::Tensor& sd_q, const nn::Tensor& mu_p,
                              const nn::Tensor& sd_p) {
    using namespace nn;
    const Tensor var_q = square(sd_q), var_p = square(sd_p);
    const Tensor ratio = mul(add(var_q, square(sub(mu_q, mu_p))), exp(scale(log(var_p), -1.0)));
    const Tensor terms = add_scalar(add(sub(log(var_p), log(var_q)), ratio), -1.0);
    return scale(sum(terms), 0.5);
}

/// Negative log-density of x under N(mu, 1), summed.
inline double unit_gaussian_nll(const nn::Matrix& mu, const nn::Matrix& x) {
    const double c = 0.5 * std::log(2.0 * std::numbers::pi);
    return 0.5 * (x - mu).squaredNorm() + c * double(x.size());
}

}  // namespace cdrgnn::models
