#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "cdrgnn/common/error.hpp"

namespace cdrgnn::metrics {

struct WilcoxonResult {
    double statistic = 0.0;  // min(W+, W-)
    double p_value = 1.0;    // two-sided
    std::size_t n = 0;       // pairs left after dropping zero differences
    bool exact = true;
};

inline constexpr std::size_t kWilcoxonExactMax = 25;

/// Average ranks of |d| (1-based, ties share the midrank).
inline std::vector<double> midranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> rank(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = 0.5 * double(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
        i = j + 1;
    }
    return rank;
}

inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("wilcoxon: samples must be paired (equal length)");
    std::vector<double> diff, mag;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d == 0.0) continue;
        diff.push_back(d);
        mag.push_back(std::abs(d));
    }
    WilcoxonResult out;
    out.n = diff.size();
    if (diff.empty()) return out;

    const auto rank = midranks(mag);
    const std::size_t n = diff.size();
    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (diff[i] > 0) w_plus += rank[i];
    const double total = double(n) * double(n + 1) / 2.0;
    out.statistic = std::min(w_plus, total - w_plus);

    if (n <= kWilcoxonExactMax) {
        // Doubled midranks are integers, so the null distribution of 2·W+ is a
        // subset-sum count over 2^n equally likely sign patterns.
        std::vector<int> r2(n);
        int max_sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            r2[i] = int(std::lround(2.0 * rank[i]));
            max_sum += r2[i];
        }
        std::vector<double> ways(std::size_t(max_sum) + 1, 0.0);
        ways[0] = 1.0;
        int reach = 0;
        for (int r : r2) {
            for (int s = reach; s >= 0; --s)
                if (ways[std::size_t(s)] != 0.0) ways[std::size_t(s + r)] += ways[std::size_t(s)];
            reach += r;
        }
        const int w2 = int(std::lround(2.0 * w_plus));
        double lower = 0.0, upper = 0.0;
        for (int s = 0; s <= max_sum; ++s) {
            if (s <= w2) lower += ways[std::size_t(s)];
            if (s >= w2) upper += ways[std::size_t(s)];
        }
        const double denom = std::ldexp(1.0, int(n));
        out.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / denom);
        out.exact = true;
    } else {
        double tie_term = 0.0;
        std::vector<double> sorted = mag;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < n;) {
            std::size_t j = i;
            while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
            const double t = double(j - i + 1);
            tie_term += t * t * t - t;
            i = j + 1;
        }
        const double mean = total / 2.0;
        const double var = double(n) * double(n + 1) * double(2 * n + 1) / 24.0 - tie_term / 48.0;
        const double dev = std::max(0.0, std::abs(w_plus - mean) - 0.5);
        const double z = var > 0 ? dev / std::sqrt(var) : 0.0;
        out.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
        out.exact = false;
    }
    return out;
}

}  // namespace cdrgnn::metrics
