#pragma once

#include <cmath>
#include <string>

#include "cdrgnn/graphstore/split.hpp"
#include "cdrgnn/synthgen/generate.hpp"

namespace cdrgnn::synthgen {

struct CalibrationTarget {
    double novelty = 0.05;
    double reoccurrence = 0.78;
    double surprise = 0.03;
    double novelty_tol = 0.02;
    double reoccurrence_tol = 0.05;
    double surprise_tol = 0.02;

    void validate() const {
        for (double v : {novelty, reoccurrence, surprise})
            require(v >= 0.0 && v <= 1.0, "CalibrationTarget: targets must be in [0,1]");
        for (double v : {novelty_tol, reoccurrence_tol, surprise_tol})
            require(v > 0.0, "CalibrationTarget: tolerances must be > 0");
    }

    bool satisfied(const Indices& x) const {
        return std::abs(x.novelty - novelty) <= novelty_tol &&
               std::abs(x.reoccurrence - reoccurrence) <= reoccurrence_tol &&
               std::abs(x.surprise - surprise) <= surprise_tol;
    }

    double loss(const Indices& x) const {
        auto sq = [](double d, double tol) { return (d / tol) * (d / tol); };
        return sq(x.novelty - novelty, novelty_tol) + sq(x.reoccurrence - reoccurrence, reoccurrence_tol) +
               sq(x.surprise - surprise, surprise_tol);
    }
};

struct CalibrationResult {
    GenConfig config;
    Indices achieved;
    bool converged = false;
    int evaluations = 0;
};

/// Indices of the tie process for `c`, measured against the validation cutoff of the default split.
inline Indices measure_presence(const GenConfig& c) {
    c.validate();
    const SeedSplitter seeds(c.rng_seed);
    const auto pop = make_population(c, seeds);
    const auto ties = simulate_ties(c, pop, seeds);
    return presence_indices(ties, c.n_months, graphstore::default_split(c.n_months).val_cutoff);
}

/// Coordinate search over (tie_persistence, novel_tie_rate) with the seed held fixed.
/// `budget` counts index evaluations, the starting point included.
inline CalibrationResult calibrate(const GenConfig& start, const CalibrationTarget& target, int budget) {
    require(budget >= 1, "calibrate: budget must be >= 1");
    target.validate();
    CalibrationResult best{start, measure_presence(start), false, 1};
    double best_loss = target.loss(best.achieved);
    best.converged = target.satisfied(best.achieved);

    const double p_lo = std::min(0.99, start.reactivation_rate + 0.01), p_hi = 0.99;
    const double c_hi = std::min(1.0, start.mean_degree / 2.0);
    // persistence moves additively, the tie rate multiplicatively (it spans orders of magnitude)
    double step_p = 0.08, factor_c = 2.0;
    while (!best.converged && best.evaluations < budget && (step_p > 1e-4 || factor_c > 1.0001)) {
        bool moved = false;
        for (int coord = 0; coord < 2 && !best.converged; ++coord)
            for (int sign : {+1, -1}) {
                if (best.evaluations >= budget) break;
                GenConfig trial = best.config;
                if (coord == 0)
                    trial.tie_persistence = std::clamp(trial.tie_persistence + sign * step_p, p_lo, p_hi);
                else
                    trial.novel_tie_rate =
                        std::clamp(sign > 0 ? std::max(trial.novel_tie_rate, 1e-3) * factor_c
                                            : trial.novel_tie_rate / factor_c,
                                   0.0, c_hi);
                if (trial == best.config) continue;
                const Indices x = measure_presence(trial);
                ++best.evaluations;
                const double l = target.loss(x);
                if (l < best_loss) {
                    best_loss = l;
                    best.config = trial;
                    best.achieved = x;
                    best.converged = target.satisfied(x);
                    moved = true;
                    break;
                }
            }
        if (!moved) {
            step_p *= 0.5;
            factor_c = std::sqrt(factor_c);
        }
    }
    return best;
}

}  // namespace cdrgnn::synthgen
