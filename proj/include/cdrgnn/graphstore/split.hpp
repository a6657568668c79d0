#pragma once

#include <cmath>
#include <string>

#include "cdrgnn/graphstore/types.hpp"

namespace cdrgnn::graphstore {

/// Months 1..train_cutoff train, (train_cutoff, val_cutoff] validate, (val_cutoff, test_end] test.
struct Split {
    Month train_cutoff = 24;
    Month val_cutoff = 30;
    Month test_end = 36;

    bool is_train(Month m) const { return m >= 1 && m <= train_cutoff; }
    bool is_validation(Month m) const { return m > train_cutoff && m <= val_cutoff; }
    bool is_test(Month m) const { return m > val_cutoff && m <= test_end; }

    /// Development = train + validation; the cutoff used by reoccurrence/surprise/TET.
    Month dev_cutoff() const { return val_cutoff; }

    void validate(int num_months) const {
        if (!(1 <= train_cutoff && train_cutoff < val_cutoff && val_cutoff < test_end && test_end == num_months))
            throw ValidationError("invalid split (" + std::to_string(train_cutoff) + ", " + std::to_string(val_cutoff) +
                                  ", " + std::to_string(test_end) + ") for " + std::to_string(num_months) +
                                  " months; need 1 <= train < val < test_end = T");
    }

    friend bool operator==(const Split&, const Split&) = default;
};

inline Split temporal_split(int num_months, Month train_cutoff, Month val_cutoff, Month test_end) {
    Split s{train_cutoff, val_cutoff, test_end};
    s.validate(num_months);
    return s;
}

inline Split temporal_split(const TemporalGraph& graph, Month train_cutoff, Month val_cutoff, Month test_end) {
    return temporal_split(graph.num_months(), train_cutoff, val_cutoff, test_end);
}

/// The 24/6/6 month proportions scaled to T months; T = 36 gives (24, 30, 36).
inline Split default_split(int num_months) {
    if (num_months < 3) throw ValidationError("default split needs at least 3 months");
    const int T = num_months;
    int train = int(std::lround(T * 24.0 / 36.0));
    int val = int(std::lround(T * 30.0 / 36.0));
    train = std::clamp(train, 1, T - 2);
    val = std::clamp(val, train + 1, T - 1);
    return temporal_split(T, train, val, T);
}

}  // namespace cdrgnn::graphstore
