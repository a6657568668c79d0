#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "cdrgnn/common/csv.hpp"
#include "cdrgnn/common/error.hpp"
#include "cdrgnn/nn/layers.hpp"

namespace cdrgnn::models {

enum class Architecture { gcrn, vgrnn, dysat, roland };

inline constexpr Architecture kArchitectures[] = {Architecture::gcrn, Architecture::vgrnn, Architecture::dysat,
                                                  Architecture::roland};

inline const char* to_string(Architecture a) {
    switch (a) {
        case Architecture::gcrn: return "gcrn";
        case Architecture::vgrnn: return "vgrnn";
        case Architecture::dysat: return "dysat";
        case Architecture::roland: return "roland";
    }
    return "?";
}

inline std::optional<Architecture> parse_architecture(std::string_view s) {
    for (Architecture a : kArchitectures)
        if (s == to_string(a)) return a;
    return std::nullopt;
}

struct ModelConfig {
    Architecture architecture = Architecture::roland;
    int hidden_dim = 160;
    int chebyshev_K = 3;
    double learning_rate = 3e-5;
    double positive_weight = 1.0;
    double negative_weight = 1.0;
    int neg_ratio = 10;
    int patience = 20;
    int batch_subgraphs = 100;
    int max_epochs = 200;
    int hops = 3;
    nn::Aggregation aggregation = nn::Aggregation::mean;
    std::uint64_t rng_seed = 1;

    void validate() const {
        if (hidden_dim < 1) throw ValidationError("model: hidden_dim must be >= 1");
        if (chebyshev_K < 1) throw ValidationError("model: chebyshev_K must be >= 1");
        if (!(learning_rate > 0)) throw ValidationError("model: learning_rate must be > 0");
        if (positive_weight < 0 || negative_weight < 0 || positive_weight + negative_weight <= 0)
            throw ValidationError("model: loss weights must be >= 0 and not both zero");
        if (neg_ratio < 0) throw ValidationError("model: neg_ratio must be >= 0");
        if (patience < 0) throw ValidationError("model: patience must be >= 0");
        if (batch_subgraphs < 1) throw ValidationError("model: batch_subgraphs must be >= 1");
        if (max_epochs < 1) throw ValidationError("model: max_epochs must be >= 1");
        if (hops < 1) throw ValidationError("model: hops must be >= 1");
    }
};

/// Per-architecture hidden sizes and learning rates used in the original experiments.
inline ModelConfig default_config(Architecture a) {
    ModelConfig c;
    c.architecture = a;
    switch (a) {
        case Architecture::gcrn:
        case Architecture::vgrnn:
            c.hidden_dim = 176;
            c.learning_rate = 3e-4;
            break;
        case Architecture::dysat:
            c.hidden_dim = 89;
            c.learning_rate = 3e-4;
            break;
        case Architecture::roland:
            c.hidden_dim = 160;
            c.learning_rate = 3e-5;
            break;
    }
    return c;
}

inline constexpr int kModelConfigVersion = 1;

inline void write_model_config(std::ostream& out, const ModelConfig& c) {
    auto d = [](double v) { return csv::format_double(v); };
    out << "version = " << kModelConfigVersion << '\n';
    out << "architecture = " << to_string(c.architecture) << '\n';
    out << "hidden_dim = " << c.hidden_dim << '\n';
    out << "chebyshev_K = " << c.chebyshev_K << '\n';
    out << "learning_rate = " << d(c.learning_rate) << '\n';
    out << "positive_weight = " << d(c.positive_weight) << '\n';
    out << "negative_weight = " << d(c.negative_weight) << '\n';
    out << "neg_ratio = " << c.neg_ratio << '\n';
    out << "patience = " << c.patience << '\n';
    out << "batch_subgraphs = " << c.batch_subgraphs << '\n';
    out << "max_epochs = " << c.max_epochs << '\n';
    out << "hops = " << c.hops << '\n';
    out << "aggregation = " << (c.aggregation == nn::Aggregation::mean ? "mean" : "max") << '\n';
    out << "rng_seed = " << c.rng_seed << '\n';
}

/// Keys absent from the stream keep the values in `base`.
inline ModelConfig read_model_config(std::istream& in, ModelConfig base = {}) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = csv::trim(line);
        if (body.empty() || body.front() == '#') continue;
        auto fail = [&](const std::string& why) {
            throw DataError("model config line " + std::to_string(lineno) + ": " + why);
        };
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) fail("expected key = value");
        const std::string key(csv::trim(body.substr(0, eq)));
        const std::string_view value = csv::trim(body.substr(eq + 1));
        auto num = [&]<class T>(T& dst) {
            auto v = csv::parse_number<T>(value);
            if (!v) fail("bad value for " + key);
            dst = *v;
        };
        if (key == "version") {
            int v = 0;
            num(v);
            if (v != kModelConfigVersion) fail("unsupported version " + std::to_string(v));
        } else if (key == "architecture") {
            auto a = parse_architecture(value);
            if (!a) fail("unknown architecture '" + std::string(value) + "'");
            base.architecture = *a;
        } else if (key == "hidden_dim") num(base.hidden_dim);
        else if (key == "chebyshev_K") num(base.chebyshev_K);
        else if (key == "learning_rate") num(base.learning_rate);
        else if (key == "positive_weight") num(base.positive_weight);
        else if (key == "negative_weight") num(base.negative_weight);
        else if (key == "neg_ratio") num(base.neg_ratio);
        else if (key == "patience") num(base.patience);
        else if (key == "batch_subgraphs") num(base.batch_subgraphs);
        else if (key == "max_epochs") num(base.max_epochs);
        else if (key == "hops") num(base.hops);
        else if (key == "rng_seed") num(base.rng_seed);
        else if (key == "aggregation") {
            if (value == "mean") base.aggregation = nn::Aggregation::mean;
            else if (value == "max") base.aggregation = nn::Aggregation::max;
            else fail("aggregation must be mean or max");
        } else fail("unknown key '" + key + "'");
    }
    return base;
}

}  // namespace cdrgnn::models
