#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "cdrgnn/common/csv.hpp"
#include "cdrgnn/common/error.hpp"
#include "cdrgnn/graphstore/types.hpp"

namespace cdrgnn::synthgen {

using graphstore::Gender;

struct AgeBand {
    int lo, hi;
};
inline constexpr std::array<AgeBand, 5> kAgeBands = {{{18, 24}, {25, 34}, {35, 44}, {45, 54}, {55, 65}}};

inline std::size_t age_band(int age) {
    for (std::size_t i = 0; i < kAgeBands.size(); ++i)
        if (age <= kAgeBands[i].hi) return i;
    return kAgeBands.size() - 1;
}

/// Mean monthly calls and SMS one user sends along an active tie.
struct Rates {
    double calls = 0.0;
    double sms = 0.0;

    friend bool operator==(const Rates&, const Rates&) = default;
};

using ActivityProfile = std::array<std::array<Rates, kAgeBands.size()>, 2>;  // [gender][band]

inline ActivityProfile default_profile() {
    // Younger users call and text more; group B texts a little more than group A.
    return {{{{{5.0, 9.0}, {4.5, 6.0}, {4.0, 4.0}, {3.5, 2.5}, {3.0, 1.5}}},
             {{{5.5, 11.0}, {5.0, 7.0}, {4.2, 4.5}, {3.6, 3.0}, {3.2, 2.0}}}}};
}

struct GenConfig {
    int n_nodes = 2000;
    int n_months = 36;
    int start_year = 2007;
    unsigned start_month = 1;
    double mean_degree = 8.0;
    double tie_persistence = 0.85;    // P(active -> active)
    double reactivation_rate = 0.2;   // P(dormant -> active); kept below tie_persistence
    double novel_tie_rate = 0.015;    // expected new ties per node per month
    double december_boost = 1.5;
    double dispersion = 2.0;          // negative-binomial shape; smaller is burstier
    double tie_intensity_sd = 0.5;    // log-normal spread of per-tie activity
    int n_cities = 8;
    double cross_city_fraction = 0.05;
    ActivityProfile profile = default_profile();
    std::uint64_t rng_seed = 1;

    graphstore::ObservationWindow window() const { return {start_year, start_month, n_months}; }

    void validate() const {
        auto prob = [](double v, const char* name) {
            require(v >= 0.0 && v <= 1.0, std::string("GenConfig: ") + name + " must be in [0,1]");
        };
        require(n_nodes >= 2, "GenConfig: n_nodes must be >= 2");
        require(n_months >= 2, "GenConfig: n_months must be >= 2");
        require(start_month >= 1 && start_month <= 12, "GenConfig: start_month must be in 1..12");
        require(mean_degree > 0.0 && mean_degree < n_nodes, "GenConfig: mean_degree must be in (0, n_nodes)");
        prob(tie_persistence, "tie_persistence");
        prob(reactivation_rate, "reactivation_rate");
        prob(novel_tie_rate, "novel_tie_rate");
        prob(cross_city_fraction, "cross_city_fraction");
        require(2.0 * novel_tie_rate / mean_degree <= 1.0, "GenConfig: novel_tie_rate too large for mean_degree");
        require(december_boost >= 0.0, "GenConfig: december_boost must be >= 0");
        require(dispersion > 0.0, "GenConfig: dispersion must be > 0");
        require(tie_intensity_sd >= 0.0, "GenConfig: tie_intensity_sd must be >= 0");
        require(n_cities >= 1, "GenConfig: n_cities must be >= 1");
        for (const auto& g : profile)
            for (const auto& r : g) require(r.calls >= 0.0 && r.sms >= 0.0, "GenConfig: activity rates must be >= 0");
    }

    friend bool operator==(const GenConfig&, const GenConfig&) = default;
};

inline constexpr int kGenConfigVersion = 1;

inline std::string profile_key(std::size_t gender, std::size_t band) {
    return std::string("profile.") + (gender == 0 ? "A" : "B") + "." + std::to_string(kAgeBands[band].lo) + "-" +
           std::to_string(kAgeBands[band].hi);
}

/// `key = value` lines; profile rows hold "calls sms".
inline void write_config(std::ostream& out, const GenConfig& c) {
    auto d = [](double v) { return csv::format_double(v); };
    out << "# synthetic CDR generator\n";
    out << "version = " << kGenConfigVersion << '\n';
    out << "n_nodes = " << c.n_nodes << '\n';
    out << "n_months = " << c.n_months << '\n';
    out << "start_year = " << c.start_year << '\n';
    out << "start_month = " << c.start_month << '\n';
    out << "mean_degree = " << d(c.mean_degree) << '\n';
    out << "tie_persistence = " << d(c.tie_persistence) << '\n';
    out << "reactivation_rate = " << d(c.reactivation_rate) << '\n';
    out << "novel_tie_rate = " << d(c.novel_tie_rate) << '\n';
    out << "december_boost = " << d(c.december_boost) << '\n';
    out << "dispersion = " << d(c.dispersion) << '\n';
    out << "tie_intensity_sd = " << d(c.tie_intensity_sd) << '\n';
    out << "n_cities = " << c.n_cities << '\n';
    out << "cross_city_fraction = " << d(c.cross_city_fraction) << '\n';
    out << "rng_seed = " << c.rng_seed << '\n';
    for (std::size_t g = 0; g < 2; ++g)
        for (std::size_t b = 0; b < kAgeBands.size(); ++b)
            out << profile_key(g, b) << " = " << d(c.profile[g][b].calls) << ' ' << d(c.profile[g][b].sms) << '\n';
}

/// Keys absent from the file keep the values already in `base`.
inline GenConfig read_config(std::istream& in, GenConfig base = {}) {
    std::string line;
    std::size_t lineno = 0;
    bool versioned = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = csv::trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        auto fail = [&](const std::string& why) {
            throw DataError("config line " + std::to_string(lineno) + ": " + why);
        };
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
            if (v != kGenConfigVersion) fail("unsupported config version " + std::to_string(v));
            versioned = true;
        } else if (key == "n_nodes") num(base.n_nodes);
        else if (key == "n_months") num(base.n_months);
        else if (key == "start_year") num(base.start_year);
        else if (key == "start_month") num(base.start_month);
        else if (key == "mean_degree") num(base.mean_degree);
        else if (key == "tie_persistence") num(base.tie_persistence);
        else if (key == "reactivation_rate") num(base.reactivation_rate);
        else if (key == "novel_tie_rate") num(base.novel_tie_rate);
        else if (key == "december_boost") num(base.december_boost);
        else if (key == "dispersion") num(base.dispersion);
        else if (key == "tie_intensity_sd") num(base.tie_intensity_sd);
        else if (key == "n_cities") num(base.n_cities);
        else if (key == "cross_city_fraction") num(base.cross_city_fraction);
        else if (key == "rng_seed") num(base.rng_seed);
        else if (key.starts_with("profile.")) {
            bool found = false;
            for (std::size_t g = 0; g < 2 && !found; ++g)
                for (std::size_t b = 0; b < kAgeBands.size() && !found; ++b)
                    if (key == profile_key(g, b)) {
                        const auto parts = csv::split(value, ' ');
                        std::vector<std::string_view> fields;
                        for (auto p : parts)
                            if (!p.empty()) fields.push_back(p);
                        auto c = fields.size() == 2 ? csv::parse_number<double>(fields[0]) : std::nullopt;
                        auto s = fields.size() == 2 ? csv::parse_number<double>(fields[1]) : std::nullopt;
                        if (!c || !s) fail("profile rows need two numbers: calls sms");
                        base.profile[g][b] = {*c, *s};
                        found = true;
                    }
            if (!found) fail("unknown profile group " + key);
        } else
            fail("unknown key " + key);
    }
    if (!versioned) throw DataError("config: missing version line");
    base.validate();
    return base;
}

inline GenConfig load_config(const std::filesystem::path& path, GenConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read_config(in, base);
}

inline void save_config(const std::filesystem::path& path, const GenConfig& c) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_config(out, c);
}

}  // namespace cdrgnn::synthgen
