#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <unordered_set>
#include <vector>

#include "cdrgnn/common/random.hpp"
#include "cdrgnn/graphstore/ingest.hpp"
#include "cdrgnn/synthgen/config.hpp"

namespace cdrgnn::synthgen {

using graphstore::EventKind;
using graphstore::EventRecord;
using graphstore::NodeAttr;
using graphstore::NodeId;

inline constexpr NodeId kFirstNodeId = 1001;

struct Population {
    std::vector<NodeAttr> attrs;
    std::vector<int> city;
};

/// Undirected tie with its monthly on/off trajectory.
struct Tie {
    int u = 0;
    int v = 0;
    std::vector<std::uint8_t> active;  // [month - 1]
};

inline Population make_population(const GenConfig& c, const SeedSplitter& seeds) {
    Rng rng = seeds.stream("population");
    std::uniform_real_distribution<double> lat(60.0, 68.0), lon(21.0, 30.0);
    std::vector<std::pair<double, double>> centers;
    for (int k = 0; k < c.n_cities; ++k) centers.emplace_back(lat(rng), lon(rng));
    std::uniform_int_distribution<int> age(18, 65), city(0, c.n_cities - 1);
    std::normal_distribution<double> jitter(0.0, 0.05);
    Population p;
    for (int i = 0; i < c.n_nodes; ++i) {
        const int k = city(rng);
        NodeAttr a;
        a.age = age(rng);
        a.gender = uniform01(rng) < 0.5 ? Gender::a : Gender::b;
        a.latitude = centers[std::size_t(k)].first + jitter(rng);
        a.longitude = centers[std::size_t(k)].second + jitter(rng);
        p.attrs.push_back(a);
        p.city.push_back(k);
    }
    return p;
}

namespace detail {

// Preferential attachment urns: a node appears once, plus once per tie it holds.
class TieFactory {
public:
    TieFactory(const GenConfig& c, const Population& p) : c_(c), p_(p), by_city_(std::size_t(c.n_cities)) {
        for (int i = 0; i < c.n_nodes; ++i) {
            by_city_[std::size_t(p.city[std::size_t(i)])].push_back(i);
            global_.push_back(i);
        }
    }

    /// Partner for u, or -1 when no fresh partner turned up.
    int partner(Rng& rng, int u) {
        const bool cross = uniform01(rng) < c_.cross_city_fraction;
        const auto& urn = cross ? global_ : by_city_[std::size_t(p_.city[std::size_t(u)])];
        std::uniform_int_distribution<std::size_t> pick(0, urn.size() - 1);
        for (int attempt = 0; attempt < 32; ++attempt) {
            const int v = urn[pick(rng)];
            if (v != u && !pairs_.count(key(u, v))) return v;
        }
        return -1;
    }

    void add(int u, int v) {
        pairs_.insert(key(u, v));
        for (int x : {u, v}) {
            by_city_[std::size_t(p_.city[std::size_t(x)])].push_back(x);
            global_.push_back(x);
        }
    }

private:
    static std::uint64_t key(int a, int b) {
        if (a > b) std::swap(a, b);
        return (std::uint64_t(a) << 32) | std::uint32_t(b);
    }

    const GenConfig& c_;
    const Population& p_;
    std::vector<std::vector<int>> by_city_;
    std::vector<int> global_;
    std::unordered_set<std::uint64_t> pairs_;  // every pair that ever formed a tie
};

}  // namespace detail

/// Tie births, deaths and the active/dormant chain. Depends on the "ties" and
/// "activity" streams only, so count-related knobs never move presence.
inline std::vector<Tie> simulate_ties(const GenConfig& c, const Population& pop, const SeedSplitter& seeds) {
    Rng tie_rng = seeds.stream("ties");
    Rng act_rng = seeds.stream("activity");
    const int T = c.n_months;
    const double p = c.tie_persistence, r = c.reactivation_rate;
    const double stationary = (1.0 - p + r) > 0 ? r / (1.0 - p + r) : 1.0;
    const double death = 2.0 * c.novel_tie_rate / c.mean_degree;  // balances births in expectation

    detail::TieFactory factory(c, pop);
    std::vector<Tie> ties;
    auto form = [&](int u) {
        const int v = factory.partner(tie_rng, u);
        if (v < 0) return false;
        factory.add(u, v);
        ties.push_back(Tie{u, v, std::vector<std::uint8_t>(std::size_t(T), 0)});
        return true;
    };

    const auto initial = std::size_t(std::llround(c.n_nodes * c.mean_degree / 2.0));
    std::uniform_int_distribution<int> anyone(0, c.n_nodes - 1);
    for (int u = 0; u < c.n_nodes && ties.size() < initial; ++u) form(u);
    while (ties.size() < initial)
        if (!form(anyone(tie_rng)) && ties.size() * 2 >= std::size_t(c.n_nodes) * std::size_t(c.n_nodes - 1)) break;
    for (auto& t : ties) t.active[0] = uniform01(act_rng) < stationary;

    std::vector<std::uint8_t> alive(ties.size(), 1);
    std::binomial_distribution<int> births(c.n_nodes, c.novel_tie_rate);
    for (int m = 2; m <= T; ++m) {
        const auto k = std::size_t(m - 1);
        for (std::size_t i = 0; i < ties.size(); ++i) {
            if (!alive[i]) continue;
            if (uniform01(tie_rng) < death) {
                alive[i] = 0;
                continue;
            }
            const double u = uniform01(act_rng);
            ties[i].active[k] = ties[i].active[k - 1] ? u < p : u < r;
        }
        const int nb = births(tie_rng);
        for (int b = 0; b < nb; ++b)
            if (form(anyone(tie_rng))) {
                ties.back().active[k] = 1;
                alive.push_back(1);
            }
    }
    return ties;
}

struct Indices {
    double novelty = 0.0;
    double reoccurrence = 0.0;
    double surprise = 0.0;
};

/// The three indices straight from tie trajectories. Each active tie yields both
/// directed edges, which leaves every ratio unchanged.
inline Indices presence_indices(const std::vector<Tie>& ties, int T, int cutoff) {
    Indices out;
    std::vector<std::uint8_t> seen(ties.size(), 0);
    double sum = 0.0;
    int months = 0;
    for (int m = 1; m <= T; ++m) {
        std::size_t active = 0, fresh = 0;
        for (std::size_t i = 0; i < ties.size(); ++i)
            if (ties[i].active[std::size_t(m - 1)]) {
                ++active;
                if (!seen[i]) ++fresh;
                seen[i] = 1;
            }
        if (active == 0) continue;
        sum += double(fresh) / double(active);
        ++months;
    }
    out.novelty = months ? sum / months : 0.0;
    std::size_t dev = 0, test = 0, both = 0;
    for (const auto& t : ties) {
        bool d = false, s = false;
        for (int m = 1; m <= T; ++m)
            if (t.active[std::size_t(m - 1)]) (m <= cutoff ? d : s) = true;
        dev += d;
        test += s;
        both += d && s;
    }
    out.reoccurrence = dev ? double(both) / double(dev) : 0.0;
    out.surprise = test ? double(test - both) / double(test) : 0.0;
    return out;
}

struct GeneratedData {
    graphstore::ObservationWindow window;
    std::vector<EventRecord> events;
    std::map<NodeId, graphstore::PartialNodeAttr> attributes;
};

/// Negative binomial as a gamma-Poisson mixture.
inline std::uint32_t negative_binomial(Rng& rng, double mean, double shape) {
    if (mean <= 0.0) return 0;
    std::gamma_distribution<double> g(shape, mean / shape);
    const double lambda = g(rng);
    if (lambda <= 0.0) return 0;
    return std::uint32_t(std::poisson_distribution<std::uint64_t>(lambda)(rng));
}

/// Expected monthly (calls, sms) from sender to receiver, before tie intensity and season.
inline Rates pair_rates(const GenConfig& c, const NodeAttr& sender, const NodeAttr& receiver) {
    const Rates& s = c.profile[std::size_t(sender.gender)][age_band(sender.age)];
    const Rates& r = c.profile[std::size_t(receiver.gender)][age_band(receiver.age)];
    return {std::pow(s.calls, 0.7) * std::pow(r.calls, 0.3), std::pow(s.sms, 0.7) * std::pow(r.sms, 0.3)};
}

inline GeneratedData generate(const GenConfig& c) {
    c.validate();
    const SeedSplitter seeds(c.rng_seed);
    const auto pop = make_population(c, seeds);
    const auto ties = simulate_ties(c, pop, seeds);
    const auto window = c.window();

    GeneratedData out;
    out.window = window;
    for (int i = 0; i < c.n_nodes; ++i) {
        const auto& a = pop.attrs[std::size_t(i)];
        out.attributes[kFirstNodeId + i] = graphstore::PartialNodeAttr{a.age, a.gender, a.latitude, a.longitude};
    }

    Rng count_rng = seeds.stream("counts");
    Rng time_rng = seeds.stream("timestamps");
    std::normal_distribution<double> z(0.0, 1.0);
    const double sd = c.tie_intensity_sd;
    for (const auto& tie : ties) {
        const double intensity = sd > 0 ? std::exp(sd * z(count_rng) - 0.5 * sd * sd) : 1.0;
        const NodeAttr& au = pop.attrs[std::size_t(tie.u)];
        const NodeAttr& av = pop.attrs[std::size_t(tie.v)];
        const Rates uv = pair_rates(c, au, av), vu = pair_rates(c, av, au);
        for (int m = 1; m <= c.n_months; ++m) {
            if (!tie.active[std::size_t(m - 1)]) continue;
            const double season = window.calendar_month(m) == 12 ? c.december_boost : 1.0;
            const double f = intensity * season;
            // channel order: calls u->v, sms u->v, calls v->u, sms v->u
            const std::array<double, 4> mean = {uv.calls * f, uv.sms * f, vu.calls * f, vu.sms * f};
            std::array<std::uint32_t, 4> n{};
            for (int k = 0; k < 4; ++k) n[std::size_t(k)] = negative_binomial(count_rng, mean[std::size_t(k)], c.dispersion);
            if (n[0] + n[1] + n[2] + n[3] == 0) {
                // an active tie is one with at least one event that month
                std::discrete_distribution<int> which(mean.begin(), mean.end());
                n[std::size_t(mean[0] + mean[1] + mean[2] + mean[3] > 0 ? which(count_rng) : 0)] = 1;
            }
            const std::int64_t t0 = std::chrono::duration_cast<std::chrono::seconds>(
                                        window.month_start(m).time_since_epoch()).count();
            const std::int64_t t1 = std::chrono::duration_cast<std::chrono::seconds>(
                                        window.month_start(m + 1).time_since_epoch()).count();
            std::uniform_int_distribution<std::int64_t> when(t0, t1 - 1);
            for (int k = 0; k < 4; ++k) {
                const bool forward = k < 2;
                const NodeId sender = kFirstNodeId + (forward ? tie.u : tie.v);
                const NodeId receiver = kFirstNodeId + (forward ? tie.v : tie.u);
                const EventKind kind = k % 2 == 0 ? EventKind::call : EventKind::sms;
                for (std::uint32_t e = 0; e < n[std::size_t(k)]; ++e) {
                    // half of the records are logged from the receiving side
                    const bool logged_by_sender = uniform01(time_rng) < 0.5;
                    EventRecord ev;
                    ev.timestamp = when(time_rng);
                    ev.kind = kind;
                    ev.ego = logged_by_sender ? sender : receiver;
                    ev.alter = logged_by_sender ? receiver : sender;
                    ev.direction = logged_by_sender ? graphstore::Direction::outgoing : graphstore::Direction::incoming;
                    out.events.push_back(ev);
                }
            }
        }
    }
    std::sort(out.events.begin(), out.events.end(), [](const EventRecord& a, const EventRecord& b) {
        return std::tuple{a.timestamp, a.ego, a.alter, a.kind, a.direction} <
               std::tuple{b.timestamp, b.ego, b.alter, b.kind, b.direction};
    });
    return out;
}

}  // namespace cdrgnn::synthgen
