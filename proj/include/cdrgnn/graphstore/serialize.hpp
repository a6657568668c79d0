#pragma once

#include <filesystem>
#include <fstream>
#include <optional>

#include "cdrgnn/common/binary_io.hpp"
#include "cdrgnn/graphstore/normalize.hpp"
#include "cdrgnn/graphstore/types.hpp"

namespace cdrgnn::graphstore {

inline constexpr char kGraphMagic[9] = "CDRGRAPH";
inline constexpr std::uint32_t kGraphFormatVersion = 1;

struct StoredGraph {
    TemporalGraph graph;
    std::optional<NormStats> stats;
};

/// Layout (little-endian): magic, version, window, node table, per-month edge
/// lists, optional NormStats. Identical input gives identical bytes.
inline void write_graph(std::ostream& out, const TemporalGraph& g, const std::optional<NormStats>& stats = {}) {
    using namespace binary;
    write_magic(out, kGraphMagic);
    write_u32(out, kGraphFormatVersion);
    write_i32(out, g.window().start_year);
    write_u32(out, g.window().start_month);
    write_i32(out, g.window().n_months);
    write_u64(out, g.num_nodes());
    for (const auto& n : g.nodes()) {
        write_i64(out, n.id);
        write_i32(out, n.attr.age);
        write_u8(out, std::uint8_t(n.attr.gender));
        write_f64(out, n.attr.latitude);
        write_f64(out, n.attr.longitude);
    }
    write_u32(out, std::uint32_t(g.num_months()));
    for (const auto& s : g.snapshots()) {
        write_u64(out, s.edges.size());
        for (const auto& e : s.edges) {
            write_u32(out, e.source);
            write_u32(out, e.destination);
            write_u32(out, e.attr.calls_fwd);
            write_u32(out, e.attr.sms_fwd);
            write_u32(out, e.attr.calls_bwd);
            write_u32(out, e.attr.sms_bwd);
        }
    }
    write_u8(out, stats ? 1 : 0);
    if (stats) {
        for (double v : stats->node_min) write_f64(out, v);
        for (double v : stats->node_max) write_f64(out, v);
        for (double v : stats->edge_mean) write_f64(out, v);
        for (double v : stats->edge_std) write_f64(out, v);
    }
}

inline StoredGraph read_graph(std::istream& in) {
    using namespace binary;
    expect_magic(in, kGraphMagic);
    const std::uint32_t version = read_u32(in);
    if (version != kGraphFormatVersion) throw DataError("graph file: unsupported version " + std::to_string(version));
    ObservationWindow w;
    w.start_year = read_i32(in);
    w.start_month = read_u32(in);
    w.n_months = read_i32(in);
    const std::uint64_t n = read_u64(in);
    std::vector<NodeRecord> nodes(n);
    for (auto& r : nodes) {
        r.id = read_i64(in);
        r.attr.age = read_i32(in);
        r.attr.gender = Gender(read_u8(in));
        r.attr.latitude = read_f64(in);
        r.attr.longitude = read_f64(in);
    }
    const std::uint32_t T = read_u32(in);
    std::vector<Snapshot> snaps(T);
    for (std::uint32_t t = 0; t < T; ++t) {
        snaps[t].month = Month(t + 1);
        const std::uint64_t m = read_u64(in);
        snaps[t].edges.resize(m);
        for (auto& e : snaps[t].edges) {
            e.source = read_u32(in);
            e.destination = read_u32(in);
            e.attr.calls_fwd = read_u32(in);
            e.attr.sms_fwd = read_u32(in);
            e.attr.calls_bwd = read_u32(in);
            e.attr.sms_bwd = read_u32(in);
        }
    }
    StoredGraph out{TemporalGraph(w, std::move(nodes), std::move(snaps)), std::nullopt};
    if (read_u8(in)) {
        NormStats s;
        for (double& v : s.node_min) v = read_f64(in);
        for (double& v : s.node_max) v = read_f64(in);
        for (double& v : s.edge_mean) v = read_f64(in);
        for (double& v : s.edge_std) v = read_f64(in);
        out.stats = s;
    }
    return out;
}

inline void save_graph(const std::filesystem::path& path, const TemporalGraph& g,
                       const std::optional<NormStats>& stats = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_graph(out, g, stats);
}

inline StoredGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return read_graph(in);
}

}  // namespace cdrgnn::graphstore
