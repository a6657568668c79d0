#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cdrgnn/edgebank.hpp"
#include "cdrgnn/graphstore.hpp"
#include "cdrgnn/metrics.hpp"
#include "cdrgnn/models.hpp"
#include "cdrgnn/synthgen.hpp"

namespace cdrgnn::pipeline {

namespace fs = std::filesystem;
using graphstore::Month;

inline std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write " + p.string());
    return out;
}

// ---- generate ----

struct GenerateOptions {
    fs::path data_dir;
    synthgen::GenConfig config;
    bool calibrate = false;
    int calibration_budget = 80;
};

/// events.csv, nodes.csv and genconfig.ini; calibration.csv as well with calibrate.
inline synthgen::GenConfig run_generate(const GenerateOptions& o, std::ostream& log) {
    synthgen::GenConfig cfg = o.config;
    cfg.validate();
    fs::create_directories(o.data_dir);
    if (o.calibrate) {
        const synthgen::CalibrationTarget target;
        const auto r = synthgen::calibrate(cfg, target, o.calibration_budget);
        cfg = r.config;
        auto out = open_out(o.data_dir / "calibration.csv");
        out << "index,target,tolerance,achieved\n";
        out << "novelty," << csv::format_double(target.novelty) << ',' << csv::format_double(target.novelty_tol) << ','
            << csv::format_double(r.achieved.novelty) << '\n';
        out << "reoccurrence," << csv::format_double(target.reoccurrence) << ','
            << csv::format_double(target.reoccurrence_tol) << ',' << csv::format_double(r.achieved.reoccurrence) << '\n';
        out << "surprise," << csv::format_double(target.surprise) << ',' << csv::format_double(target.surprise_tol)
            << ',' << csv::format_double(r.achieved.surprise) << '\n';
        log << "calibration " << (r.converged ? "converged" : "did not converge") << " after " << r.evaluations
            << " evaluations: tie_persistence=" << cfg.tie_persistence << " novel_tie_rate=" << cfg.novel_tie_rate
            << '\n';
        if (!r.converged) throw DataError("calibration budget exhausted before reaching the target indices");
    }
    const auto data = synthgen::generate(cfg);
    {
        auto out = open_out(o.data_dir / "events.csv");
        graphstore::write_events(out, data.events);
    }
    {
        auto out = open_out(o.data_dir / "nodes.csv");
        graphstore::write_attributes(out, data.attributes);
    }
    synthgen::save_config(o.data_dir / "genconfig.ini", cfg);
    log << "wrote " << data.events.size() << " events for " << data.attributes.size() << " nodes to "
        << o.data_dir.string() << '\n';
    return cfg;
}

// ---- stats ----

struct StatsOptions {
    fs::path data_dir;
    graphstore::FilterPolicy filter;
};

struct StatsResult {
    double novelty = 0, reoccurrence = 0, surprise = 0;
    std::size_t nodes = 0, edges = 0;
};

inline graphstore::ObservationWindow data_window(const fs::path& data_dir) {
    const auto cfg = synthgen::load_config(data_dir / "genconfig.ini");
    return cfg.window();
}

/// Builds graph.bin from the raw files and writes indices.csv, tea.csv, tet.csv.
inline StatsResult run_stats(const StatsOptions& o, std::ostream& log) {
    const auto window = data_window(o.data_dir);
    const auto store = graphstore::ingest_files(o.data_dir / "events.csv", o.data_dir / "nodes.csv", window);
    for (const auto& d : store.diagnostics) log << "warning: " << d.source << " line " << d.line << ": " << d.message << '\n';
    const auto graph = graphstore::aggregate_monthly(graphstore::filter_users(store, o.filter));
    const auto split = graphstore::default_split(graph.num_months());
    std::vector<std::string> warnings;
    const auto stats = graphstore::compute_norm_stats(graph, split, &warnings);
    for (const auto& w : warnings) log << "warning: " << w << '\n';
    graphstore::save_graph(o.data_dir / "graph.bin", graph, stats);

    const Month cut = split.dev_cutoff();
    StatsResult r{metrics::novelty(graph), metrics::reoccurrence(graph, cut), metrics::surprise(graph, cut),
                  graph.num_nodes(), graph.temporal_edge_count()};
    {
        auto out = open_out(o.data_dir / "indices.csv");
        out << "index,value\n";
        out << "novelty," << metrics::fmt(r.novelty) << '\n';
        out << "reoccurrence," << metrics::fmt(r.reoccurrence) << '\n';
        out << "surprise," << metrics::fmt(r.surprise) << '\n';
    }
    {
        auto out = open_out(o.data_dir / "tea.csv");
        metrics::write_tea(out, metrics::tea_series(graph));
    }
    {
        auto out = open_out(o.data_dir / "tet.csv");
        metrics::write_tet(out, graph, metrics::tet_layout(graph, cut));
    }
    log << "nodes " << r.nodes << ", temporal edges " << r.edges << '\n';
    log << "novelty " << metrics::fmt(r.novelty) << '\n';
    log << "reoccurrence " << metrics::fmt(r.reoccurrence) << '\n';
    log << "surprise " << metrics::fmt(r.surprise) << '\n';
    return r;
}

inline graphstore::StoredGraph load_data(const fs::path& data_dir) {
    const auto p = data_dir / "graph.bin";
    if (!fs::exists(p)) throw DataError(p.string() + " not found; run the stats command first");
    auto sg = graphstore::load_graph(p);
    if (!sg.stats) throw DataError(p.string() + " carries no normalization statistics");
    return sg;
}

// ---- train ----

inline constexpr const char* kBaselineName = "redgebank";

/// What a run directory holds: a trained model or the rEdgeBank baseline.
struct RunSetup {
    bool baseline = false;
    int window = 4;
    models::ModelConfig model;  // for the baseline only hops, neg_ratio and rng_seed matter
};

inline void write_run_setup(const fs::path& run_dir, const RunSetup& s) {
    auto out = open_out(run_dir / "model.ini");
    if (s.baseline) {
        out << "version = 1\nbaseline = " << kBaselineName << "\nwindow = " << s.window << "\nhops = " << s.model.hops
            << "\nneg_ratio = " << s.model.neg_ratio << "\nrng_seed = " << s.model.rng_seed << '\n';
    } else {
        models::write_model_config(out, s.model);
    }
}

inline RunSetup read_run_setup(const fs::path& run_dir) {
    std::ifstream in(run_dir / "model.ini");
    if (!in) throw DataError("cannot read " + (run_dir / "model.ini").string());
    std::stringstream body;
    body << in.rdbuf();
    RunSetup s;
    if (body.str().find("baseline = ") == std::string::npos) {
        s.model = models::read_model_config(body);
        return s;
    }
    s.baseline = true;
    std::string line;
    while (std::getline(body, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key(csv::trim(std::string_view(line).substr(0, eq)));
        const auto value = csv::trim(std::string_view(line).substr(eq + 1));
        auto num = [&]<class T>(T& dst) {
            auto v = csv::parse_number<T>(value);
            if (!v) throw DataError("model.ini: bad value for " + key);
            dst = *v;
        };
        if (key == "window") num(s.window);
        else if (key == "hops") num(s.model.hops);
        else if (key == "neg_ratio") num(s.model.neg_ratio);
        else if (key == "rng_seed") num(s.model.rng_seed);
        else if (key == "baseline" && value != kBaselineName) throw DataError("model.ini: unknown baseline");
    }
    return s;
}

struct TrainOptions {
    fs::path data_dir;
    fs::path run_dir;
    RunSetup setup;
    bool tune_window = false;
};

inline std::uint64_t query_seed(std::uint64_t seed) { return SeedSplitter(seed).seed_for(models::kQueryStream); }

inline std::vector<Month> months_between(Month first, Month last) {
    std::vector<Month> m;
    for (Month t = first; t <= last; ++t) m.push_back(t);
    return m;
}

inline void write_run_outputs(const fs::path& run_dir, const std::string& name, const graphstore::TemporalGraph& g,
                              const models::Predictions& pred, const std::vector<Month>& months) {
    {
        auto out = open_out(run_dir / "predictions.csv");
        metrics::write_predictions(out, g, pred.edges);
    }
    const auto report = metrics::build_report(name, g, pred.edges, months, {});
    auto out = open_out(run_dir / "eval_summary.csv");
    out << metrics::kSummaryHeader << '\n';
    metrics::write_summary_rows(out, report);
}

/// Trains (or, for the baseline, configures) one run; writes model.ini, metrics.csv, checkpoint.bin,
/// norm_stats.bin, and test-month predictions.csv / eval_summary.csv.
inline void run_train(const TrainOptions& o, std::ostream& log) {
    const auto data = load_data(o.data_dir);
    const auto& g = data.graph;
    const auto split = graphstore::default_split(g.num_months());
    RunSetup setup = o.setup;
    setup.model.validate();
    const auto ds = models::prepare_dataset(g, split, setup.model.hops, data.stats);
    fs::create_directories(o.run_dir);
    graphstore::StoredGraph copy{g, data.stats};
    models::save_norm_stats(o.run_dir / "norm_stats.bin", *data.stats);
    const auto test = months_between(split.val_cutoff + 1, split.test_end);
    if (setup.baseline) {
        if (o.tune_window) {
            const auto val = months_between(split.train_cutoff + 1, split.val_cutoff);
            const std::vector<int> candidates{1, 2, 3, 4, 5, 6};
            std::vector<edgebank::WindowScore> scores;
            setup.window = edgebank::tune_window(g, val, candidates, &scores);
            auto out = open_out(o.run_dir / "metrics.csv");
            out << "window,val_mae\n";
            for (const auto& s : scores) out << s.w << ',' << csv::format_double(s.mae) << '\n';
        } else {
            auto out = open_out(o.run_dir / "metrics.csv");
            out << "window,val_mae\n";
        }
        if (setup.window < 1) throw ValidationError("rEdgeBank window must be >= 1");
        write_run_setup(o.run_dir, setup);
        const auto pred = models::predict_redgebank(ds, setup.window, setup.model.neg_ratio, test.front(), test.back(),
                                                    query_seed(setup.model.rng_seed));
        write_run_outputs(o.run_dir, kBaselineName, g, pred, test);
        log << "rEdgeBank baseline with window " << setup.window << " written to " << o.run_dir.string() << '\n';
        return;
    }
    write_run_setup(o.run_dir, setup);
    models::TrainHooks hooks;
    hooks.on_epoch = [&](const models::EpochRecord& r) {
        log << "epoch " << r.epoch << " train_loss " << csv::format_double(r.train_loss) << " val_mae "
            << csv::format_double(r.val_mae) << '\n';
    };
    auto tm = models::train(ds, setup.model, hooks);
    {
        auto out = open_out(o.run_dir / "metrics.csv");
        models::write_curve(out, tm.curve);
    }
    nn::save_checkpoint(o.run_dir / "checkpoint.bin", tm.model->params());
    const auto pred = models::predict_model(*tm.model, ds, test.front(), test.back(), query_seed(setup.model.rng_seed));
    if (pred.truncated) log << "note: " << pred.truncated << " seed-months had fewer random negatives than requested\n";
    write_run_outputs(o.run_dir, models::to_string(setup.model.architecture), g, pred, test);
    log << "best epoch " << tm.best_epoch << " val_mae " << csv::format_double(tm.best_val) << '\n';
}

// ---- evaluate ----

struct EvaluateOptions {
    fs::path data_dir;
    std::vector<fs::path> run_dirs;
    fs::path out_dir;
    std::vector<metrics::Scheme> by;
    std::uint64_t seed = 1;
};

inline std::string run_name(const fs::path& run_dir) {
    auto p = run_dir;
    if (p.filename().empty()) p = p.parent_path();
    return p.filename().string();
}

/// eval_summary.csv, comparison.csv, wilcoxon.csv (each model vs the rEdgeBank run), eval_by_<scheme>.csv,
/// and predictions_<run>.csv, all on the test months.
inline std::vector<metrics::EvalReport> run_evaluate(const EvaluateOptions& o, std::ostream& log) {
    if (o.run_dirs.empty()) throw ValidationError("evaluate: at least one run directory is required");
    const auto data = load_data(o.data_dir);
    const auto& g = data.graph;
    const auto split = graphstore::default_split(g.num_months());
    const auto test = months_between(split.val_cutoff + 1, split.test_end);
    std::vector<RunSetup> setups;
    for (const auto& r : o.run_dirs) {
        setups.push_back(read_run_setup(r));
        if (!(models::load_norm_stats(r / "norm_stats.bin") == *data.stats))
            throw DataError("normalization statistics of run " + r.string() + " do not match the data");
        if (setups.back().model.hops != setups.front().model.hops ||
            setups.back().model.neg_ratio != setups.front().model.neg_ratio)
            throw DataError("runs disagree on hops or neg_ratio, so their query sets differ");
    }
    const auto ds = models::prepare_dataset(g, split, setups.front().model.hops, data.stats);
    const std::uint64_t qs = query_seed(o.seed);
    std::vector<metrics::EvalReport> reports;
    std::vector<models::Predictions> preds;
    for (std::size_t i = 0; i < o.run_dirs.size(); ++i) {
        const auto& s = setups[i];
        models::Predictions p;
        if (s.baseline) {
            p = models::predict_redgebank(ds, s.window, s.model.neg_ratio, test.front(), test.back(), qs);
        } else {
            auto model = models::build_model(s.model);
            nn::load_checkpoint(o.run_dirs[i] / "checkpoint.bin", model->params());
            p = models::predict_model(*model, ds, test.front(), test.back(), qs);
        }
        const std::string name = run_name(o.run_dirs[i]);
        reports.push_back(metrics::build_report(name, g, p.edges, test, o.by));
        {
            auto out = open_out(o.out_dir / ("predictions_" + name + ".csv"));
            metrics::write_predictions(out, g, p.edges);
        }
        preds.push_back(std::move(p));
        log << "evaluated " << name << ": ave " << metrics::fmt(reports.back().ave[0]) << " (call) "
            << metrics::fmt(reports.back().ave[1]) << " (sms)\n";
    }
    {
        auto out = open_out(o.out_dir / "eval_summary.csv");
        out << metrics::kSummaryHeader << '\n';
        for (const auto& r : reports) metrics::write_summary_rows(out, r);
    }
    {
        auto out = open_out(o.out_dir / "comparison.csv");
        metrics::write_comparison(out, reports);
    }
    for (metrics::Scheme s : o.by) {
        auto out = open_out(o.out_dir / ("eval_by_" + std::string(metrics::to_string(s)) + ".csv"));
        out << metrics::kStrataHeader << '\n';
        for (const auto& r : reports) metrics::write_strata_rows(out, r, s);
    }
    {
        auto out = open_out(o.out_dir / "wilcoxon.csv");
        out << "model,baseline,set,channel,n,statistic,p_value,exact\n";
        std::optional<std::size_t> base;
        for (std::size_t i = 0; i < setups.size(); ++i)
            if (setups[i].baseline && !base) base = i;
        if (base) {
            const auto& b = preds[*base].edges;
            for (std::size_t i = 0; i < setups.size(); ++i) {
                if (i == *base) continue;
                const auto& m = preds[i].edges;
                if (m.size() != b.size()) throw DataError("evaluate: query sets differ between runs");
                for (metrics::EdgeSet set : metrics::kEdgeSets)
                    for (int c = 0; c < 2; ++c) {
                        std::vector<double> em, eb;
                        for (std::size_t k = 0; k < m.size(); ++k) {
                            if (m[k].month != b[k].month || m[k].source != b[k].source ||
                                m[k].destination != b[k].destination)
                                throw DataError("evaluate: query sets differ between runs");
                            if (m[k].set != set) continue;
                            em.push_back(std::abs(m[k].pred[c] - m[k].truth[c]));
                            eb.push_back(std::abs(b[k].pred[c] - b[k].truth[c]));
                        }
                        const auto w = metrics::wilcoxon_signed_rank(em, eb);
                        out << reports[i].model << ',' << reports[*base].model << ',' << metrics::to_string(set)
                            << ',' << metrics::kChannelNames[c] << ',' << w.n << ',' << csv::format_double(w.statistic)
                            << ',' << csv::format_double(w.p_value) << ',' << (w.exact ? "true" : "false") << '\n';
                    }
            }
        }
    }
    return reports;
}

}  // namespace cdrgnn::pipeline
