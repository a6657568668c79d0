#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "cdrgnn/pipeline.hpp"

using namespace cdrgnn;
namespace fs = std::filesystem;

namespace {

// Training knobs shared by every architecture; unset ones keep the per-architecture defaults.
struct TrainArgs {
    std::string arch;
    std::optional<int> hidden, epochs, batch, hops, neg_ratio, patience, cheb_k, window;
    std::optional<double> lr, positive_weight, negative_weight;
    std::uint64_t seed = 1;
    bool tune_window = false;
};

pipeline::RunSetup make_setup(const TrainArgs& a) {
    pipeline::RunSetup s;
    if (a.arch == pipeline::kBaselineName) {
        s.baseline = true;
        s.window = a.window.value_or(4);
    } else {
        s.model = models::default_config(*models::parse_architecture(a.arch));
    }
    auto& m = s.model;
    m.rng_seed = a.seed;
    if (a.hidden) m.hidden_dim = *a.hidden;
    if (a.epochs) m.max_epochs = *a.epochs;
    if (a.batch) m.batch_subgraphs = *a.batch;
    if (a.hops) m.hops = *a.hops;
    if (a.neg_ratio) m.neg_ratio = *a.neg_ratio;
    if (a.patience) m.patience = *a.patience;
    if (a.cheb_k) m.chebyshev_K = *a.cheb_k;
    if (a.lr) m.learning_rate = *a.lr;
    if (a.positive_weight) m.positive_weight = *a.positive_weight;
    if (a.negative_weight) m.negative_weight = *a.negative_weight;
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal GNN forecasting of monthly call/SMS volumes on mobile-phone graphs"};
    app.require_subcommand(1);

    pipeline::GenerateOptions gen;
    std::optional<fs::path> gen_config;
    auto* g = app.add_subcommand("generate", "write a synthetic CDR dataset (events.csv, nodes.csv, genconfig.ini)");
    g->add_option("--data-dir", gen.data_dir, "output directory")->required();
    g->add_option("--config", gen_config, "generator config to start from")->check(CLI::ExistingFile);
    std::optional<int> nodes, months;
    std::optional<std::uint64_t> gen_seed;
    g->add_option("--nodes", nodes, "number of users");
    g->add_option("--months", months, "number of monthly snapshots");
    g->add_option("--seed", gen_seed, "random seed");
    g->add_flag("--calibrate", gen.calibrate, "tune tie dynamics towards the target temporal indices first");
    g->add_option("--calibration-budget", gen.calibration_budget, "index evaluations allowed while calibrating");

    pipeline::StatsOptions st;
    auto* s = app.add_subcommand("stats", "aggregate raw events into graph.bin and write temporal statistics");
    s->add_option("--data-dir", st.data_dir, "dataset directory")->required()->check(CLI::ExistingDirectory);
    s->add_option("--min-age", st.filter.min_age);
    s->add_option("--max-age", st.filter.max_age);
    s->add_option("--max-daily-calls", st.filter.max_daily_calls);

    pipeline::TrainOptions tr;
    TrainArgs ta;
    auto* t = app.add_subcommand("train", "train a model (or set up the rEdgeBank baseline) on a dataset");
    t->add_option("--data-dir", tr.data_dir)->required()->check(CLI::ExistingDirectory);
    t->add_option("--run-dir", tr.run_dir)->required();
    t->add_option("--arch", ta.arch, "gcrn, vgrnn, dysat, roland or redgebank")
        ->required()
        ->check(CLI::IsMember({"gcrn", "vgrnn", "dysat", "roland", "redgebank"}));
    t->add_option("--seed", ta.seed);
    t->add_option("--hidden", ta.hidden);
    t->add_option("--epochs", ta.epochs, "maximum epochs");
    t->add_option("--lr", ta.lr);
    t->add_option("--batch", ta.batch, "subgraphs per batch");
    t->add_option("--hops", ta.hops, "k-hop radius of each subgraph");
    t->add_option("--neg-ratio", ta.neg_ratio, "random negatives per positive");
    t->add_option("--patience", ta.patience, "early-stopping patience in epochs");
    t->add_option("--cheb-k", ta.cheb_k, "Chebyshev order");
    t->add_option("--positive-weight", ta.positive_weight);
    t->add_option("--negative-weight", ta.negative_weight);
    t->add_option("--window", ta.window, "rEdgeBank window in months");
    t->add_flag("--tune-window", ta.tune_window, "pick the rEdgeBank window on the validation months");

    pipeline::EvaluateOptions ev;
    std::vector<std::string> by;
    auto* e = app.add_subcommand("evaluate", "evaluate trained runs on the test months");
    e->add_option("--data-dir", ev.data_dir)->required()->check(CLI::ExistingDirectory);
    e->add_option("--run-dir", ev.run_dirs, "run directories to compare")->required()->check(CLI::ExistingDirectory);
    e->add_option("--out-dir", ev.out_dir)->required();
    e->add_option("--by", by, "stratify by gender, age or month")->check(CLI::IsMember({"gender", "age", "month"}));
    e->add_option("--seed", ev.seed, "seed of the shared query set");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        return app.exit(err) == 0 ? 0 : 2;
    }

    try {
        if (*g) {
            if (gen_config) gen.config = synthgen::load_config(*gen_config);
            if (nodes) gen.config.n_nodes = *nodes;
            if (months) gen.config.n_months = *months;
            if (gen_seed) gen.config.rng_seed = *gen_seed;
            pipeline::run_generate(gen, std::cout);
        } else if (*s) {
            pipeline::run_stats(st, std::cout);
        } else if (*t) {
            tr.setup = make_setup(ta);
            tr.tune_window = ta.tune_window;
            if (tr.tune_window && !tr.setup.baseline) throw ValidationError("--tune-window applies to redgebank only");
            pipeline::run_train(tr, std::cout);
        } else if (*e) {
            const std::map<std::string, metrics::Scheme> schemes{{"gender", metrics::Scheme::gender_pairs},
                                                                  {"age", metrics::Scheme::age_grid},
                                                                  {"month", metrics::Scheme::per_month}};
            for (const auto& b : by) ev.by.push_back(schemes.at(b));
            pipeline::run_evaluate(ev, std::cout);
        }
    } catch (const ValidationError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}
