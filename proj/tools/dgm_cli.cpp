#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dgm/data.hpp"
#include "dgm/metrics.hpp"
#include "dgm/training.hpp"

namespace {

using namespace dgm;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_report(const MetricsReport& report, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << report.to_json();
        return;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write report: " + path);
    out << report.to_json();
}

// Flags shared by the experiment subcommands, plus the dataset pipeline
// they configure: load, split, optional feature selection, standardize.
struct DataOptions {
    std::string data_path, schema_path;
    std::string split = "transductive";
    std::uint64_t split_seed = 0;
    bool split_seed_set = false;
    bool no_standardize = false;
    std::size_t select = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--data", data_path, "CSV data file")->required();
        cmd->add_option("--schema", schema_path, "schema file (key=value)")->required();
        cmd->add_option("--split", split, "transductive or inductive")
            ->check(CLI::IsMember({"transductive", "inductive"}));
        cmd->add_option("--split-seed", split_seed, "seed for the split masks (default: run seed)")
            ->each([this](const std::string&) { split_seed_set = true; });
        cmd->add_flag("--no-standardize", no_standardize, "skip feature standardization");
        cmd->add_option("--select-features", select, "keep this many columns per modality (0 = all)");
    }

    NodeDataset load(std::uint64_t run_seed) const {
        NodeDataset ds = load_tabular(data_path, load_schema(schema_path));
        const auto scheme = split == "inductive" ? SplitScheme::inductive : SplitScheme::transductive;
        make_splits(ds, scheme, split_seed_set ? split_seed : run_seed);
        if (select > 0) ds = select_features(ds, select).dataset;
        if (!no_standardize) ds = standardize(ds);
        return ds;
    }
};

// --seed beats DGM_SEED beats the config file's seed.
std::uint64_t resolve_seed(bool seed_set, std::uint64_t flag_seed, std::uint64_t config_seed) {
    if (seed_set) return flag_seed;
    if (const char* env = std::getenv("DGM_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError(std::string("DGM_SEED is not a number: ") + env);
        }
    }
    return config_seed;
}

ModelConfig load_config(const std::string& path) {
    if (path.empty()) return ModelConfig{};
    return ModelConfig::from_json(read_file(path));
}

MetricsReport base_report(const ModelConfig& cfg) {
    MetricsReport r;
    r.config_echo = cfg.to_json();
    r.seed = cfg.seed;
    return r;
}

int run_train(const std::string& config_path, const DataOptions& dopt, bool seed_set, std::uint64_t seed,
              const std::string& checkpoint_path, const std::string& report_path, bool timing) {
    const auto start = std::chrono::steady_clock::now();
    ModelConfig cfg = load_config(config_path);
    cfg.seed = resolve_seed(seed_set, seed, cfg.seed);
    NodeDataset ds = dopt.load(cfg.seed);

    // in the inductive protocol the unseen nodes never enter training; the
    // frozen model is applied to the full node set afterwards
    NodeDataset train_ds = ds;
    if (dopt.split == "inductive") {
        std::vector<std::size_t> visible;
        for (std::size_t i = 0; i < ds.num_nodes(); ++i)
            if (!ds.unseen_mask[i]) visible.push_back(i);
        train_ds = ds.subset(visible);
    }
    TrainResult tr = train(cfg, train_ds);
    Rng prng = Rng(cfg.seed).split(0xe7a1);

    MetricsReport report = base_report(cfg);
    if (dopt.split == "inductive") {
        InductiveMetrics m = evaluate_inductive(tr.model, ds, prng, cfg.repeats);
        report.accuracy = m.unseen_accuracy;
        report.per_class_accuracy = m.per_class;
    } else {
        Prediction pred = predict_stochastic(tr.model, ds, cfg.repeats, prng);
        report.accuracy = accuracy(pred.labels, ds.labels, ds.test_mask);
        report.per_class_accuracy = per_class_accuracy(pred.labels, ds.labels, ds.test_mask, ds.class_count);
    }
    if (!tr.history.empty()) {
        const EpochStats& last = tr.history.back();
        report.task_loss = last.task_loss;
        report.graph_loss = last.graph_loss;
        for (const auto& h : last.homophily) report.homophily_per_layer.push_back(h.value_or(-1.0));
        report.extra["train_accuracy"] = last.train_accuracy;
        if (last.val_accuracy) report.extra["val_accuracy"] = *last.val_accuracy;
    }
    report.extra["epochs"] = static_cast<double>(tr.history.size());
    if (timing)
        report.wall_time_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, tr.model, cfg.seed, cfg.epochs);
    write_report(report, report_path);
    return kExitOk;
}

int run_eval(const std::string& checkpoint_path, const DataOptions& dopt, bool seed_set, std::uint64_t seed,
             std::size_t repeats, const std::string& report_path) {
    Checkpoint ck = load_checkpoint(checkpoint_path);
    const std::uint64_t run_seed = resolve_seed(seed_set, seed, ck.seed);
    NodeDataset ds = dopt.load(run_seed);

    MetricsReport report = base_report(ck.model.config());
    report.seed = run_seed;
    Rng rng = Rng(run_seed).split(0xe7a1);
    if (dopt.split == "inductive") {
        InductiveMetrics m = evaluate_inductive(ck.model, ds, rng, repeats);
        report.accuracy = m.unseen_accuracy;
        report.per_class_accuracy = m.per_class;
    } else {
        Prediction pred = predict_stochastic(ck.model, ds, repeats, rng);
        report.accuracy = accuracy(pred.labels, ds.labels, ds.test_mask);
        report.per_class_accuracy = per_class_accuracy(pred.labels, ds.labels, ds.test_mask, ds.class_count);
    }
    report.extra["repeats"] = static_cast<double>(repeats);
    write_report(report, report_path);
    return kExitOk;
}

int run_crossval(const std::string& config_path, const DataOptions& dopt, bool seed_set, std::uint64_t seed,
                 std::size_t folds, const std::string& report_path) {
    ModelConfig cfg = load_config(config_path);
    cfg.seed = resolve_seed(seed_set, seed, cfg.seed);
    // cross-validation assigns its own folds, so standardization is deferred
    // to cross_validate, which applies it per fold on that fold's train rows
    DataOptions raw = dopt;
    raw.no_standardize = true;
    NodeDataset ds = raw.load(cfg.seed);
    CrossValResult res = cross_validate(cfg, ds, folds);

    MetricsReport report = base_report(cfg);
    report.accuracy = res.mean_accuracy;
    report.extra["std_accuracy"] = res.std_accuracy;
    for (std::size_t f = 0; f < res.fold_accuracy.size(); ++f)
        report.extra["fold" + std::to_string(f) + "_accuracy"] = res.fold_accuracy[f];
    write_report(report, report_path);
    return kExitOk;
}

int run_synth(std::size_t n, std::size_t classes, std::size_t d_node, std::size_t d_graph, double separation,
              double noise, bool seed_set, std::uint64_t seed, const std::string& out,
              std::string out_schema) {
    const std::uint64_t s = resolve_seed(seed_set, seed, 0);
    NodeDataset ds = synth_clusters(n, classes, d_node, d_graph, separation, noise, s);
    TabularSchema schema;
    schema.label_column = "label";
    for (std::size_t j = 0; j < d_node; ++j) schema.modality1_columns.push_back("x" + std::to_string(j));
    for (std::size_t j = 0; j < d_graph; ++j) schema.modality2_columns.push_back("g" + std::to_string(j));
    save_tabular(out, ds, schema);
    if (out_schema.empty()) out_schema = out + ".schema";
    save_schema(out_schema, schema);
    std::cout << "wrote " << n << " nodes to " << out << " (schema " << out_schema << ")\n";
    return kExitOk;
}

int run_export_graph(const std::string& checkpoint_path, const DataOptions& dopt, bool seed_set,
                     std::uint64_t seed, const std::string& prefix) {
    Checkpoint ck = load_checkpoint(checkpoint_path);
    const std::uint64_t run_seed = resolve_seed(seed_set, seed, ck.seed);
    NodeDataset ds = dopt.load(run_seed);
    Rng rng = Rng(run_seed).split(0xe7a1);
    ForwardResult fw = ck.model.forward(ds, rng);
    for (std::size_t l = 0; l < fw.layers.size(); ++l) {
        const std::string stem = prefix + "_layer" + std::to_string(l);
        std::ofstream edges(stem + ".edges");
        if (!edges) throw ConfigError("cannot write " + stem + ".edges");
        write_edge_list(edges, fw.layers[l].graph);
        std::ofstream dot(stem + ".dot");
        if (!dot) throw ConfigError("cannot write " + stem + ".dot");
        write_dot(dot, fw.layers[l].graph, "layer" + std::to_string(l));
    }
    std::cout << "wrote " << fw.layers.size() << " layer graphs to " << prefix << "_layer*.{edges,dot}\n";
    return kExitOk;
}

int run_gradcheck() {
    double worst = 0.0;
    auto track = [&](const GradCheckReport& rep, const char* what) {
        worst = std::max(worst, rep.max_rel_error);
        std::cout << what << ": max rel error " << rep.max_rel_error << "\n";
    };

    Rng rng(12345);
    auto rand_param = [&](Shape shape) {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        std::vector<double> v(n);
        for (double& x : v) x = 2.0 * rng.uniform() - 1.0;
        return Tensor::parameter(std::move(shape), std::move(v));
    };

    {
        Tensor a = rand_param({4, 3}), b = rand_param({3, 2});
        track(check_gradient([&]() { return sum(mul(matmul(a, b), matmul(a, b))); }, {a, b}), "matmul");
        track(check_gradient([&]() { return sum(exp(neg(pairwise_sq_dist(a)))); }, {a}), "edge probabilities");
        track(check_gradient([&]() { return sum(log(exp(a))); }, {a}), "log/exp");
        track(check_gradient([&]() { return mean(mul(a, a)); }, {a}), "mean");
    }

    // the full two-layer stack on a 6-node instance with k=2
    NodeDataset ds;
    const std::size_t n = 6;
    ds.class_count = 2;
    ds.labels = {0, 1, 0, 1, 0, 1};
    std::vector<double> feats(n * 2);
    for (double& v : feats) v = rng.gauss();
    ds.modality1 = Tensor::constant({n, 2}, feats);
    for (double& v : feats) v = rng.gauss();
    ds.modality2 = Tensor::constant({n, 2}, feats);
    ds.train_mask.assign(n, true);
    ds.val_mask.assign(n, false);
    ds.test_mask.assign(n, false);
    ds.unseen_mask.assign(n, false);

    ModelConfig cfg;
    cfg.layers = {LayerSpec{2, 4, 4, 8}, LayerSpec{2, 4, 4, 8}};
    Model model(cfg, 2, 2, 2);
    Rng srng(7);
    std::vector<SampledGraph> frozen;
    Labels pred(n);
    std::vector<double> acc;
    {
        Tape tape;
        auto fw = model.forward(ds, srng);
        for (auto& l : fw.layers) frozen.push_back(l.graph);
        for (std::size_t i = 0; i < n; ++i) pred[i] = fw.logits.at(i, 1) > fw.logits.at(i, 0) ? 1 : 0;
        acc = per_class_accuracy(pred, ds.labels, ds.train_mask, 2);
    }
    Rng dummy(0);
    auto fn = [&]() {
        auto fw = model.forward(ds, dummy, &frozen);
        Tensor task = cross_entropy(fw.logits, ds.labels, ds.train_mask);
        GraphLossInputs gin{pred, ds.labels, ds.train_mask, fw.layers, acc, false};
        return total_loss(task, graph_loss(gin), cfg.lambda);
    };
    track(check_gradient(fn, model.parameters()), "full 2-layer stack (6 nodes, k=2)");

    std::cout << "overall max rel error: " << worst << "\n";
    if (worst >= 1e-4) {
        std::cerr << "gradcheck FAILED (tolerance 1e-4)\n";
        return kExitNumeric;
    }
    std::cout << "gradcheck passed\n";
    return kExitOk;
}

int run_sample_test(bool seed_set, std::uint64_t seed, std::size_t draws) {
    const std::uint64_t s = resolve_seed(seed_set, seed, 20240901);
    // node 0 chooses among three candidates with relative weights 0.7/0.2/0.1
    const std::vector<double> target = {0.7, 0.2, 0.1};
    std::vector<double> pv(4 * 4, 1e-9);
    pv[0 * 4 + 1] = 0.7;
    pv[0 * 4 + 2] = 0.2;
    pv[0 * 4 + 3] = 0.1;
    for (std::size_t i = 0; i < 4; ++i) pv[i * 4 + i] = 1.0;
    EdgeProbabilityMatrix P{Tensor::constant({4, 4}, pv), Tensor::scalar(1.0)};

    Rng rng(s);
    std::vector<std::size_t> counts(3, 0);
    for (std::size_t d = 0; d < draws; ++d) {
        auto g = gumbel_top_k(P, 1, rng);
        ++counts[g.in_neighbors[0][0] - 1];
    }
    bool ok = true;
    for (std::size_t j = 0; j < 3; ++j) {
        const double freq = static_cast<double>(counts[j]) / static_cast<double>(draws);
        const double err = std::abs(freq - target[j]);
        std::cout << "candidate " << j + 1 << ": frequency " << freq << " target " << target[j]
                  << " |err| " << err << "\n";
        ok = ok && err < 0.01;
    }
    if (!ok) {
        std::cerr << "sample-test FAILED (tolerance 0.01)\n";
        return kExitNumeric;
    }
    std::cout << "sample-test passed over " << draws << " draws\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent-graph learning experiments"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    bool seed_set = false;
    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "run seed (default: DGM_SEED env, then config)")
            ->each([&](const std::string&) { seed_set = true; });
    };

    std::string config_path, checkpoint_path, report_path, out_path, out_schema, prefix = "graph";
    std::size_t repeats = 8, folds = 10, draws = 100000;
    bool timing = false;
    DataOptions dopt;

    std::size_t synth_n = 300, synth_classes = 3, synth_dn = 4, synth_dg = 4;
    double synth_sep = 6.0, synth_noise = 0.5;

    auto* train_cmd = app.add_subcommand("train", "train a model and report test metrics");
    dopt.attach(train_cmd);
    add_seed(train_cmd);
    train_cmd->add_option("--config", config_path, "model config (JSON)");
    train_cmd->add_option("--checkpoint", checkpoint_path, "write the trained model here");
    train_cmd->add_option("--report", report_path, "report path (default stdout)");
    train_cmd->add_flag("--timing", timing, "include wall time in the report");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    dopt.attach(eval_cmd);
    add_seed(eval_cmd);
    eval_cmd->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    eval_cmd->add_option("--repeats", repeats, "stochastic forward passes to average");
    eval_cmd->add_option("--report", report_path, "report path (default stdout)");

    auto* cv_cmd = app.add_subcommand("crossval", "k-fold cross-validation");
    dopt.attach(cv_cmd);
    add_seed(cv_cmd);
    cv_cmd->add_option("--config", config_path, "model config (JSON)");
    cv_cmd->add_option("--folds", folds, "fold count");
    cv_cmd->add_option("--report", report_path, "report path (default stdout)");

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    add_seed(synth_cmd);
    synth_cmd->add_option("--n", synth_n, "node count");
    synth_cmd->add_option("--classes", synth_classes, "class count");
    synth_cmd->add_option("--d-node", synth_dn, "node-modality width");
    synth_cmd->add_option("--d-graph", synth_dg, "graph-modality width");
    synth_cmd->add_option("--separation", synth_sep, "class-center separation");
    synth_cmd->add_option("--noise", synth_noise, "graph-modality noise sigma");
    synth_cmd->add_option("--out", out_path, "CSV output path")->required();
    synth_cmd->add_option("--out-schema", out_schema, "schema output path (default <out>.schema)");

    auto* export_cmd = app.add_subcommand("export-graph", "write sampled graphs per layer");
    dopt.attach(export_cmd);
    add_seed(export_cmd);
    export_cmd->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    export_cmd->add_option("--out-prefix", prefix, "output path prefix");

    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference verification suite");

    auto* sample_cmd = app.add_subcommand("sample-test", "sampling distribution check");
    add_seed(sample_cmd);
    sample_cmd->add_option("--draws", draws, "number of draws");

    try {
        app.parse(argc, argv);
        if (train_cmd->parsed())
            return run_train(config_path, dopt, seed_set, seed, checkpoint_path, report_path, timing);
        if (eval_cmd->parsed())
            return run_eval(checkpoint_path, dopt, seed_set, seed, repeats, report_path);
        if (cv_cmd->parsed()) return run_crossval(config_path, dopt, seed_set, seed, folds, report_path);
        if (synth_cmd->parsed())
            return run_synth(synth_n, synth_classes, synth_dn, synth_dg, synth_sep, synth_noise, seed_set,
                             seed, out_path, out_schema);
        if (export_cmd->parsed()) return run_export_graph(checkpoint_path, dopt, seed_set, seed, prefix);
        if (grad_cmd->parsed()) return run_gradcheck();
        if (sample_cmd->parsed()) return run_sample_test(seed_set, seed, draws);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const dgm::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
