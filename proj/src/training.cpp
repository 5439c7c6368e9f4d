#include "dgm/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "dgm/metrics.hpp"

namespace dgm {

// ---------------------------------------------------------------- schedule

double Schedule::lr_at(std::size_t epoch) const {
    std::size_t level = 0;
    for (std::size_t b : boundaries)
        if (epoch >= b) ++level;
    return levels[std::min(level, levels.size() - 1)];
}

void Schedule::validate() const {
    if (levels.empty()) throw ConfigError("schedule: no learning-rate levels");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] <= 0.0) throw ConfigError("schedule: learning rate must be positive");
        if (i > 0 && levels[i] > levels[i - 1]) throw ConfigError("schedule: learning rates must be non-increasing");
    }
    if (!std::is_sorted(boundaries.begin(), boundaries.end()))
        throw ConfigError("schedule: boundaries must be sorted");
    if (boundaries.size() + 1 < levels.size()) throw ConfigError("schedule: more levels than intervals");
}

// ---------------------------------------------------------------- config json

namespace {

std::string mode_name(GraphMode m) {
    switch (m) {
        case GraphMode::dgm: return "dgm";
        case GraphMode::mdgm: return "mdgm";
        case GraphMode::knn_baseline: return "knn_baseline";
    }
    throw ConfigError("unknown graph mode");
}

GraphMode mode_from_name(const std::string& s) {
    if (s == "dgm") return GraphMode::dgm;
    if (s == "mdgm") return GraphMode::mdgm;
    if (s == "knn_baseline") return GraphMode::knn_baseline;
    throw ConfigError("unknown graph mode: " + s);
}

std::string conv_name(ConvKind c) { return c == ConvKind::edge_conv ? "edge_conv" : "sgcn"; }

ConvKind conv_from_name(const std::string& s) {
    if (s == "edge_conv") return ConvKind::edge_conv;
    if (s == "sgcn") return ConvKind::sgcn;
    throw ConfigError("unknown convolution: " + s);
}

}  // namespace

std::string ModelConfig::to_json() const {
    nlohmann::json j;
    for (const auto& l : layers)
        j["layers"].push_back({{"k", l.k},
                               {"graph_width", l.graph_width},
                               {"node_width", l.node_width},
                               {"hidden_width", l.hidden_width}});
    j["graph_mode"] = mode_name(graph_mode);
    j["conv"] = conv_name(conv);
    j["lambda"] = lambda;
    j["epochs"] = epochs;
    j["schedule"] = {{"levels", schedule.levels}, {"boundaries", schedule.boundaries}};
    j["seed"] = seed;
    j["repeats"] = repeats;
    j["leaky_slope"] = leaky_slope;
    j["detach_concat_node_half"] = detach_concat_node_half;
    j["graph_loss_last_layer_only"] = graph_loss_last_layer_only;
    return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ModelConfig c;
    try {
        if (j.contains("layers")) {
            c.layers.clear();
            for (const auto& lj : j["layers"]) {
                LayerSpec l;
                l.k = lj.value("k", l.k);
                l.graph_width = lj.value("graph_width", l.graph_width);
                l.node_width = lj.value("node_width", l.node_width);
                l.hidden_width = lj.value("hidden_width", l.hidden_width);
                c.layers.push_back(l);
            }
        }
        if (j.contains("graph_mode")) c.graph_mode = mode_from_name(j["graph_mode"].get<std::string>());
        if (j.contains("conv")) c.conv = conv_from_name(j["conv"].get<std::string>());
        c.lambda = j.value("lambda", c.lambda);
        c.epochs = j.value("epochs", c.epochs);
        if (j.contains("schedule")) {
            c.schedule.levels = j["schedule"].value("levels", c.schedule.levels);
            c.schedule.boundaries = j["schedule"].value("boundaries", c.schedule.boundaries);
        }
        c.seed = j.value("seed", c.seed);
        c.repeats = j.value("repeats", c.repeats);
        c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
        c.detach_concat_node_half = j.value("detach_concat_node_half", c.detach_concat_node_half);
        c.graph_loss_last_layer_only = j.value("graph_loss_last_layer_only", c.graph_loss_last_layer_only);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
    if (c.layers.empty()) throw ConfigError("config: at least one layer required");
    for (const auto& l : c.layers)
        if (l.k < 1 || l.graph_width < 1 || l.node_width < 1)
            throw ConfigError("config: layer k and widths must be positive");
    c.schedule.validate();
    return c;
}

// ---------------------------------------------------------------- model

Model::Model(const ModelConfig& cfg, std::size_t d_node, std::size_t d_graph, std::size_t classes)
    : cfg_(cfg), d_node_(d_node), d_graph_(d_graph), classes_(classes) {
    if (classes < 2) throw ConfigError("model: need at least 2 classes");
    Rng rng(cfg.seed ^ 0x6d6f64656cULL);
    std::size_t x_hat_width = d_graph;  // layer 0 f is the identity
    std::size_t node_width = d_node;
    for (std::size_t l = 0; l < cfg_.layers.size(); ++l) {
        const LayerSpec& spec = cfg_.layers[l];
        Layer layer;
        layer.log_temperature = Tensor::parameter({1}, {0.0});  // t = exp(0) = 1
        if (l > 0) {
            const std::size_t f_in =
                cfg_.graph_mode == GraphMode::mdgm ? x_hat_width : x_hat_width + node_width;
            Rng fr = rng.split(l * 10 + 1);
            layer.f = EdgeConvParams::init(f_in, spec.hidden_width, spec.graph_width, fr);
            x_hat_width = spec.graph_width;
        }
        Rng gr = rng.split(l * 10 + 2);
        if (cfg_.conv == ConvKind::edge_conv)
            layer.g_edge = EdgeConvParams::init(node_width, spec.hidden_width, spec.node_width, gr);
        else
            layer.g_sgcn = SgcnParams::init(node_width, spec.node_width, gr, cfg_.leaky_slope);
        node_width = spec.node_width;
        layers_.push_back(std::move(layer));
    }
    Rng cr = rng.split(9901);
    classifier_ = LinearParams::init(node_width, classes, cr);
}

Tensor Model::temperature(std::size_t layer) const { return exp(layers_[layer].log_temperature); }

ForwardResult Model::forward(const Tensor& x_node, const Tensor& x_graph, Rng& rng,
                             const std::vector<SampledGraph>* forced) const {
    if (forced && forced->size() != layers_.size())
        throw ConfigError("forward: forced graph count != layer count");
    ForwardResult res;
    Tensor X = x_node;
    Tensor Xg = x_graph;
    const SampledGraph* prev_graph = nullptr;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        // DGM block: f, probabilistic generator, sampler
        Tensor x_hat;
        if (!layer.f) {
            x_hat = Xg;
        } else {
            if (!prev_graph) throw ConfigError("forward: EdgeConv f needs an input graph");
            x_hat = edge_conv(Xg, *prev_graph, *layer.f);
        }
        EdgeProbabilityMatrix P = edge_probabilities(x_hat, temperature(l));
        SampledGraph g;
        if (forced) {
            g = (*forced)[l];
            const auto& pv = P.probs.values();
            const std::size_t n = P.num_nodes();
            for (std::size_t i = 0; i < g.num_nodes; ++i)
                for (std::size_t r = 0; r < g.in_neighbors[i].size(); ++r)
                    g.edge_prob[i][r] = pv[i * n + g.in_neighbors[i][r]];
        } else if (cfg_.graph_mode == GraphMode::knn_baseline) {
            g = knn_baseline(P, cfg_.layers[l].k);
        } else {
            g = gumbel_top_k(P, cfg_.layers[l].k, rng);
        }
        // node branch
        if (layer.g_edge)
            X = edge_conv(X, g, *layer.g_edge);
        else
            X = sgcn_conv(X, g, *layer.g_sgcn);
        res.layers.push_back(GraphLossLayer{g, P.probs});
        res.x_hat.push_back(x_hat);
        // next graph-branch input
        if (l + 1 < layers_.size()) {
            if (cfg_.graph_mode == GraphMode::mdgm)
                Xg = x_hat;
            else
                Xg = concat_cols(x_hat, cfg_.detach_concat_node_half ? X.detach() : X);
        }
        prev_graph = &res.layers.back().graph;
    }
    res.logits = linear(X, classifier_);
    return res;
}

ForwardResult Model::forward(const NodeDataset& ds, Rng& rng, const std::vector<SampledGraph>* forced) const {
    return forward(ds.modality1, ds.graph_features(), rng, forced);
}

std::vector<Tensor> Model::parameters() const {
    std::vector<Tensor> out;
    for (const auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
}

std::vector<std::pair<std::string, Tensor>> Model::named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        out.emplace_back(p + "log_temperature", layers_[l].log_temperature);
        if (layers_[l].f) {
            out.emplace_back(p + "f.hidden.weight", layers_[l].f->hidden.weight);
            out.emplace_back(p + "f.hidden.bias", layers_[l].f->hidden.bias);
            out.emplace_back(p + "f.out.weight", layers_[l].f->out.weight);
            out.emplace_back(p + "f.out.bias", layers_[l].f->out.bias);
        }
        if (layers_[l].g_edge) {
            out.emplace_back(p + "g.hidden.weight", layers_[l].g_edge->hidden.weight);
            out.emplace_back(p + "g.hidden.bias", layers_[l].g_edge->hidden.bias);
            out.emplace_back(p + "g.out.weight", layers_[l].g_edge->out.weight);
            out.emplace_back(p + "g.out.bias", layers_[l].g_edge->out.bias);
        } else {
            out.emplace_back(p + "g.theta", layers_[l].g_sgcn->theta);
        }
    }
    out.emplace_back("classifier.weight", classifier_.weight);
    out.emplace_back("classifier.bias", classifier_.bias);
    return out;
}

// ---------------------------------------------------------------- adam

Adam::Adam(std::vector<Tensor> params) : params_(std::move(params)) {
    for (const auto& p : params_) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

void Adam::step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const auto& g = params_[i].grad();
        auto& vals = params_[i].values();
        for (std::size_t j = 0; j < vals.size(); ++j) {
            m_[i][j] = kBeta1 * m_[i][j] + (1.0 - kBeta1) * g[j];
            v_[i][j] = kBeta2 * v_[i][j] + (1.0 - kBeta2) * g[j] * g[j];
            vals[j] -= lr * (m_[i][j] / bc1) / (std::sqrt(v_[i][j] / bc2) + kEps);
        }
    }
}

// ---------------------------------------------------------------- training

namespace {

Labels argmax_rows(const Tensor& logits) {
    Labels out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        std::size_t arg = 0;
        for (std::size_t j = 1; j < logits.cols(); ++j)
            if (logits.at(i, j) > logits.at(i, arg)) arg = j;
        out[i] = arg;
    }
    return out;
}

void add_softmax_rows(const Tensor& logits, std::vector<double>& acc) {
    const std::size_t n = logits.rows(), c = logits.cols();
    for (std::size_t i = 0; i < n; ++i) {
        double m = logits.at(i, 0);
        for (std::size_t j = 1; j < c; ++j) m = std::max(m, logits.at(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(logits.at(i, j) - m);
        for (std::size_t j = 0; j < c; ++j) acc[i * c + j] += std::exp(logits.at(i, j) - m) / z;
    }
}

bool any(const Mask& m) {
    return std::any_of(m.begin(), m.end(), [](bool b) { return b; });
}

EpochStats epoch_stats(const ForwardResult& fw, const Labels& pred, const NodeDataset& ds, double task,
                       double gl, double lr) {
    EpochStats st;
    st.task_loss = task;
    st.graph_loss = gl;
    st.learning_rate = lr;
    st.train_accuracy = accuracy(pred, ds.labels, ds.train_mask);
    if (any(ds.val_mask)) st.val_accuracy = accuracy(pred, ds.labels, ds.val_mask);
    for (const auto& layer : fw.layers) {
        double sum = 0.0;
        for (const auto& row : layer.graph.edge_prob)
            for (double p : row) sum += p;
        st.mean_edge_prob.push_back(sum / static_cast<double>(layer.graph.num_edges()));
        st.homophily.push_back(homophily(layer.graph, ds.labels, ds.train_mask));
    }
    return st;
}

}  // namespace

TrainResult train(const ModelConfig& cfg, const NodeDataset& ds) {
    cfg.schedule.validate();
    if (!any(ds.train_mask)) throw ConfigError("train: empty train mask");
    Model model(cfg, ds.modality1.cols(), ds.graph_features().cols(), ds.class_count);
    Adam opt(model.parameters());
    Rng root(cfg.seed);
    std::vector<EpochStats> history;
    history.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng erng = root.split(1000 + epoch);
        Tape tape;
        ForwardResult fw = model.forward(ds, erng);
        const Labels pred = argmax_rows(fw.logits);
        Tensor task = cross_entropy(fw.logits, ds.labels, ds.train_mask);
        const auto acc = per_class_accuracy(pred, ds.labels, ds.train_mask, ds.class_count);
        GraphLossInputs gin{pred, ds.labels, ds.train_mask, fw.layers, acc, cfg.graph_loss_last_layer_only};
        Tensor gl = graph_loss(gin);
        Tensor total = total_loss(task, gl, cfg.lambda);
        if (!std::isfinite(total.item()))
            throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": task=" +
                               std::to_string(task.item()) + " graph=" + std::to_string(gl.item()));
        const double lr = cfg.schedule.lr_at(epoch);
        opt.zero_grad();
        tape.backward(total);
        opt.step(lr);
        history.push_back(epoch_stats(fw, pred, ds, task.item(), gl.item(), lr));
    }
    return TrainResult{std::move(model), std::move(history)};
}

Prediction predict_stochastic(const Model& model, const NodeDataset& ds, std::size_t repeats, Rng& rng) {
    if (repeats < 1) throw ConfigError("predict: repeats must be >= 1");
    const std::size_t n = ds.num_nodes(), c = model.classes();
    std::vector<double> soft(n * c, 0.0);
    for (std::size_t r = 0; r < repeats; ++r) {
        Rng rrng = rng.split(r + 1);
        ForwardResult fw = model.forward(ds, rrng);
        add_softmax_rows(fw.logits, soft);
    }
    Prediction p;
    p.soft = Tensor::constant({n, c}, std::move(soft));
    p.labels = argmax_rows(p.soft);
    return p;
}

InductiveMetrics evaluate_inductive(const Model& trained, const NodeDataset& full, Rng& rng,
                                    std::size_t repeats) {
    for (std::size_t i = 0; i < full.num_nodes(); ++i)
        if (full.unseen_mask[i] && (full.train_mask[i] || full.val_mask[i]))
            throw ConfigError("evaluate_inductive: unseen mask overlaps train/val at node " + std::to_string(i));
    if (!any(full.unseen_mask)) throw ConfigError("evaluate_inductive: empty unseen mask");
    Prediction p = predict_stochastic(trained, full, repeats, rng);
    InductiveMetrics m;
    m.unseen_accuracy = accuracy(p.labels, full.labels, full.unseen_mask);
    m.per_class = per_class_accuracy(p.labels, full.labels, full.unseen_mask, full.class_count);
    return m;
}

CrossValResult cross_validate(const ModelConfig& cfg, const NodeDataset& ds, std::size_t folds) {
    const auto fold_of = stratified_folds(ds.labels, folds, cfg.seed ^ 0x666f6c64ULL);
    CrossValResult res;
    for (std::size_t f = 0; f < folds; ++f) {
        NodeDataset fds = ds;
        for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
            fds.train_mask[i] = fold_of[i] != f;
            fds.test_mask[i] = fold_of[i] == f;
            fds.val_mask[i] = false;
            fds.unseen_mask[i] = false;
        }
        if (!fds.standardized) fds = standardize(fds);
        ModelConfig fcfg = cfg;
        fcfg.seed = cfg.seed + f;
        TrainResult tr = train(fcfg, fds);
        Rng prng = Rng(fcfg.seed).split(0xe7a1);
        Prediction p = predict_stochastic(tr.model, fds, cfg.repeats, prng);
        res.fold_accuracy.push_back(accuracy(p.labels, fds.labels, fds.test_mask));
    }
    const double n = static_cast<double>(folds);
    res.mean_accuracy = std::accumulate(res.fold_accuracy.begin(), res.fold_accuracy.end(), 0.0) / n;
    double var = 0.0;
    for (double a : res.fold_accuracy) var += (a - res.mean_accuracy) * (a - res.mean_accuracy);
    res.std_accuracy = std::sqrt(var / (n - 1.0));
    return res;
}

// ---------------------------------------------------------------- checkpoint

namespace {

constexpr char kMagic[8] = {'D', 'G', 'M', 'C', 'K', 'P', 'T', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void write_doubles(std::ostream& os, const std::vector<double>& v) {
    for (double d : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        write_u64(os, bits);
    }
}

void read_doubles(std::istream& is, std::vector<double>& v) {
    for (double& d : v) {
        const std::uint64_t bits = read_u64(is);
        std::memcpy(&d, &bits, 8);
    }
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, std::uint64_t seed, std::size_t epoch) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write checkpoint: " + path);
    os.write(kMagic, 8);
    nlohmann::json manifest;
    manifest["config"] = nlohmann::json::parse(model.config().to_json());
    manifest["seed"] = seed;
    manifest["epoch"] = epoch;
    manifest["d_node"] = model.d_node();
    manifest["d_graph"] = model.d_graph();
    manifest["classes"] = model.classes();
    const std::string mtext = manifest.dump();
    write_u64(os, mtext.size());
    os.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
    const auto named = model.named_parameters();
    write_u64(os, named.size());
    for (const auto& [name, t] : named) {
        write_u64(os, name.size());
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u64(os, t.shape().size());
        for (std::size_t d : t.shape()) write_u64(os, d);
        write_doubles(os, t.values());
    }
    if (!os) throw DataError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open checkpoint: " + path);
    is.seekg(0, std::ios::end);
    const std::uint64_t file_size = static_cast<std::uint64_t>(is.tellg());
    is.seekg(0);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) throw DataError("not a checkpoint file: " + path);
    const std::uint64_t mlen = read_u64(is);
    if (!is || mlen > file_size) throw DataError("truncated checkpoint: " + path);
    std::string mtext(mlen, '\0');
    is.read(mtext.data(), static_cast<std::streamsize>(mlen));
    if (!is) throw DataError("truncated checkpoint: " + path);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(mtext);
    } catch (const nlohmann::json::exception&) {
        throw DataError("corrupt checkpoint manifest: " + path);
    }
    const ModelConfig cfg = ModelConfig::from_json(manifest.at("config").dump());
    Model model(cfg, manifest.at("d_node").get<std::size_t>(), manifest.at("d_graph").get<std::size_t>(),
                manifest.at("classes").get<std::size_t>());
    auto named = model.named_parameters();
    const std::uint64_t count = read_u64(is);
    if (count != named.size()) throw DataError("checkpoint parameter count mismatch");
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t nlen = read_u64(is);
        if (!is || nlen > file_size) throw DataError("truncated checkpoint: " + path);
        std::string name(nlen, '\0');
        is.read(name.data(), static_cast<std::streamsize>(nlen));
        const std::uint64_t rank = read_u64(is);
        if (!is || rank > 8) throw DataError("truncated checkpoint: " + path);
        Shape shape(rank);
        for (auto& d : shape) d = read_u64(is);
        auto it = std::find_if(named.begin(), named.end(), [&](const auto& p) { return p.first == name; });
        if (it == named.end()) throw DataError("checkpoint has unknown parameter: " + name);
        if (it->second.shape() != shape) throw DataError("checkpoint shape mismatch for " + name);
        read_doubles(is, it->second.values());
    }
    if (!is) throw DataError("truncated checkpoint: " + path);
    return Checkpoint{std::move(model), manifest.at("seed").get<std::uint64_t>(),
                      manifest.at("epoch").get<std::size_t>()};
}

// ---------------------------------------------------------------- segmentation

namespace {

std::size_t part_count(const PointCloudSet& set) {
    std::size_t c = 0;
    for (const auto& parts : set.category_parts)
        for (std::size_t p : parts) c = std::max(c, p + 1);
    return c;
}

}  // namespace

Model train_segmentation(const ModelConfig& cfg, const PointCloudSet& set) {
    if (set.shapes.empty()) throw ConfigError("train_segmentation: no shapes");
    Model model(cfg, 3, 3, part_count(set));
    Adam opt(model.parameters());
    Rng root(cfg.seed);
    const Mask all(set.shapes.front().parts.size(), true);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t s = 0; s < set.shapes.size(); ++s) {
            const Shape3D& shape = set.shapes[s];
            Rng srng = root.split(1 + epoch * set.shapes.size() + s);
            Tape tape;
            ForwardResult fw = model.forward(shape.points, shape.points, srng);
            const Labels pred = argmax_rows(fw.logits);
            Mask mask(shape.parts.size(), true);
            Tensor task = cross_entropy(fw.logits, shape.parts, mask);
            const auto acc = per_class_accuracy(pred, shape.parts, mask, model.classes());
            GraphLossInputs gin{pred, shape.parts, mask, fw.layers, acc, cfg.graph_loss_last_layer_only};
            Tensor total = total_loss(task, graph_loss(gin), cfg.lambda);
            if (!std::isfinite(total.item()))
                throw NumericError("segmentation training diverged at epoch " + std::to_string(epoch));
            opt.zero_grad();
            tape.backward(total);
            opt.step(cfg.schedule.lr_at(epoch));
        }
    }
    return model;
}

std::vector<Labels> predict_segmentation(const Model& model, const PointCloudSet& set, std::size_t repeats,
                                         Rng& rng) {
    std::vector<Labels> out;
    const std::size_t c = model.classes();
    for (std::size_t s = 0; s < set.shapes.size(); ++s) {
        const Shape3D& shape = set.shapes[s];
        std::vector<double> soft(shape.points.rows() * c, 0.0);
        for (std::size_t r = 0; r < repeats; ++r) {
            Rng rrng = rng.split(s * 1000 + r + 1);
            ForwardResult fw = model.forward(shape.points, shape.points, rrng);
            add_softmax_rows(fw.logits, soft);
        }
        out.push_back(argmax_rows(Tensor::constant({shape.points.rows(), c}, std::move(soft))));
    }
    return out;
}

}  // namespace dgm
