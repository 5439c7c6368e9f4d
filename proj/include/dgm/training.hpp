#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dgm/data.hpp"
#include "dgm/dgm.hpp"
#include "dgm/layers.hpp"
#include "dgm/losses.hpp"

namespace dgm {

enum class GraphMode {
    dgm,           // graph branch sees graph and node features concatenated
    mdgm,          // graph branch sees its own features only
    knn_baseline,  // deterministic top-k sampling (DGCNN-style)
};

enum class ConvKind { edge_conv, sgcn };

struct LayerSpec {
    std::size_t k = 5;
    std::size_t graph_width = 16;   // output width of f
    std::size_t node_width = 16;    // output width of g
    std::size_t hidden_width = 32;  // h_psi hidden width
};

struct Schedule {
    std::vector<double> levels = {0.01, 0.001, 0.0001};
    std::vector<std::size_t> boundaries = {100, 200};  // first epoch of each later level

    double lr_at(std::size_t epoch) const;
    void validate() const;  // lr > 0, non-increasing, boundaries sorted
};

struct ModelConfig {
    std::vector<LayerSpec> layers = {LayerSpec{}, LayerSpec{}};
    GraphMode graph_mode = GraphMode::dgm;
    ConvKind conv = ConvKind::edge_conv;
    double lambda = 1.0;
    std::size_t epochs = 300;
    Schedule schedule;
    std::uint64_t seed = 0;
    std::size_t repeats = 8;  // stochastic inference averaging
    double leaky_slope = 0.2;
    bool detach_concat_node_half = false;  // stop-gradient on the node half of the concat
    bool graph_loss_last_layer_only = false;

    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

struct ForwardResult {
    Tensor logits;                       // [N x C]
    std::vector<GraphLossLayer> layers;  // sampled graph + live probs per layer
    std::vector<Tensor> x_hat;           // per-layer graph representation
};

// The assembled network: one DGM block + one graph convolution per layer,
// then a linear classification head. Layer 1's f is the identity.
class Model {
public:
    Model(const ModelConfig& cfg, std::size_t d_node, std::size_t d_graph, std::size_t classes);

    // Full-batch pass over all nodes. With `forced` set, layer graphs are
    // reused instead of sampled (gradient checks, frozen evaluation).
    ForwardResult forward(const Tensor& x_node, const Tensor& x_graph, Rng& rng,
                          const std::vector<SampledGraph>* forced = nullptr) const;
    ForwardResult forward(const NodeDataset& ds, Rng& rng,
                          const std::vector<SampledGraph>* forced = nullptr) const;

    std::vector<Tensor> parameters() const;
    std::vector<std::pair<std::string, Tensor>> named_parameters() const;
    Tensor temperature(std::size_t layer) const;  // t = exp(theta_t), on tape

    const ModelConfig& config() const { return cfg_; }
    std::size_t d_node() const { return d_node_; }
    std::size_t d_graph() const { return d_graph_; }
    std::size_t classes() const { return classes_; }

private:
    struct Layer {
        Tensor log_temperature;
        std::optional<EdgeConvParams> f;  // absent at layer 0 (identity)
        std::optional<EdgeConvParams> g_edge;
        std::optional<SgcnParams> g_sgcn;
    };

    ModelConfig cfg_;
    std::size_t d_node_, d_graph_, classes_;
    std::vector<Layer> layers_;
    LinearParams classifier_;
};

// Adam with bias-corrected moments (beta1 0.9, beta2 0.999, eps 1e-8);
// moment shapes mirror parameter shapes.
class Adam {
public:
    explicit Adam(std::vector<Tensor> params);
    void zero_grad();
    void step(double lr);
    std::size_t step_count() const { return t_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
    static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
};

struct EpochStats {
    double task_loss = 0.0;
    double graph_loss = 0.0;
    double train_accuracy = 0.0;
    std::optional<double> val_accuracy;
    double learning_rate = 0.0;
    std::vector<double> mean_edge_prob;            // per layer, over sampled edges
    std::vector<std::optional<double>> homophily;  // per layer, train-mask edges
};

struct TrainResult {
    Model model;
    std::vector<EpochStats> history;
};

// Full-batch Adam training under the piecewise-constant schedule. Aborts
// with NumericError on a non-finite loss.
TrainResult train(const ModelConfig& cfg, const NodeDataset& ds);

struct Prediction {
    Labels labels;
    Tensor soft;  // [N x C] cumulative softmax over repeats
};

// Sums softmax outputs over `repeats` stochastic passes; argmax with ties
// to the lowest class index.
Prediction predict_stochastic(const Model& model, const NodeDataset& ds, std::size_t repeats, Rng& rng);

// Frozen-parameter forward over the full node set (training + unseen);
// metrics on the unseen mask only.
struct InductiveMetrics {
    double unseen_accuracy = 0.0;
    std::vector<double> per_class;
};
InductiveMetrics evaluate_inductive(const Model& trained, const NodeDataset& full, Rng& rng,
                                    std::size_t repeats);

struct CrossValResult {
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    std::vector<double> fold_accuracy;
};

CrossValResult cross_validate(const ModelConfig& cfg, const NodeDataset& ds, std::size_t folds);

// ---- checkpointing ----
// Versioned container: manifest (config echo, seed, epoch, dims) plus named
// parameter tensors as raw little-endian doubles. Loading rejects manifest
// or shape mismatches.
void save_checkpoint(const std::string& path, const Model& model, std::uint64_t seed, std::size_t epoch);
struct Checkpoint {
    Model model;
    std::uint64_t seed = 0;
    std::size_t epoch = 0;
};
Checkpoint load_checkpoint(const std::string& path);

// ---- toy point-cloud segmentation ----
// Each shape is its own node set; per-point classification with one shared
// model, per-shape optimization steps.
Model train_segmentation(const ModelConfig& cfg, const PointCloudSet& set);
std::vector<Labels> predict_segmentation(const Model& model, const PointCloudSet& set, std::size_t repeats,
                                         Rng& rng);

}  // namespace dgm
