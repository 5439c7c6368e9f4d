#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dgm/losses.hpp"
#include "dgm/rng.hpp"
#include "dgm/tensor.hpp"

namespace dgm {

// Node features (one or two modalities), labels and split masks. When
// modality2 is present it is the graph-branch modality; otherwise the graph
// branch shares modality1.
struct NodeDataset {
    Tensor modality1;                  // [N x d1], node features
    std::optional<Tensor> modality2;   // [N x d2], graph features
    Labels labels;
    Mask train_mask, val_mask, test_mask, unseen_mask;
    std::size_t class_count = 0;
    bool standardized = false;

    std::size_t num_nodes() const { return labels.size(); }
    const Tensor& graph_features() const { return modality2 ? *modality2 : modality1; }
    // Row-restricted copy (masks restricted alongside).
    NodeDataset subset(const std::vector<std::size_t>& rows) const;
};

struct Shape3D {
    Tensor points;   // [P x 3]
    Labels parts;
    std::size_t category = 0;
};

struct PointCloudSet {
    std::vector<Shape3D> shapes;
    std::vector<std::vector<std::size_t>> category_parts;  // valid part ids per category
};

// Gaussian class clusters: strongly informative graph modality (centers
// `separation` apart, noise sigma `noise`) and a weaker node modality. The
// latent ground-truth graph is the same-class relation, recoverable from
// `labels`.
NodeDataset synth_clusters(std::size_t n, std::size_t classes, std::size_t d_node, std::size_t d_graph,
                           double separation, double noise, std::uint64_t seed);

// Two-primitive shapes (rod + ball) with part labels from the generating
// primitive; one category.
PointCloudSet synth_shapes(std::size_t count, std::size_t points_per_shape, std::uint64_t seed);
constexpr std::size_t kDefaultPointsPerShape = 2048;

// One shape per file, whitespace-separated "x y z part" lines; the category
// id is the integer prefix of the file name, before the first '_'.
Shape3D load_point_cloud(const std::string& path);
void save_point_cloud(const std::string& path, const Shape3D& shape);
// Part sets per category are collected from the loaded labels.
PointCloudSet load_point_clouds(const std::vector<std::string>& paths);

struct TabularSchema {
    std::string label_column;
    std::vector<std::string> modality1_columns;
    std::vector<std::string> modality2_columns;  // may be empty
};

TabularSchema load_schema(const std::string& path);
void save_schema(const std::string& path, const TabularSchema& schema);

NodeDataset load_tabular(const std::string& path, const TabularSchema& schema);
void save_tabular(const std::string& path, const NodeDataset& ds, const TabularSchema& schema);

// Per-feature (x - mu) / sigma with statistics from training rows only;
// zero-variance features map to 0.
NodeDataset standardize(const NodeDataset& ds);

// Iterative elimination down to target_dim columns per modality, scoring
// features by ridge-classifier weight magnitude on training rows.
struct FeatureSelection {
    NodeDataset dataset;
    std::vector<std::size_t> kept_modality1;
    std::vector<std::size_t> kept_modality2;
};
FeatureSelection select_features(const NodeDataset& ds, std::size_t target_dim);
constexpr std::size_t kDefaultSelectedFeatures = 30;

enum class SplitScheme {
    transductive,  // 90% train / 10% test
    inductive,     // 80% train / 10% validation / 10% unseen
};

// Stratified random masks; mutually disjoint and covering all nodes.
void make_splits(NodeDataset& ds, SplitScheme scheme, std::uint64_t seed);

// Stratified fold assignment for cross-validation; falls back to
// non-stratified (with a warning) when a class has fewer members than folds.
std::vector<std::size_t> stratified_folds(const Labels& labels, std::size_t folds, std::uint64_t seed);

}  // namespace dgm
