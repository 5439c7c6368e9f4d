#pragma once

#include <cstddef>
#include <vector>

#include "dgm/dgm.hpp"
#include "dgm/tensor.hpp"

namespace dgm {

using Mask = std::vector<bool>;
using Labels = std::vector<std::size_t>;

// Mean over masked nodes of -log softmax(logits)[label]; numerically stable
// log-softmax with an analytic gradient.
Tensor cross_entropy(const Tensor& logits, const Labels& labels, const Mask& mask);

// acc_a = correct_a / total_a over masked nodes; classes absent from the
// mask get 0.
std::vector<double> per_class_accuracy(const Labels& predicted, const Labels& truth, const Mask& mask,
                                       std::size_t num_classes);

// One sampled layer as the graph loss sees it: the topology plus the live
// probability tensor it was drawn from.
struct GraphLossLayer {
    SampledGraph graph;
    Tensor probs;  // [N x N], attached to the tape
};

struct GraphLossInputs {
    Labels predicted;
    Labels truth;
    Mask mask;  // training nodes only
    std::vector<GraphLossLayer> layers;
    std::vector<double> class_accuracy;  // constant, no gradient
    bool last_layer_only = false;
};

// Reward/penalty on products of sampled-edge probabilities, weighted by
// delta_a = acc_a - 1 (correct) or acc_a (wrong). The product runs over all
// layers' in-edges of each masked node (or the last layer only, by flag) and
// is evaluated as exp(sum log p) with the exponent clamped to [-60, 0].
// Gradient flows only into the probability tensors.
Tensor graph_loss(const GraphLossInputs& in);

Tensor total_loss(const Tensor& task, const Tensor& graph, double lambda);

// sum_i ||w_i - w_ref_i||^2 over the rows given (training classes).
Tensor zero_shot_loss(const Tensor& w, const Tensor& w_ref);

// argmin_j ||w_i - ref_j|| per row, ties to lowest index; turns the
// regression output into class predictions for the graph loss.
Labels nearest_representation(const Tensor& w, const Tensor& ref);

}  // namespace dgm
