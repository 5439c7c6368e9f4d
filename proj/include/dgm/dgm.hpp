#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dgm/rng.hpp"
#include "dgm/tensor.hpp"

namespace dgm {

// N x N unnormalized edge probabilities p_ij = exp(-t * ||x_i - x_j||^2)
// together with the temperature that produced them. probs stays attached to
// the tape so the graph loss can differentiate through it.
struct EdgeProbabilityMatrix {
    Tensor probs;        // [N x N], entries in (0, 1], unit diagonal
    Tensor temperature;  // positive scalar (exp of the unconstrained parameter)

    std::size_t num_nodes() const { return probs.rows(); }
};

// Directed graph with exactly min(k, N-1) in-edges per node. in_neighbors[i]
// lists the sources j of edges (i, j), sorted ascending; edge_prob mirrors
// that layout with the (detached) probability each edge was drawn under.
struct SampledGraph {
    std::size_t num_nodes = 0;
    std::size_t k = 0;
    std::vector<std::vector<std::size_t>> in_neighbors;
    std::vector<std::vector<double>> edge_prob;

    std::size_t num_edges() const { return num_nodes * k; }
    // Flattened (i, j) pairs in row order, matching in_neighbors.
    std::vector<std::pair<std::size_t, std::size_t>> edge_list() const;
    bool has_edge(std::size_t i, std::size_t j) const;
};

EdgeProbabilityMatrix edge_probabilities(const Tensor& x_hat, const Tensor& temperature);

// Gumbel-Top-k over each node's non-self candidates: scores
// log(p_ij) - log(-log(q_j)) with fresh q per node, top k selected.
// Probabilities are read detached; the task loss never sees the sampler.
SampledGraph gumbel_top_k(const EdgeProbabilityMatrix& P, std::size_t k, Rng& rng);

// Same scoring with one shared q for every candidate; the noise term is then
// constant and selection degenerates to the kNN rule.
SampledGraph gumbel_top_k_constant_noise(const EdgeProbabilityMatrix& P, std::size_t k, double q);

// Deterministic top-k by p_ij (the kNN rule); ties break to lower index.
SampledGraph knn_baseline(const EdgeProbabilityMatrix& P, std::size_t k);

enum class GraphFeatureMode { identity, mlp, edge_conv };

// One DGM block: x_hat = f(x_g), then generate probabilities and sample.
// `f` is supplied by the caller (identity at layer 1, EdgeConv/MLP above);
// with `forced_graph` set the sampler is skipped and the given topology is
// reused, recomputing edge probabilities differentiably (used for gradient
// checks and frozen-graph evaluation).
struct DgmForwardResult {
    Tensor x_hat;
    EdgeProbabilityMatrix probabilities;
    SampledGraph graph;
};

DgmForwardResult dgm_forward(const Tensor& x_g, const std::function<Tensor(const Tensor&)>& f,
                             const Tensor& temperature, std::size_t k, Rng& rng,
                             const std::optional<SampledGraph>& forced_graph = std::nullopt);

// Plain-text export, one "i j p_ij" line per edge, and a DOT rendering.
void write_edge_list(std::ostream& os, const SampledGraph& g);
void write_dot(std::ostream& os, const SampledGraph& g, const std::string& name = "sampled_graph");

}  // namespace dgm
