#include "dgm/dgm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>

namespace dgm {

std::vector<std::pair<std::size_t, std::size_t>> SampledGraph::edge_list() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(num_edges());
    for (std::size_t i = 0; i < num_nodes; ++i)
        for (std::size_t j : in_neighbors[i]) out.emplace_back(i, j);
    return out;
}

bool SampledGraph::has_edge(std::size_t i, std::size_t j) const {
    const auto& nb = in_neighbors[i];
    return std::binary_search(nb.begin(), nb.end(), j);
}

EdgeProbabilityMatrix edge_probabilities(const Tensor& x_hat, const Tensor& temperature) {
    Tensor d2 = pairwise_sq_dist(x_hat);
    Tensor probs = exp(neg(mul(d2, temperature)));
    return EdgeProbabilityMatrix{probs, temperature};
}

namespace {

std::size_t effective_degree(std::size_t n, std::size_t k) {
    if (k >= n) {
        std::fprintf(stderr, "warning: degree k=%zu >= N=%zu, clamping to %zu\n", k, n, n - 1);
        return n - 1;
    }
    return k;
}

// Selects the top-k candidate indices by score, ties to lower index, and
// returns them sorted ascending.
std::vector<std::size_t> top_k_by_score(const std::vector<std::size_t>& candidates,
                                        const std::vector<double>& scores, std::size_t k) {
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return candidates[a] < candidates[b];
                      });
    std::vector<std::size_t> picked(k);
    for (std::size_t r = 0; r < k; ++r) picked[r] = candidates[order[r]];
    std::sort(picked.begin(), picked.end());
    return picked;
}

SampledGraph build_graph(const EdgeProbabilityMatrix& P, std::size_t k,
                         const std::function<double(std::size_t row, std::size_t cand, double p)>& score_fn) {
    const std::size_t n = P.num_nodes();
    if (n < 2) throw ConfigError("sampling requires at least 2 nodes");
    if (k < 1) throw ConfigError("sampling requires k >= 1");
    k = effective_degree(n, k);

    SampledGraph g;
    g.num_nodes = n;
    g.k = k;
    g.in_neighbors.resize(n);
    g.edge_prob.resize(n);

    const auto& pv = P.probs.values();
    std::vector<std::size_t> candidates(n - 1);
    std::vector<double> scores(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t c = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;  // diagonal masked: p_ii = 1 must never win
            candidates[c] = j;
            scores[c] = score_fn(i, j, pv[i * n + j]);
            ++c;
        }
        g.in_neighbors[i] = top_k_by_score(candidates, scores, k);
        g.edge_prob[i].resize(k);
        for (std::size_t r = 0; r < k; ++r) g.edge_prob[i][r] = pv[i * n + g.in_neighbors[i][r]];
    }
    return g;
}

}  // namespace

SampledGraph gumbel_top_k(const EdgeProbabilityMatrix& P, std::size_t k, Rng& rng) {
    return build_graph(P, k, [&rng](std::size_t, std::size_t, double p) {
        const double q = rng.uniform_open();
        return std::log(std::max(p, kEpsLog)) - std::log(-std::log(q));
    });
}

SampledGraph gumbel_top_k_constant_noise(const EdgeProbabilityMatrix& P, std::size_t k, double q) {
    if (q <= 0.0 || q >= 1.0) throw DomainError("constant noise q must lie in (0, 1)");
    const double noise = std::log(-std::log(q));
    return build_graph(P, k, [noise](std::size_t, std::size_t, double p) {
        return std::log(std::max(p, kEpsLog)) - noise;
    });
}

SampledGraph knn_baseline(const EdgeProbabilityMatrix& P, std::size_t k) {
    return build_graph(P, k, [](std::size_t, std::size_t, double p) { return std::log(std::max(p, kEpsLog)); });
}

DgmForwardResult dgm_forward(const Tensor& x_g, const std::function<Tensor(const Tensor&)>& f,
                             const Tensor& temperature, std::size_t k, Rng& rng,
                             const std::optional<SampledGraph>& forced_graph) {
    Tensor x_hat = f(x_g);
    EdgeProbabilityMatrix P = edge_probabilities(x_hat, temperature);
    SampledGraph g;
    if (forced_graph) {
        g = *forced_graph;
        const auto& pv = P.probs.values();
        const std::size_t n = P.num_nodes();
        for (std::size_t i = 0; i < g.num_nodes; ++i)
            for (std::size_t r = 0; r < g.in_neighbors[i].size(); ++r)
                g.edge_prob[i][r] = pv[i * n + g.in_neighbors[i][r]];
    } else {
        g = gumbel_top_k(P, k, rng);
    }
    return DgmForwardResult{x_hat, std::move(P), std::move(g)};
}

void write_edge_list(std::ostream& os, const SampledGraph& g) {
    os << std::setprecision(17);
    for (std::size_t i = 0; i < g.num_nodes; ++i)
        for (std::size_t r = 0; r < g.in_neighbors[i].size(); ++r)
            os << i << " " << g.in_neighbors[i][r] << " " << g.edge_prob[i][r] << "\n";
}

void write_dot(std::ostream& os, const SampledGraph& g, const std::string& name) {
    os << "digraph " << name << " {\n";
    os << std::setprecision(4);
    for (std::size_t i = 0; i < g.num_nodes; ++i)
        for (std::size_t r = 0; r < g.in_neighbors[i].size(); ++r)
            os << "  " << g.in_neighbors[i][r] << " -> " << i << " [label=\"" << g.edge_prob[i][r] << "\"];\n";
    os << "}\n";
}

}  // namespace dgm
