#include "dgm/layers.hpp"

#include <cmath>

namespace dgm {

namespace {

// Glorot uniform in [-a, a], a = sqrt(6 / (fan_in + fan_out)).
std::vector<double> glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> w(fan_in * fan_out);
    for (double& v : w) v = (2.0 * rng.uniform() - 1.0) * a;
    return w;
}

// Flattened (center, neighbor) row indices in sorted-edge order.
void edge_index_lists(const SampledGraph& g, std::vector<std::size_t>& centers,
                      std::vector<std::size_t>& neighbors) {
    centers.reserve(g.num_edges());
    neighbors.reserve(g.num_edges());
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
        if (g.in_neighbors[i].empty())
            throw ConfigError("graph convolution: node " + std::to_string(i) + " has no in-edges");
        for (std::size_t j : g.in_neighbors[i]) {
            centers.push_back(i);
            neighbors.push_back(j);
        }
    }
}

}  // namespace

LinearParams LinearParams::init(std::size_t d_in, std::size_t d_out, Rng& rng) {
    return LinearParams{Tensor::parameter({d_in, d_out}, glorot(d_in, d_out, rng)),
                        Tensor::parameter({d_out}, std::vector<double>(d_out, 0.0))};
}

Tensor linear(const Tensor& x, const LinearParams& p) { return add_rowvec(matmul(x, p.weight), p.bias); }

EdgeConvParams EdgeConvParams::init(std::size_t d_in, std::size_t width, std::size_t d_out, Rng& rng) {
    Rng r1 = rng.split(1), r2 = rng.split(2);
    return EdgeConvParams{LinearParams::init(2 * d_in, width, r1), LinearParams::init(width, d_out, r2)};
}

std::vector<Tensor> EdgeConvParams::parameters() const {
    return {hidden.weight, hidden.bias, out.weight, out.bias};
}

Tensor edge_conv(const Tensor& x, const SampledGraph& g, const EdgeConvParams& params) {
    if (x.rows() != g.num_nodes) throw ShapeError("edge_conv: feature rows != graph nodes");
    std::vector<std::size_t> centers, neighbors;
    edge_index_lists(g, centers, neighbors);
    Tensor xi = gather_rows(x, centers);
    Tensor xj = gather_rows(x, neighbors);
    Tensor pair = concat_cols(xi, sub(xj, xi));  // [N*k x 2d]
    Tensor h = linear(relu(linear(pair, params.hidden)), params.out);
    return row_block_sum(h, g.k);
}

SgcnParams SgcnParams::init(std::size_t d_in, std::size_t d_out, Rng& rng, double slope) {
    return SgcnParams{Tensor::parameter({d_in, d_out}, glorot(d_in, d_out, rng)), slope};
}

Tensor sgcn_conv(const Tensor& x, const SampledGraph& g, const SgcnParams& params) {
    if (x.rows() != g.num_nodes) throw ShapeError("sgcn_conv: feature rows != graph nodes");
    std::vector<std::size_t> centers, neighbors;
    edge_index_lists(g, centers, neighbors);
    Tensor nb = gather_rows(x, neighbors);
    Tensor meaned = mul(row_block_sum(nb, g.k), 1.0 / static_cast<double>(g.k));
    return leaky_relu(matmul(meaned, params.theta), params.leaky_slope);
}

MlpParams MlpParams::init(const std::vector<std::size_t>& widths, Rng& rng) {
    if (widths.size() < 2) throw ConfigError("mlp: need at least input and output widths");
    MlpParams p;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Rng r = rng.split(l + 1);
        p.layers.push_back(LinearParams::init(widths[l], widths[l + 1], r));
    }
    return p;
}

std::vector<Tensor> MlpParams::parameters() const {
    std::vector<Tensor> out;
    for (const auto& l : layers) {
        out.push_back(l.weight);
        out.push_back(l.bias);
    }
    return out;
}

Tensor mlp(const Tensor& x, const MlpParams& params) {
    Tensor h = x;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        h = linear(h, params.layers[l]);
        if (l + 1 < params.layers.size()) h = relu(h);
    }
    return h;
}

}  // namespace dgm
