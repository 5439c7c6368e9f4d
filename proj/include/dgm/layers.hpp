#pragma once

#include <vector>

#include "dgm/dgm.hpp"
#include "dgm/rng.hpp"
#include "dgm/tensor.hpp"

namespace dgm {

// Affine map with optional relu; building block for MLPs and h_psi.
struct LinearParams {
    Tensor weight;  // [d_in x d_out]
    Tensor bias;    // [d_out]

    static LinearParams init(std::size_t d_in, std::size_t d_out, Rng& rng);
    std::vector<Tensor> parameters() const { return {weight, bias}; }
};

Tensor linear(const Tensor& x, const LinearParams& p);

// h_psi of the EdgeConv operator: a two-layer perceptron applied to
// concat(x_i, x_j - x_i). Aggregation over in-neighbors is a sum in fixed
// sorted-edge order.
struct EdgeConvParams {
    LinearParams hidden;  // [2*d_in x width]
    LinearParams out;     // [width x d_out]

    static EdgeConvParams init(std::size_t d_in, std::size_t width, std::size_t d_out, Rng& rng);
    std::vector<Tensor> parameters() const;
};

Tensor edge_conv(const Tensor& x, const SampledGraph& g, const EdgeConvParams& params);

// leaky_relu(D^-1 A x Theta): mean of in-neighbor features, linearly mapped.
struct SgcnParams {
    Tensor theta;  // [d_in x d_out]
    double leaky_slope = 0.2;

    static SgcnParams init(std::size_t d_in, std::size_t d_out, Rng& rng, double slope = 0.2);
    std::vector<Tensor> parameters() const { return {theta}; }
};

Tensor sgcn_conv(const Tensor& x, const SampledGraph& g, const SgcnParams& params);

// Plain affine+relu stack; relu omitted after the last layer.
struct MlpParams {
    std::vector<LinearParams> layers;

    static MlpParams init(const std::vector<std::size_t>& widths, Rng& rng);
    std::vector<Tensor> parameters() const;
};

Tensor mlp(const Tensor& x, const MlpParams& params);

}  // namespace dgm
