#include "dgm/losses.hpp"

#include <algorithm>
#include <cmath>

namespace dgm {

namespace {

std::vector<std::size_t> mask_indices(const Mask& mask) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) out.push_back(i);
    return out;
}

}  // namespace

Tensor cross_entropy(const Tensor& logits, const Labels& labels, const Mask& mask) {
    const std::size_t n = logits.rows(), c = logits.cols();
    if (labels.size() != n || mask.size() != n)
        throw ShapeError("cross_entropy: labels/mask length != logit rows");
    for (std::size_t lab : labels)
        if (lab >= c) throw IndexError("cross_entropy: label " + std::to_string(lab) + " out of range");
    const auto idx = mask_indices(mask);
    if (idx.empty()) throw ConfigError("cross_entropy: empty mask");

    // stable log-softmax per masked row, plus cached softmax for the vjp
    auto softmax = std::make_shared<std::vector<double>>(idx.size() * c);
    double loss = 0.0;
    const auto& lv = logits.values();
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const std::size_t i = idx[r];
        double m = lv[i * c];
        for (std::size_t j = 1; j < c; ++j) m = std::max(m, lv[i * c + j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(lv[i * c + j] - m);
        const double logz = std::log(z) + m;
        loss -= lv[i * c + labels[i]] - logz;
        for (std::size_t j = 0; j < c; ++j) (*softmax)[r * c + j] = std::exp(lv[i * c + j] - logz);
    }
    loss /= static_cast<double>(idx.size());

    return custom_op({1}, {loss}, {logits}, [n, c, idx, labels, softmax](const std::vector<double>& g) {
        std::vector<double> dl(n * c, 0.0);
        const double scale = g[0] / static_cast<double>(idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const std::size_t i = idx[r];
            for (std::size_t j = 0; j < c; ++j) dl[i * c + j] = scale * (*softmax)[r * c + j];
            dl[i * c + labels[i]] -= scale;
        }
        return std::vector<std::vector<double>>{std::move(dl)};
    });
}

std::vector<double> per_class_accuracy(const Labels& predicted, const Labels& truth, const Mask& mask,
                                       std::size_t num_classes) {
    std::vector<double> correct(num_classes, 0.0), total(num_classes, 0.0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!mask[i]) continue;
        total[truth[i]] += 1.0;
        if (predicted[i] == truth[i]) correct[truth[i]] += 1.0;
    }
    std::vector<double> acc(num_classes, 0.0);  // absent classes stay at 0
    for (std::size_t a = 0; a < num_classes; ++a)
        if (total[a] > 0.0) acc[a] = correct[a] / total[a];
    return acc;
}

Tensor graph_loss(const GraphLossInputs& in) {
    if (in.layers.empty()) throw ConfigError("graph_loss: no sampled layers");
    const auto idx = mask_indices(in.mask);
    if (idx.empty()) throw ConfigError("graph_loss: empty mask");

    const std::size_t first = in.last_layer_only ? in.layers.size() - 1 : 0;
    Tensor log_sum;  // [|idx|]
    for (std::size_t l = first; l < in.layers.size(); ++l) {
        const auto& layer = in.layers[l];
        std::size_t k = layer.graph.k;
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        edges.reserve(idx.size() * k);
        for (std::size_t i : idx) {
            if (layer.graph.in_neighbors[i].size() != k)
                throw ConfigError("graph_loss: node without full in-degree");
            for (std::size_t j : layer.graph.in_neighbors[i]) edges.emplace_back(i, j);
        }
        Tensor lp = row_block_sum(gather_entries(log(layer.probs, /*clamp_inputs=*/true), edges), k);
        log_sum = log_sum.defined() ? add(log_sum, lp) : lp;
    }

    std::vector<double> delta(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const std::size_t i = idx[r];
        const double acc = in.class_accuracy[in.truth[i]];
        delta[r] = in.predicted[i] == in.truth[i] ? acc - 1.0 : acc;
    }
    Tensor prod = exp(clamp(log_sum, -60.0, 0.0));
    return sum(mul(prod, Tensor::constant({idx.size()}, std::move(delta))));
}

Tensor total_loss(const Tensor& task, const Tensor& graph, double lambda) {
    return add(task, mul(graph, lambda));
}

Tensor zero_shot_loss(const Tensor& w, const Tensor& w_ref) {
    if (w.shape() != w_ref.shape()) throw ShapeError("zero_shot_loss: shape mismatch");
    Tensor d = sub(w, w_ref);
    return sum(mul(d, d));
}

Labels nearest_representation(const Tensor& w, const Tensor& ref) {
    if (w.cols() != ref.cols()) throw ShapeError("nearest_representation: feature widths differ");
    Labels out(w.rows());
    for (std::size_t i = 0; i < w.rows(); ++i) {
        double best = 0.0;
        std::size_t arg = 0;
        for (std::size_t j = 0; j < ref.rows(); ++j) {
            double d = 0.0;
            for (std::size_t cidx = 0; cidx < w.cols(); ++cidx) {
                const double diff = w.at(i, cidx) - ref.at(j, cidx);
                d += diff * diff;
            }
            if (j == 0 || d < best) {
                best = d;
                arg = j;
            }
        }
        out[i] = arg;
    }
    return out;
}

}  // namespace dgm
