#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dgm/data.hpp"
#include "dgm/dgm.hpp"
#include "dgm/losses.hpp"

namespace dgm {

double accuracy(const Labels& predicted, const Labels& truth, const Mask& mask);

// Per shape: IoU for every part present in prediction or ground truth,
// averaged over parts; then averaged over shapes.
double mean_iou(const std::vector<Labels>& predicted, const PointCloudSet& truth);

// Fraction of edges with both endpoints in the mask whose labels agree;
// absent when no edge qualifies.
std::optional<double> homophily(const SampledGraph& g, const Labels& labels, const Mask& mask);

// Key-sorted JSON document mirroring the reported quantities; serialization
// is deterministic so identical runs produce identical bytes.
struct MetricsReport {
    double accuracy = 0.0;
    std::vector<double> per_class_accuracy;
    std::optional<double> mean_iou;
    std::vector<double> homophily_per_layer;
    double task_loss = 0.0;
    double graph_loss = 0.0;
    std::string config_echo;
    std::uint64_t seed = 0;
    std::optional<double> wall_time_seconds;
    std::map<std::string, double> extra;

    std::string to_json() const;
    static MetricsReport from_json(const std::string& text);
};

}  // namespace dgm
