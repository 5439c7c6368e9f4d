#include "dgm/metrics.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace dgm {

double accuracy(const Labels& predicted, const Labels& truth, const Mask& mask) {
    std::size_t total = 0, correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!mask[i]) continue;
        ++total;
        if (predicted[i] == truth[i]) ++correct;
    }
    if (total == 0) throw ConfigError("accuracy: empty mask");
    return static_cast<double>(correct) / static_cast<double>(total);
}

double mean_iou(const std::vector<Labels>& predicted, const PointCloudSet& truth) {
    if (predicted.size() != truth.shapes.size()) throw ShapeError("mean_iou: shape count mismatch");
    double shape_sum = 0.0;
    for (std::size_t s = 0; s < truth.shapes.size(); ++s) {
        const auto& gt = truth.shapes[s].parts;
        const auto& pr = predicted[s];
        if (pr.size() != gt.size()) throw ShapeError("mean_iou: point count mismatch on shape " + std::to_string(s));
        const auto& valid = truth.category_parts[truth.shapes[s].category];
        std::set<std::size_t> present;
        for (std::size_t p = 0; p < gt.size(); ++p) {
            if (std::find(valid.begin(), valid.end(), pr[p]) == valid.end())
                throw DataError("mean_iou: predicted part " + std::to_string(pr[p]) +
                                " outside category part set");
            present.insert(gt[p]);
            present.insert(pr[p]);
        }
        double part_sum = 0.0;
        for (std::size_t part : present) {
            std::size_t inter = 0, uni = 0;
            for (std::size_t p = 0; p < gt.size(); ++p) {
                const bool a = gt[p] == part, b = pr[p] == part;
                inter += a && b;
                uni += a || b;
            }
            part_sum += static_cast<double>(inter) / static_cast<double>(uni);
        }
        shape_sum += part_sum / static_cast<double>(present.size());
    }
    return shape_sum / static_cast<double>(truth.shapes.size());
}

std::optional<double> homophily(const SampledGraph& g, const Labels& labels, const Mask& mask) {
    std::size_t total = 0, same = 0;
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
        if (!mask[i]) continue;
        for (std::size_t j : g.in_neighbors[i]) {
            if (!mask[j]) continue;
            ++total;
            if (labels[i] == labels[j]) ++same;
        }
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(same) / static_cast<double>(total);
}

std::string MetricsReport::to_json() const {
    nlohmann::json j;  // keys serialize sorted
    j["accuracy"] = accuracy;
    j["per_class_accuracy"] = per_class_accuracy;
    if (mean_iou) j["mean_iou"] = *mean_iou;
    j["homophily_per_layer"] = homophily_per_layer;
    j["task_loss"] = task_loss;
    j["graph_loss"] = graph_loss;
    j["config_echo"] = config_echo;
    j["seed"] = seed;
    if (wall_time_seconds) j["wall_time_seconds"] = *wall_time_seconds;
    for (const auto& [k, v] : extra) j["extra"][k] = v;
    return j.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    MetricsReport r;
    r.accuracy = j.at("accuracy").get<double>();
    r.per_class_accuracy = j.at("per_class_accuracy").get<std::vector<double>>();
    if (j.contains("mean_iou")) r.mean_iou = j["mean_iou"].get<double>();
    r.homophily_per_layer = j.at("homophily_per_layer").get<std::vector<double>>();
    r.task_loss = j.at("task_loss").get<double>();
    r.graph_loss = j.at("graph_loss").get<double>();
    r.config_echo = j.at("config_echo").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("wall_time_seconds")) r.wall_time_seconds = j["wall_time_seconds"].get<double>();
    if (j.contains("extra"))
        for (const auto& [k, v] : j["extra"].items()) r.extra[k] = v.get<double>();
    return r;
}

}  // namespace dgm
