#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dgm/metrics.hpp"
#include "dgm/rng.hpp"

using namespace dgm;

namespace {

SampledGraph make_graph(std::size_t n, std::size_t k, std::vector<std::vector<std::size_t>> nbrs) {
    SampledGraph g;
    g.num_nodes = n;
    g.k = k;
    g.in_neighbors = std::move(nbrs);
    g.edge_prob.assign(n, std::vector<double>(k, 1.0));
    return g;
}

}  // namespace

TEST_CASE("accuracy identities") {
    Labels truth = {0, 1, 2, 1};
    Mask all(4, true);
    CHECK(accuracy(truth, truth, all) == 1.0);
    CHECK(accuracy({1, 2, 0, 0}, truth, all) == 0.0);
    CHECK(accuracy({0, 1, 0, 0}, truth, all) == doctest::Approx(0.5));
    CHECK(accuracy({0, 9, 9, 9}, truth, {true, false, false, false}) == 1.0);
    CHECK_THROWS_AS(accuracy(truth, truth, Mask(4, false)), ConfigError);
}

TEST_CASE("accuracy equals the count-weighted mean of per-class accuracy") {
    Rng rng(14);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 40, classes = 4;
        Labels truth(n), pred(n);
        Mask mask(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = rng.uniform_int(classes);
            pred[i] = rng.uniform_int(classes);
            mask[i] = rng.uniform() < 0.7;
        }
        if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) mask[0] = true;
        const auto pca = per_class_accuracy(pred, truth, mask, classes);
        std::vector<double> cnt(classes, 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask[i]) {
                cnt[truth[i]] += 1.0;
                total += 1.0;
            }
        double weighted = 0.0;
        for (std::size_t c = 0; c < classes; ++c) weighted += pca[c] * cnt[c] / total;
        CHECK(accuracy(pred, truth, mask) == doctest::Approx(weighted).epsilon(1e-12));
    }
}

TEST_CASE("mean_iou hand case 0.25") {
    // 4 points, truth all part 0; prediction gets one right and paints the
    // rest part 1: IoU(0) = 1/4, IoU(1) = 0/3, mean = 0.125 per shape
    PointCloudSet set;
    set.category_parts = {{0, 1}};
    set.shapes.push_back(Shape3D{Tensor::zeros({4, 3}), {0, 0, 0, 0}, 0});
    CHECK(mean_iou({{0, 1, 1, 1}}, set) == doctest::Approx((0.25 + 0.0) / 2.0));

    // perfect prediction
    CHECK(mean_iou({{0, 0, 0, 0}}, set) == 1.0);

    // half right on a 2-part shape: IoU = 1/3 for both parts
    PointCloudSet two;
    two.category_parts = {{0, 1}};
    two.shapes.push_back(Shape3D{Tensor::zeros({4, 3}), {0, 0, 1, 1}, 0});
    CHECK(mean_iou({{0, 1, 0, 1}}, two) == doctest::Approx(1.0 / 3.0));

    // prediction outside the category's part set is rejected
    CHECK_THROWS_AS(mean_iou({{0, 0, 0, 7}}, set), DataError);
    CHECK_THROWS_AS(mean_iou({{0, 0}}, set), ShapeError);
    CHECK_THROWS_AS(mean_iou({}, set), ShapeError);
}

TEST_CASE("mean_iou averages over shapes") {
    PointCloudSet set;
    set.category_parts = {{0, 1}};
    set.shapes.push_back(Shape3D{Tensor::zeros({2, 3}), {0, 1}, 0});
    set.shapes.push_back(Shape3D{Tensor::zeros({2, 3}), {0, 1}, 0});
    // first perfect, second fully wrong (IoU 0 for both parts)
    CHECK(mean_iou({{0, 1}, {1, 0}}, set) == doctest::Approx(0.5));
}

TEST_CASE("homophily counting and masking") {
    Labels labels = {0, 0, 1, 1};
    auto g = make_graph(4, 2, {{1, 2}, {0, 3}, {0, 3}, {1, 2}});
    Mask all(4, true);
    // same-label edges: 0<-1, 1<-0, 2<-3, 3<-2 -> 4 of 8
    CHECK(homophily(g, labels, all) == doctest::Approx(0.5));

    // mask restricted to one class makes every surviving edge homophilous
    CHECK(homophily(g, labels, {true, true, false, false}) == doctest::Approx(1.0));

    // no intra-mask edge at all
    CHECK(!homophily(g, labels, {true, false, false, true}).has_value());
}

TEST_CASE("homophily of uniform random graphs approaches 1/classes") {
    Rng rng(77);
    const std::size_t n = 400, k = 5, classes = 4;
    Labels labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i % classes;
    Mask all(n, true);
    double total = 0.0;
    const int trials = 30;
    for (int t = 0; t < trials; ++t) {
        std::vector<std::vector<std::size_t>> nbrs(n);
        for (std::size_t i = 0; i < n; ++i)
            while (nbrs[i].size() < k) {
                std::size_t j = rng.uniform_int(n);
                if (j != i && std::find(nbrs[i].begin(), nbrs[i].end(), j) == nbrs[i].end())
                    nbrs[i].push_back(j);
            }
        total += *homophily(make_graph(n, k, nbrs), labels, all);
    }
    CHECK(total / trials == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("report serialization round trip") {
    MetricsReport r;
    r.accuracy = 0.875;
    r.per_class_accuracy = {1.0, 0.75};
    r.mean_iou = 0.5;
    r.homophily_per_layer = {0.25, 0.875};
    r.task_loss = 0.321;
    r.graph_loss = -0.125;
    r.config_echo = "{\"layers\":2}";
    r.seed = 42;
    r.extra["val_accuracy"] = 0.9;

    const std::string text = r.to_json();
    auto back = MetricsReport::from_json(text);
    CHECK(back.accuracy == r.accuracy);
    CHECK(back.per_class_accuracy == r.per_class_accuracy);
    CHECK(back.mean_iou == r.mean_iou);
    CHECK(back.homophily_per_layer == r.homophily_per_layer);
    CHECK(back.task_loss == r.task_loss);
    CHECK(back.graph_loss == r.graph_loss);
    CHECK(back.config_echo == r.config_echo);
    CHECK(back.seed == r.seed);
    CHECK(!back.wall_time_seconds.has_value());
    CHECK(back.extra == r.extra);

    // serialization is byte-stable
    CHECK(back.to_json() == text);
    CHECK(text.back() == '\n');

    // optional fields stay absent from the document
    MetricsReport bare;
    CHECK(bare.to_json().find("mean_iou") == std::string::npos);
    CHECK(bare.to_json().find("wall_time") == std::string::npos);
}
