#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "dgm/data.hpp"

using namespace dgm;

namespace {

std::size_t count_true(const Mask& m) {
    std::size_t c = 0;
    for (bool b : m) c += b;
    return c;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("dgm_test_" + name);
}

}  // namespace

TEST_CASE("synth_clusters shapes, balance and determinism") {
    auto ds = synth_clusters(90, 3, 4, 2, 6.0, 0.5, 7);
    CHECK(ds.num_nodes() == 90);
    CHECK(ds.class_count == 3);
    CHECK(ds.modality1.rows() == 90);
    CHECK(ds.modality1.cols() == 4);
    REQUIRE(ds.modality2.has_value());
    CHECK(ds.modality2->cols() == 2);
    CHECK(count_true(ds.train_mask) == 0);

    std::vector<std::size_t> per_class(3, 0);
    for (std::size_t lab : ds.labels) ++per_class[lab];
    for (std::size_t c : per_class) CHECK(c == 30);

    auto again = synth_clusters(90, 3, 4, 2, 6.0, 0.5, 7);
    CHECK(again.modality1.values() == ds.modality1.values());
    CHECK(again.modality2->values() == ds.modality2->values());
    auto other = synth_clusters(90, 3, 4, 2, 6.0, 0.5, 8);
    CHECK(other.modality1.values() != ds.modality1.values());

    CHECK_THROWS_AS(synth_clusters(5, 3, 2, 2, 1.0, 0.1, 0), DataError);
}

TEST_CASE("synth_clusters graph modality separates the classes") {
    auto ds = synth_clusters(150, 3, 2, 3, 8.0, 0.4, 21);
    const auto& g = *ds.modality2;
    // centroid distances dominate within-class spread
    std::vector<std::vector<double>> cent(3, std::vector<double>(g.cols(), 0.0));
    std::vector<double> cnt(3, 0.0);
    for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
        cnt[ds.labels[i]] += 1.0;
        for (std::size_t j = 0; j < g.cols(); ++j) cent[ds.labels[i]][j] += g.at(i, j);
    }
    for (std::size_t c = 0; c < 3; ++c)
        for (double& v : cent[c]) v /= cnt[c];
    double min_between = 1e100;
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b) {
            double d = 0.0;
            for (std::size_t j = 0; j < g.cols(); ++j) {
                const double diff = cent[a][j] - cent[b][j];
                d += diff * diff;
            }
            min_between = std::min(min_between, std::sqrt(d));
        }
    double mean_spread = 0.0;
    for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) {
            const double diff = g.at(i, j) - cent[ds.labels[i]][j];
            d += diff * diff;
        }
        mean_spread += std::sqrt(d);
    }
    mean_spread /= static_cast<double>(ds.num_nodes());
    CHECK(min_between > 4.0 * mean_spread);
}

TEST_CASE("synth_shapes parts and geometry") {
    auto set = synth_shapes(5, 100, 3);
    CHECK(set.shapes.size() == 5);
    CHECK(set.category_parts == std::vector<std::vector<std::size_t>>{{0, 1}});
    for (const auto& s : set.shapes) {
        CHECK(s.points.rows() == 100);
        CHECK(s.points.cols() == 3);
        CHECK(s.category == 0);
        std::size_t rod = 0;
        double z_rod = 0.0, z_ball = 0.0;
        for (std::size_t p = 0; p < 100; ++p) {
            REQUIRE(s.parts[p] <= 1);
            if (s.parts[p] == 0) {
                ++rod;
                z_rod += s.points.at(p, 2);
            } else {
                z_ball += s.points.at(p, 2);
            }
        }
        CHECK(rod == 60);
        CHECK(z_ball / 40.0 > z_rod / 60.0);  // ball sits on top
    }
    auto again = synth_shapes(5, 100, 3);
    CHECK(again.shapes[2].points.values() == set.shapes[2].points.values());
}

TEST_CASE("tabular round trip preserves everything") {
    auto ds = synth_clusters(24, 2, 3, 2, 4.0, 0.3, 11);
    TabularSchema schema;
    schema.label_column = "y";
    schema.modality1_columns = {"a", "b", "c"};
    schema.modality2_columns = {"g0", "g1"};

    const auto data_path = temp_file("roundtrip.csv");
    const auto schema_path = temp_file("roundtrip.schema");
    save_tabular(data_path.string(), ds, schema);
    save_schema(schema_path.string(), schema);

    auto schema2 = load_schema(schema_path.string());
    CHECK(schema2.label_column == "y");
    CHECK(schema2.modality1_columns == schema.modality1_columns);
    CHECK(schema2.modality2_columns == schema.modality2_columns);

    auto back = load_tabular(data_path.string(), schema2);
    CHECK(back.labels == ds.labels);
    CHECK(back.class_count == 2);
    CHECK(back.modality1.values() == ds.modality1.values());
    REQUIRE(back.modality2.has_value());
    CHECK(back.modality2->values() == ds.modality2->values());

    std::filesystem::remove(data_path);
    std::filesystem::remove(schema_path);
}

TEST_CASE("tabular loader reports malformed input") {
    const auto path = temp_file("bad.csv");
    TabularSchema schema{"y", {"a"}, {}};

    auto write = [&](const std::string& text) {
        std::ofstream out(path);
        out << text;
    };

    write("y,a\n0,1.5\n1,oops\n");
    CHECK_THROWS_WITH_AS(load_tabular(path.string(), schema),
                         doctest::Contains("line 3"), DataError);
    write("y,a\n0,nan\n");
    CHECK_THROWS_AS(load_tabular(path.string(), schema), DataError);
    write("y,a\n0,1.0,9\n");
    CHECK_THROWS_AS(load_tabular(path.string(), schema), DataError);
    write("y,a\n0.5,1.0\n");
    CHECK_THROWS_AS(load_tabular(path.string(), schema), DataError);
    write("z,a\n0,1.0\n");
    CHECK_THROWS_WITH_AS(load_tabular(path.string(), schema), doctest::Contains("'y'"), DataError);
    write("y,a\n");
    CHECK_THROWS_AS(load_tabular(path.string(), schema), DataError);

    std::filesystem::remove(path);
}

TEST_CASE("standardize uses training rows only") {
    std::vector<double> v = {10, 1, 20, 1, 30, 1, 1000, 1};
    NodeDataset ds;
    ds.modality1 = Tensor::constant({4, 2}, v);
    ds.labels = {0, 0, 1, 1};
    ds.class_count = 2;
    ds.train_mask = {true, true, true, false};  // the outlier row is held out
    ds.val_mask.assign(4, false);
    ds.test_mask = {false, false, false, true};
    ds.unseen_mask.assign(4, false);

    auto out = standardize(ds);
    CHECK(out.standardized);
    double mu = 0.0, var = 0.0;
    for (std::size_t i = 0; i < 3; ++i) mu += out.modality1.at(i, 0);
    mu /= 3.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double d = out.modality1.at(i, 0) - mu;
        var += d * d;
    }
    CHECK(mu == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(var / 3.0 == doctest::Approx(1.0));
    // constant column collapses to zero everywhere
    for (std::size_t i = 0; i < 4; ++i) CHECK(out.modality1.at(i, 1) == 0.0);
    // the held-out outlier is scaled by train statistics, not its own
    CHECK(out.modality1.at(3, 0) > 10.0);

    NodeDataset empty = ds;
    empty.train_mask.assign(4, false);
    CHECK_THROWS_AS(standardize(empty), ConfigError);
}

TEST_CASE("select_features keeps the informative columns") {
    Rng rng(31);
    const std::size_t n = 240, classes = 3, d = 6;
    std::vector<double> v(n * d);
    Labels labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = i % classes;
        for (std::size_t j = 0; j < d; ++j) v[i * d + j] = rng.gauss();
        // columns 1 and 4 carry the class signal
        v[i * d + 1] += labels[i] == 0 ? 3.0 : -3.0;
        v[i * d + 4] += labels[i] == 1 ? 3.0 : -3.0;
    }
    NodeDataset ds;
    ds.modality1 = Tensor::constant({n, d}, std::move(v));
    ds.labels = std::move(labels);
    ds.class_count = classes;
    ds.train_mask.assign(n, true);
    ds.val_mask.assign(n, false);
    ds.test_mask.assign(n, false);
    ds.unseen_mask.assign(n, false);

    auto sel = select_features(ds, 2);
    CHECK(sel.kept_modality1 == std::vector<std::size_t>{1, 4});
    CHECK(sel.dataset.modality1.cols() == 2);
    CHECK(sel.dataset.modality1.at(0, 0) == ds.modality1.at(0, 1));
    CHECK(sel.kept_modality2.empty());

    // target >= width is a no-op
    auto noop = select_features(ds, d);
    CHECK(noop.kept_modality1.size() == d);
    CHECK(noop.dataset.modality1.values() == ds.modality1.values());
}

TEST_CASE("make_splits transductive 90/10") {
    auto ds = synth_clusters(100, 4, 2, 2, 4.0, 0.3, 5);
    make_splits(ds, SplitScheme::transductive, 17);
    CHECK(count_true(ds.train_mask) == 90);
    CHECK(count_true(ds.test_mask) == 10);
    CHECK(count_true(ds.val_mask) == 0);
    CHECK(count_true(ds.unseen_mask) == 0);
    for (std::size_t i = 0; i < 100; ++i)
        CHECK((ds.train_mask[i] ? 1 : 0) + (ds.test_mask[i] ? 1 : 0) == 1);
    // stratified: 25 per class, 10% round to 2 or 3 per class
    std::vector<std::size_t> test_per_class(4, 0);
    for (std::size_t i = 0; i < 100; ++i)
        if (ds.test_mask[i]) ++test_per_class[ds.labels[i]];
    for (std::size_t c : test_per_class) CHECK((c == 2 || c == 3));
}

TEST_CASE("make_splits inductive 80/10/10") {
    auto ds = synth_clusters(200, 2, 2, 2, 4.0, 0.3, 5);
    make_splits(ds, SplitScheme::inductive, 23);
    CHECK(count_true(ds.train_mask) == 160);
    CHECK(count_true(ds.val_mask) == 20);
    CHECK(count_true(ds.unseen_mask) == 20);
    CHECK(count_true(ds.test_mask) == 0);
    for (std::size_t i = 0; i < 200; ++i) {
        const int hits = (ds.train_mask[i] ? 1 : 0) + (ds.val_mask[i] ? 1 : 0) + (ds.unseen_mask[i] ? 1 : 0);
        CHECK(hits == 1);
    }
    // splits are seed-deterministic
    auto ds2 = synth_clusters(200, 2, 2, 2, 4.0, 0.3, 5);
    make_splits(ds2, SplitScheme::inductive, 23);
    CHECK(ds2.train_mask == ds.train_mask);
    CHECK(ds2.unseen_mask == ds.unseen_mask);
}

TEST_CASE("stratified_folds partition and balance") {
    auto ds = synth_clusters(300, 3, 2, 2, 4.0, 0.3, 5);
    auto fold_of = stratified_folds(ds.labels, 10, 41);
    REQUIRE(fold_of.size() == 300);
    std::vector<std::vector<std::size_t>> per_fold_class(10, std::vector<std::size_t>(3, 0));
    for (std::size_t i = 0; i < 300; ++i) {
        REQUIRE(fold_of[i] < 10);
        ++per_fold_class[fold_of[i]][ds.labels[i]];
    }
    for (const auto& f : per_fold_class)
        for (std::size_t c : f) CHECK(c == 10);

    CHECK_THROWS_AS(stratified_folds(ds.labels, 1, 0), ConfigError);

    // fallback path still partitions everything
    Labels tiny = {0, 0, 0, 0, 0, 1};  // class 1 has fewer members than folds
    auto fb = stratified_folds(tiny, 3, 9);
    std::vector<std::size_t> sizes(3, 0);
    for (std::size_t f : fb) ++sizes[f];
    CHECK(sizes == std::vector<std::size_t>{2, 2, 2});
}

TEST_CASE("point cloud files round trip") {
    auto set = synth_shapes(2, 30, 4);
    const auto dir = std::filesystem::temp_directory_path();
    std::vector<std::string> paths = {(dir / "0_shape_a.xyz").string(), (dir / "0_shape_b.xyz").string()};
    save_point_cloud(paths[0], set.shapes[0]);
    save_point_cloud(paths[1], set.shapes[1]);

    auto back = load_point_clouds(paths);
    REQUIRE(back.shapes.size() == 2);
    CHECK(back.category_parts == set.category_parts);
    for (std::size_t s = 0; s < 2; ++s) {
        CHECK(back.shapes[s].points.values() == set.shapes[s].points.values());
        CHECK(back.shapes[s].parts == set.shapes[s].parts);
        CHECK(back.shapes[s].category == 0);
    }

    // category comes from the name prefix
    const auto cat7 = (dir / "7_thing.xyz").string();
    save_point_cloud(cat7, set.shapes[0]);
    CHECK(load_point_cloud(cat7).category == 7);

    const auto noprefix = (dir / "shape.xyz").string();
    save_point_cloud(noprefix, set.shapes[0]);
    CHECK_THROWS_AS(load_point_cloud(noprefix), DataError);

    const auto bad = (dir / "1_bad.xyz").string();
    {
        std::ofstream out(bad);
        out << "0 0 0 0\n1 oops 0 1\n";
    }
    CHECK_THROWS_WITH_AS(load_point_cloud(bad), doctest::Contains("line 2"), DataError);

    for (const auto& p : paths) std::filesystem::remove(p);
    std::filesystem::remove(cat7);
    std::filesystem::remove(noprefix);
    std::filesystem::remove(bad);
}

TEST_CASE("subset restricts rows and masks together") {
    auto ds = synth_clusters(40, 2, 3, 2, 4.0, 0.3, 13);
    make_splits(ds, SplitScheme::transductive, 2);
    auto sub = ds.subset({5, 0, 17});
    CHECK(sub.num_nodes() == 3);
    CHECK(sub.labels == Labels{ds.labels[5], ds.labels[0], ds.labels[17]});
    for (std::size_t j = 0; j < 3; ++j) CHECK(sub.modality1.at(1, j) == ds.modality1.at(0, j));
    CHECK(sub.modality2->at(2, 1) == ds.modality2->at(17, 1));
    CHECK(sub.train_mask[0] == ds.train_mask[5]);
    CHECK(sub.test_mask[2] == ds.test_mask[17]);
    CHECK(sub.class_count == 2);
}
