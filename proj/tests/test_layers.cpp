#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "dgm/layers.hpp"

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

// h_psi that passes the neighbor through: hidden = [x_i | x_j - x_i] -> x_j
EdgeConvParams passthrough_params(std::size_t d) {
    // hidden layer wide enough to carry x_i and x_j - x_i through relu:
    // represent each as (pos, neg) pair so relu keeps both signs.
    const std::size_t width = 4 * d;
    std::vector<double> w1(2 * d * width, 0.0);
    for (std::size_t c = 0; c < 2 * d; ++c) {
        w1[c * width + 2 * c] = 1.0;
        w1[c * width + 2 * c + 1] = -1.0;
    }
    std::vector<double> w2(width * d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        // x_j = x_i + (x_j - x_i)
        w2[(2 * c) * d + c] = 1.0;
        w2[(2 * c + 1) * d + c] = -1.0;
        w2[(2 * (d + c)) * d + c] = 1.0;
        w2[(2 * (d + c) + 1) * d + c] = -1.0;
    }
    EdgeConvParams p;
    p.hidden = LinearParams{Tensor::constant({2 * d, width}, std::move(w1)),
                            Tensor::zeros({width})};
    p.out = LinearParams{Tensor::constant({width, d}, std::move(w2)), Tensor::zeros({d})};
    return p;
}

}  // namespace

TEST_CASE("edge_conv with passthrough h sums the neighbors") {
    Tensor x = Tensor::constant({3, 2}, {0, 0, 1, 2, 3, 4});
    auto g = make_graph(3, 2, {{1, 2}, {0, 2}, {0, 1}});
    auto out = edge_conv(x, g, passthrough_params(2));
    CHECK(out.at(0, 0) == doctest::Approx(4.0));
    CHECK(out.at(0, 1) == doctest::Approx(6.0));
}

TEST_CASE("edge_conv with zero output layer gives zero rows") {
    Rng rng(4);
    auto p = EdgeConvParams::init(2, 8, 3, rng);
    p.out.weight.values().assign(p.out.weight.size(), 0.0);
    p.out.bias.values().assign(p.out.bias.size(), 0.0);
    Tensor x = Tensor::constant({3, 2}, {1, 2, 3, 4, 5, 6});
    auto g = make_graph(3, 1, {{1}, {2}, {0}});
    auto out = edge_conv(x, g, p);
    for (double v : out.values()) CHECK(v == 0.0);
}

TEST_CASE("edge_conv permutation equivariance") {
    Rng rng(6);
    auto params = EdgeConvParams::init(2, 8, 3, rng);
    std::vector<double> xv(4 * 2);
    for (double& v : xv) v = rng.gauss();
    Tensor x = Tensor::constant({4, 2}, xv);
    auto g = make_graph(4, 2, {{1, 2}, {0, 3}, {1, 3}, {0, 2}});
    auto out = edge_conv(x, g, params);

    // relabel nodes by pi(i) = (i + 1) mod 4
    auto pi = [](std::size_t i) { return (i + 1) % 4; };
    std::vector<double> xp(4 * 2);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t c = 0; c < 2; ++c) xp[pi(i) * 2 + c] = xv[i * 2 + c];
    std::vector<std::vector<std::size_t>> nbrs(4);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j : g.in_neighbors[i]) nbrs[pi(i)].push_back(pi(j));
        std::sort(nbrs[pi(i)].begin(), nbrs[pi(i)].end());
    }
    auto out_p = edge_conv(Tensor::constant({4, 2}, xp), make_graph(4, 2, nbrs), params);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t c = 0; c < 3; ++c) CHECK(out_p.at(pi(i), c) == out.at(i, c));
}

TEST_CASE("edge_conv output independent of edge list order") {
    // in_neighbors are stored sorted; summation order is fixed, so the same
    // set of edges gives bit-identical output however it was produced
    Rng rng(12);
    auto params = EdgeConvParams::init(1, 4, 1, rng);
    Tensor x = Tensor::constant({3, 1}, {0.5, -1.5, 2.0});
    auto a = edge_conv(x, make_graph(3, 2, {{1, 2}, {0, 2}, {0, 1}}), params);
    auto b = edge_conv(x, make_graph(3, 2, {{1, 2}, {0, 2}, {0, 1}}), params);
    CHECK(a.values() == b.values());
}

TEST_CASE("edge_conv rejects nodes without in-edges") {
    Rng rng(1);
    auto params = EdgeConvParams::init(1, 4, 1, rng);
    Tensor x = Tensor::constant({2, 1}, {1, 2});
    SampledGraph g;
    g.num_nodes = 2;
    g.k = 1;
    g.in_neighbors = {{1}, {}};
    g.edge_prob = {{1.0}, {}};
    CHECK_THROWS_AS(edge_conv(x, g, params), ConfigError);
}

TEST_CASE("sgcn_conv is the leaky-relu of the neighbor mean times theta") {
    Tensor x = Tensor::constant({3, 2}, {0, 0, 2, 0, 0, 2});
    auto g = make_graph(3, 2, {{1, 2}, {0, 2}, {0, 1}});
    SgcnParams p{Tensor::constant({2, 2}, {1, 0, 0, 1}), 0.2};
    auto out = sgcn_conv(x, g, p);
    CHECK(out.at(0, 0) == doctest::Approx(1.0));
    CHECK(out.at(0, 1) == doctest::Approx(1.0));

    // theta = 0 -> zeros
    SgcnParams z{Tensor::zeros({2, 2}), 0.2};
    auto zero_out = sgcn_conv(x, g, z);
    for (double v : zero_out.values()) CHECK(v == 0.0);

    // negative mean goes through the slope
    Tensor y = Tensor::constant({3, 2}, {0, 0, -2, 8, 0, 0});
    auto g1 = make_graph(3, 1, {{1}, {0}, {0}});
    auto o = sgcn_conv(y, g1, p);
    CHECK(o.at(0, 0) == doctest::Approx(-0.4));
    CHECK(o.at(0, 1) == doctest::Approx(8.0));
}

TEST_CASE("sgcn row depends only on its in-neighbors") {
    Rng rng(21);
    auto p = SgcnParams::init(2, 2, rng);
    std::vector<double> xv(4 * 2);
    for (double& v : xv) v = rng.gauss();
    auto g = make_graph(4, 1, {{1}, {2}, {3}, {0}});
    auto base = sgcn_conv(Tensor::constant({4, 2}, xv), g, p);
    // perturb node 3 (not a neighbor of node 0)
    auto xv2 = xv;
    xv2[3 * 2] += 10.0;
    auto bumped = sgcn_conv(Tensor::constant({4, 2}, xv2), g, p);
    CHECK(bumped.at(0, 0) == base.at(0, 0));
    CHECK(bumped.at(0, 1) == base.at(0, 1));
    CHECK(bumped.at(2, 0) != base.at(2, 0));
}

TEST_CASE("mlp identity and zero-weight behavior") {
    MlpParams p;
    p.layers.push_back(LinearParams{Tensor::constant({2, 2}, {1, 0, 0, 1}), Tensor::zeros({2})});
    Tensor x = Tensor::constant({2, 2}, {1, -2, 3, 4});
    CHECK(mlp(x, p).values() == x.values());  // no relu after the last layer

    MlpParams zb;
    zb.layers.push_back(LinearParams{Tensor::zeros({2, 3}), Tensor::constant({3}, {1, 2, 3})});
    auto out = mlp(x, zb);
    CHECK(out.values() == std::vector<double>{1, 2, 3, 1, 2, 3});
}

TEST_CASE("all layer gradients pass finite differences") {
    Rng rng(33);
    std::vector<double> xv(5 * 3);
    for (double& v : xv) v = rng.gauss();
    Tensor x = Tensor::parameter({5, 3}, xv);
    auto g = make_graph(5, 2, {{1, 2}, {0, 3}, {1, 4}, {0, 2}, {2, 3}});

    auto ec = EdgeConvParams::init(3, 6, 2, rng);
    std::vector<Tensor> ecp = ec.parameters();
    ecp.push_back(x);
    auto rep = check_gradient([&]() { return sum(mul(edge_conv(x, g, ec), edge_conv(x, g, ec))); }, ecp);
    CHECK(rep.max_rel_error < 1e-4);

    auto sg = SgcnParams::init(3, 2, rng);
    auto rep2 = check_gradient([&]() { return sum(mul(sgcn_conv(x, g, sg), sgcn_conv(x, g, sg))); },
                               {sg.theta, x});
    CHECK(rep2.max_rel_error < 1e-4);

    auto mp = MlpParams::init({3, 5, 2}, rng);
    auto mpp = mp.parameters();
    mpp.push_back(x);
    auto rep3 = check_gradient([&]() { return sum(mul(mlp(x, mp), mlp(x, mp))); }, mpp);
    CHECK(rep3.max_rel_error < 1e-4);
}
