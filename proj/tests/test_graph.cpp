#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include <heatgl/designs.hpp>
#include <heatgl/error.hpp>
#include <heatgl/graph.hpp>

#include "oracles.hpp"

using namespace heatgl;

namespace {

Graph edge_graph()
{
    const std::vector<Edge> e{{0, 1}};
    return Graph::from_edges(2, e);
}

Graph pair_singleton()
{
    const std::vector<Edge> e{{0, 1}};
    return Graph::from_edges(3, e);
}

Graph two_k5()
{
    std::vector<Edge> e;
    for (Vertex base : {0u, 5u}) {
        for (Vertex a = 0; a < 5; ++a) {
            for (Vertex b = a + 1; b < 5; ++b) e.emplace_back(base + a, base + b);
        }
    }
    return Graph::from_edges(10, e);
}

template <class F>
void expect_error(Errc code, F&& f)
{
    try {
        f();
        ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

} // namespace

TEST(Graph, InvariantsHoldAfterConstruction)
{
    const std::vector<Edge> e{{0, 1}, {1, 0}, {2, 1}, {0, 1}, {3, 2}};
    const Graph g = Graph::from_edges(4, e);
    EXPECT_EQ(g.edge_count(), 3u);
    for (Vertex v = 0; v < g.size(); ++v) {
        const auto nb = g.neighbors(v);
        EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
        EXPECT_EQ(std::adjacent_find(nb.begin(), nb.end()), nb.end());
        EXPECT_EQ(g.degree(v), nb.size());
        for (Vertex u : nb) {
            EXPECT_NE(u, v);
            EXPECT_TRUE(g.has_edge(u, v));
        }
    }
}

TEST(Graph, SelfLoopsRejectedUnlessAllowed)
{
    const std::vector<Edge> e{{1, 1}};
    expect_error(Errc::invalid_argument, [&] { Graph::from_edges(2, e); });
    const Graph g = Graph::from_edges(2, e, true);
    EXPECT_TRUE(g.has_edge(1, 1));
    EXPECT_EQ(g.degree(1), 1u);
}

TEST(Graph, OutOfRangeVertexRejected)
{
    const std::vector<Edge> e{{0, 5}};
    expect_error(Errc::index_out_of_range, [&] { Graph::from_edges(3, e); });
}

TEST(Laplacian, Examples)
{
    EXPECT_EQ(laplacian(Graph(1)), Eigen::MatrixXd::Zero(1, 1));
    Eigen::MatrixXd two(2, 2);
    two << 1, -1, -1, 1;
    EXPECT_EQ(laplacian(edge_graph()), two);
    Eigen::MatrixXd three = Eigen::MatrixXd::Zero(3, 3);
    three.topLeftCorner(2, 2) = two;
    EXPECT_EQ(laplacian(pair_singleton()), three);
}

TEST(Laplacian, RowSumsExactlyZeroOnRandomGraphs)
{
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t p = 2 + rep % 40;
        const auto e = oracle::random_edges(p, 0.3, rng);
        const Eigen::MatrixXd L = laplacian(Graph::from_edges(p, e));
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(p));
        EXPECT_EQ((L * ones).cwiseAbs().maxCoeff(), 0.0);
    }
    const auto sampled = sample_block_graph(std::vector<std::size_t>{5, 7}, 0.6, 0.1, true, 3);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(12);
    EXPECT_EQ((laplacian(sampled) * ones).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Spectrum, PairSingletonGap)
{
    const auto s = spectral_decompose(pair_singleton());
    ASSERT_TRUE(s.spectral_gap().has_value());
    EXPECT_NEAR(*s.spectral_gap(), 2.0, 1e-12);
    EXPECT_EQ(s.zero_multiplicity, 2u);
}

TEST(Spectrum, TwoCompleteGraphs)
{
    const auto s = spectral_decompose(two_k5());
    EXPECT_EQ(s.zero_multiplicity, 2u);
    EXPECT_NEAR(*s.spectral_gap(), 5.0, 1e-10);
}

TEST(Spectrum, SingleVertex)
{
    const auto s = spectral_decompose(Graph(1));
    ASSERT_EQ(s.eigenvalues.size(), 1);
    EXPECT_EQ(s.eigenvalues[0], 0.0);
    EXPECT_EQ(s.zero_multiplicity, 1u);
    EXPECT_FALSE(s.spectral_gap().has_value());
}

TEST(Spectrum, EigenpairsOrthonormalAndAccurate)
{
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t p = 3 + rep;
        const Graph g = Graph::from_edges(p, oracle::random_edges(p, 0.25, rng));
        const auto s = spectral_decompose(g);
        const Eigen::MatrixXd L = laplacian(g);
        const auto n = static_cast<Eigen::Index>(p);
        EXPECT_LT((s.eigenvectors.transpose() * s.eigenvectors - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LT((L * s.eigenvectors - s.eigenvectors * s.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LT(std::abs(s.eigenvalues[0]), 1e-10);
        for (Eigen::Index i = 1; i < n; ++i) EXPECT_LE(s.eigenvalues[i - 1], s.eigenvalues[i]);
    }
}

TEST(Spectrum, ZeroMultiplicityMatchesBreadthFirstSearch)
{
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(1, 64);
    std::uniform_real_distribution<double> density(0.0, 0.12);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t p = size(rng);
        const auto e = oracle::random_edges(p, density(rng), rng);
        const Graph g = Graph::from_edges(p, e);
        const auto expected = oracle::bfs_components(p, e);
        EXPECT_EQ(spectral_decompose(g).zero_multiplicity, expected);
        EXPECT_EQ(connected_components(g).count, expected);
    }
}

TEST(Spectrum, LargestEigenvalueAtMostTwiceMaxDegree)
{
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t p = 2 + rep;
        const Graph g = Graph::from_edges(p, oracle::random_edges(p, 0.4, rng));
        EXPECT_LE(spectral_decompose(g).largest(), 2.0 * static_cast<double>(g.max_degree()) + 1e-9);
    }
}

TEST(Spectrum, DenseLimitEnforced)
{
    SpectralOptions options;
    options.dense_limit = 4;
    expect_error(Errc::dimension_too_large, [&] { spectral_decompose(Graph(5), options); });
}

TEST(Quantile, NearestRank)
{
    EXPECT_EQ(nearest_rank_quantile({0.1, 0.9, 0.2}, 0.5), 0.2);
    EXPECT_EQ(nearest_rank_quantile({4, 1, 3, 2}, 0.75), 3.0);
    EXPECT_EQ(nearest_rank_quantile({4, 1, 3, 2}, 0.76), 4.0);
}

TEST(EstimateGraph, IdentityGivesEmptyGraph)
{
    for (double alpha : {0.1, 0.5, 0.75, 0.99}) EXPECT_EQ(estimate_graph(Eigen::MatrixXd::Identity(6, 6), alpha).edge_count(), 0u);
}

TEST(EstimateGraph, ThreeVariableExample)
{
    Eigen::MatrixXd r(3, 3);
    r << 1, 0.9, -0.2, 0.9, 1, 0.1, -0.2, 0.1, 1;
    const Graph g = estimate_graph(r, 0.5);
    EXPECT_EQ(g.edge_count(), 1u);
    EXPECT_TRUE(g.has_edge(0, 1));
}

TEST(EstimateGraph, Errors)
{
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
    expect_error(Errc::invalid_quantile, [&] { estimate_graph(id, 0.0); });
    expect_error(Errc::invalid_quantile, [&] { estimate_graph(id, 1.0); });
    Eigen::MatrixXd bad = id;
    bad(1, 1) = 0.9;
    expect_error(Errc::not_a_correlation, [&] { estimate_graph(bad, 0.5); });
    Eigen::MatrixXd big = id;
    big(0, 1) = big(1, 0) = 1.5;
    expect_error(Errc::not_a_correlation, [&] { estimate_graph(big, 0.5); });
}

TEST(EstimateGraph, InvariantUnderSignFlips)
{
    std::mt19937_64 rng(17);
    std::normal_distribution<double> z;
    Eigen::MatrixXd X(80, 12);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double common = z(rng);
        for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = (j < 6 ? common : 0.0) + z(rng);
    }
    const Graph base = estimate_graph(sample_correlation(X), 0.75);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::MatrixXd flipped = X;
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            if (rng() & 1u) flipped.col(j) *= -1.0;
        }
        EXPECT_EQ(estimate_graph(sample_correlation(flipped), 0.75), base);
    }
}

TEST(BlockGraph, MeanWithinBlockDegree)
{
    const std::vector<std::size_t> sizes{16, 24, 40, 20};
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Graph g = sample_block_graph(sizes, 0.5, 0.01, false, seed);
        double within = 0.0;
        for (Vertex v = 40; v < 80; ++v) {
            for (Vertex u : g.neighbors(v)) within += (u >= 40 && u < 80);
        }
        total += within / 40.0;
    }
    EXPECT_NEAR(total / 100.0, 19.5, 1.0);
}

TEST(BlockGraph, DegenerateProbabilities)
{
    const std::vector<std::size_t> sizes{3, 2};
    EXPECT_EQ(sample_block_graph(sizes, 0.0, 0.0, false, 1).edge_count(), 0u);
    const Graph g = sample_block_graph(sizes, 1.0, 0.0, false, 1);
    EXPECT_EQ(g.edge_count(), 4u);
    EXPECT_EQ(connected_components(g).count, 2u);
}

TEST(BlockGraph, Validation)
{
    const std::vector<std::size_t> sizes{3, 2};
    expect_error(Errc::invalid_probability, [&] { sample_block_graph(sizes, 1.2, 0.0, false, 1); });
    expect_error(Errc::invalid_probability, [&] { sample_block_graph(sizes, 0.5, -0.1, false, 1); });
    expect_error(Errc::invalid_probability, [&] { sample_block_graph(sizes, 0.2, 0.3, false, 1); });
}

TEST(BlockGraph, DeterministicPerSeed)
{
    const std::vector<std::size_t> sizes{10, 10};
    EXPECT_EQ(sample_block_graph(sizes, 0.5, 0.1, true, 42), sample_block_graph(sizes, 0.5, 0.1, true, 42));
    EXPECT_FALSE(sample_block_graph(sizes, 0.5, 0.1, true, 42) == sample_block_graph(sizes, 0.5, 0.1, true, 43));
}

// Typical clustered network (b = 0): lambda_g / p stays within
// [0.2 min xi_i T_i / p, 1.2 max xi_i T_i / p].
TEST(BlockGraph, ClusteredNetworkGapScalesWithP)
{
    const std::vector<double> fractions{0.5, 0.5};
    const double xi = 0.5;
    for (std::size_t p : {50u, 100u, 200u}) {
        const auto sizes = sizes_from_fractions(p, fractions);
        const double lo = 0.2 * xi * static_cast<double>(*std::min_element(sizes.begin(), sizes.end()));
        const double hi = 1.2 * xi * static_cast<double>(*std::max_element(sizes.begin(), sizes.end()));
        int inside = 0;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const Graph g = sample_block_graph(sizes, xi, 0.0, true, seed);
            const auto gap = spectral_decompose(g).spectral_gap();
            inside += gap && *gap >= lo && *gap <= hi;
        }
        EXPECT_GE(inside, 48) << "p = " << p;
    }
}

TEST(EdgeList, RoundTrip)
{
    std::mt19937_64 rng(4);
    const Graph g = Graph::from_edges(9, oracle::random_edges(9, 0.3, rng));
    std::stringstream buf;
    write_edge_list(buf, g);
    EXPECT_EQ(read_edge_list(buf), g);
}

TEST(EdgeList, ParseErrorsReportLine)
{
    std::stringstream bad("p 3\n0 1\n1 x\n");
    try {
        read_edge_list(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::parse_error);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(SampleCorrelation, UnitDiagonalAndSymmetric)
{
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z;
    Eigen::MatrixXd X(30, 5);
    for (auto& x : X.reshaped()) x = z(rng);
    const Eigen::MatrixXd r = sample_correlation(X);
    EXPECT_LT((r.diagonal().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_LT((r - r.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}
