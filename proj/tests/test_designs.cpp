#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <heatgl/designs.hpp>
#include <heatgl/error.hpp>

#include "oracles.hpp"

using namespace heatgl;

namespace {

double eig_min(const Eigen::MatrixXd& m)
{
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double eig_max(const Eigen::MatrixXd& m)
{
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

Eigen::MatrixXd laplacian_of(std::size_t p, const std::vector<Edge>& edges)
{
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (auto [u, v] : edges) {
        L(u, v) -= 1;
        L(v, u) -= 1;
        L(u, u) += 1;
        L(v, v) += 1;
    }
    return L;
}

} // namespace

TEST(Covariance, GffExamples)
{
    DesignSpec spec;
    spec.kind = DesignKind::gff;
    spec.sizes = {1};
    spec.mass = 1.0;
    const Graph single(1);
    EXPECT_NEAR(make_covariance(spec, &single)(0, 0), 1.0, 1e-14);

    spec.sizes = {2};
    spec.mass = 2.0;
    const std::vector<Edge> e{{0, 1}};
    const Graph edge = Graph::from_edges(2, e);
    const Eigen::MatrixXd S = make_covariance(spec, &edge);
    EXPECT_NEAR(S(0, 0), 0.375, 1e-12);
    EXPECT_NEAR(S(0, 1), 0.125, 1e-12);
    EXPECT_NEAR(S(1, 1), 0.375, 1e-12);
}

TEST(Covariance, BlockEquicorrelationDefaults)
{
    DesignSpec spec;
    const Eigen::MatrixXd S = make_covariance(spec);
    ASSERT_EQ(S.rows(), 100);
    const std::vector<std::size_t> sizes{16, 24, 40, 20};
    const std::vector<double> rho{0.6, 0.9, 0.7, 0.4};
    std::vector<int> group;
    for (int g = 0; g < 4; ++g) group.insert(group.end(), sizes[g], g);
    for (int i = 0; i < 100; ++i) {
        for (int j = 0; j < 100; ++j) {
            const double expect = i == j ? 1.0 : (group[i] == group[j] ? rho[group[i]] : 0.0);
            ASSERT_DOUBLE_EQ(S(i, j), expect) << i << "," << j;
        }
    }
    EXPECT_GT(eig_min(S), 0.0);
}

TEST(Covariance, GffInvertsPrecision)
{
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t p = 8 + 6 * rep;
        const auto e = oracle::random_edges(p, 0.2, rng);
        const Graph g = Graph::from_edges(p, e);
        DesignSpec spec;
        spec.kind = DesignKind::gff;
        spec.sizes = {p};
        spec.mass = 0.3 + 0.1 * rep;
        const Eigen::MatrixXd S = make_covariance(spec, &g);
        Eigen::MatrixXd P = laplacian_of(p, e);
        P.diagonal().array() += *spec.mass;
        EXPECT_LT((S * P - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(Covariance, GffSpectralBracketWithDefaultMass)
{
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t p = 20 + rep;
        const auto e = oracle::random_edges(p, 0.25, rng);
        const Graph g = Graph::from_edges(p, e);
        const std::size_t k = 2;
        const auto spectrum = spectral_decompose(g);
        if (spectrum.eigenvalues[k] <= 1e-9) continue;
        const double theta = default_gff_mass(g, k);
        EXPECT_NEAR(theta, spectrum.eigenvalues[k], 1e-12);
        DesignSpec spec;
        spec.kind = DesignKind::gff;
        spec.sizes = {p};
        spec.mass = theta;
        const Eigen::MatrixXd S = make_covariance(spec, &g);
        EXPECT_NEAR(eig_min(S), 1.0 / (spectrum.largest() + theta), 1e-8);
        EXPECT_NEAR(eig_max(S), 1.0 / theta, 1e-8);
    }
}

TEST(Covariance, SbmBoundsCorrected)
{
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        DesignSpec spec;
        spec.kind = DesignKind::sbm_cov;
        spec.sizes.clear();
        const std::size_t k = 1 + rep % 4;
        for (std::size_t i = 0; i < k; ++i) spec.sizes.push_back(std::uniform_int_distribution<std::size_t>(2, 16)(rng));
        spec.a = std::uniform_real_distribution<double>(0.05, 0.45)(rng);
        spec.b = std::uniform_real_distribution<double>(0.0, spec.a)(rng) / 16.0;
        const Eigen::MatrixXd S = make_covariance(spec);
        const double cmax = static_cast<double>(*std::max_element(spec.sizes.begin(), spec.sizes.end()));
        const double lo = eig_min(S), hi = eig_max(S);
        EXPECT_GE(lo, 1.0 - spec.a - 1e-10);
        EXPECT_NEAR(lo, 1.0 - spec.a, 1e-9);
        EXPECT_LE(hi, (1.0 - spec.a) + (spec.a - spec.b) * cmax + spec.b * static_cast<double>(spec.p()) + 1e-10);
        for (Eigen::Index i = 0; i < S.rows(); ++i) EXPECT_EQ(S(i, i), 1.0);
    }
}

TEST(Covariance, RejectsInvalidSpecs)
{
    DesignSpec spec;
    spec.rho = {0.6, 1.0, 0.7, 0.4};
    try {
        make_covariance(spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::not_positive_definite);
    }
    spec.rho = {0.6, -0.1, 0.7, 0.4};
    EXPECT_THROW(make_covariance(spec), Error);
    spec = DesignSpec{};
    spec.kind = DesignKind::sbm_cov;
    spec.a = 0.1;
    spec.b = 0.2;
    EXPECT_THROW(make_covariance(spec), Error);
    spec = DesignSpec{};
    spec.kind = DesignKind::gff;
    spec.mass = -1.0;
    EXPECT_THROW(make_covariance(spec), Error);
}

TEST(GffMass, Examples)
{
    const std::vector<Edge> e{{0, 1}};
    EXPECT_NEAR(default_gff_mass(Graph::from_edges(3, e), 2), 2.0, 1e-10);
    std::vector<Edge> k5;
    for (Vertex off : {0u, 5u})
        for (Vertex u = 0; u < 5; ++u)
            for (Vertex v = u + 1; v < 5; ++v) k5.emplace_back(u + off, v + off);
    EXPECT_NEAR(default_gff_mass(Graph::from_edges(10, k5), 2), 5.0, 1e-10);
    try {
        default_gff_mass(Graph(1), 0);
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), Errc::not_positive_definite);
    }
    EXPECT_THROW(default_gff_mass(Graph(20), 2, 10), Error);
}

TEST(Sizes, FromFractions)
{
    const std::vector<double> f{0.16, 0.24, 0.40, 0.20};
    EXPECT_EQ(sizes_from_fractions(100, f), (std::vector<std::size_t>{16, 24, 40, 20}));
    const auto s = sizes_from_fractions(37, f);
    EXPECT_EQ(std::accumulate(s.begin(), s.end(), std::size_t{0}), 37u);
}

TEST(Sample, NoiselessResponse)
{
    DesignSpec spec;
    spec.noise_sigma = 0.0;
    spec.seed = 5;
    const auto d = sample_design_and_response(spec);
    EXPECT_LT((d.y - d.X * d.beta_star).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(d.X.rows(), 200);
    EXPECT_EQ(d.X.cols(), 100);
    EXPECT_EQ(d.groups.sizes(), (std::vector<std::size_t>{16, 24, 40, 20}));
}

TEST(Sample, DefaultBetaPattern)
{
    DesignSpec spec;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        spec.seed = seed;
        const auto d = sample_design_and_response(spec);
        for (Eigen::Index i = 0; i < 100; ++i) {
            const auto g = d.groups.label(static_cast<std::size_t>(i));
            const double b = d.beta_star[i];
            if (g == 0) EXPECT_TRUE(b >= 0.5 && b <= 0.7);
            if (g == 2) EXPECT_TRUE(b >= -0.7 && b <= -0.5);
            if (g == 1 || g == 3) EXPECT_EQ(b, 0.0);
        }
    }
}

TEST(Sample, SampleCovarianceConverges)
{
    DesignSpec spec;
    spec.sizes = {6};
    spec.rho = {0.5};
    spec.n = 50000;
    spec.beta = {BetaScheme::zero()};
    spec.seed = 11;
    const auto d = sample_design_and_response(spec);
    const Eigen::MatrixXd centered = d.X.rowwise() - d.X.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(spec.n - 1);
    EXPECT_LT((cov - make_covariance(spec)).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Sample, DeterministicPerSeed)
{
    DesignSpec spec;
    spec.kind = DesignKind::gff;
    spec.n = 50;
    spec.seed = 8;
    const auto a = sample_design_and_response(spec);
    const auto b = sample_design_and_response(spec);
    EXPECT_EQ(a.X, b.X);
    EXPECT_EQ(a.y, b.y);
    ASSERT_TRUE(a.graph.has_value());
    EXPECT_EQ(*a.graph, design_graph(spec));
    spec.seed = 9;
    EXPECT_FALSE(sample_design_and_response(spec).X == a.X);
}

TEST(Sample, LogisticLabels)
{
    DesignSpec spec;
    spec.response = LossKind::logistic;
    spec.seed = 2;
    const auto d = sample_design_and_response(spec);
    for (double v : d.y) EXPECT_TRUE(v == 0.0 || v == 1.0);
    EXPECT_GT(d.y.sum(), 20.0);
    EXPECT_LT(d.y.sum(), 180.0);
}

TEST(SymmetricSqrt, ClampsAndSquares)
{
    Eigen::MatrixXd S = Eigen::MatrixXd::Constant(4, 4, 1.0);
    const Eigen::MatrixXd R = symmetric_sqrt(S);
    EXPECT_LT((R * R - S).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((R - R.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}
