#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <heatgl/error.hpp>
#include <heatgl/heat_flow.hpp>
#include <heatgl/optimize.hpp>
#include <heatgl/penalty.hpp>

#include "oracles.hpp"

using namespace heatgl;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index n, Eigen::Index p, std::mt19937_64& rng)
{
    std::normal_distribution<double> z;
    Eigen::MatrixXd X(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) X(i, j) = z(rng);
    return X;
}

Eigen::VectorXd noisy_response(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta, double sigma, std::mt19937_64& rng)
{
    std::normal_distribution<double> z;
    Eigen::VectorXd y = X * beta;
    for (auto& v : y) v += sigma * z(rng);
    return y;
}

struct LeastSquaresProblem
{
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::VectorXd ols;
};

LeastSquaresProblem well_conditioned(std::mt19937_64& rng, Eigen::Index n = 100, Eigen::Index p = 10)
{
    LeastSquaresProblem pr;
    pr.X = gaussian(n, p, rng);
    Eigen::VectorXd beta(p);
    for (auto& b : beta) b = std::uniform_real_distribution<double>(-1, 1)(rng);
    pr.y = noisy_response(pr.X, beta, 0.5, rng);
    pr.ols = oracle::least_squares(pr.X, pr.y);
    return pr;
}

DenseKernel identity_kernel(std::size_t p)
{
    return DenseKernel(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)));
}

} // namespace

TEST(Loss, Examples)
{
    Eigen::MatrixXd X = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::Vector3d y(0.5, -1, 2);
    auto [l0, g0] = loss_and_grad(Eigen::Vector3d::Zero(), X, Eigen::Vector3d::Zero(), LossKind::squared_error);
    EXPECT_EQ(l0, 0.0);
    EXPECT_EQ(g0.norm(), 0.0);
    auto [l1, g1] = loss_and_grad(y, X, y, LossKind::squared_error);
    EXPECT_EQ(l1, 0.0);
    EXPECT_EQ(g1.norm(), 0.0);

    Eigen::MatrixXd X2(2, 1);
    X2 << 1, 1;
    auto [l2, g2] = loss_and_grad(Eigen::VectorXd::Constant(1, 2.0), X2, Eigen::Vector2d(1, 3), LossKind::squared_error);
    EXPECT_DOUBLE_EQ(l2, 0.5);
    EXPECT_DOUBLE_EQ(g2[0], 0.0);
}

TEST(Loss, LogisticValueAndGradient)
{
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd X = gaussian(30, 4, rng);
    Eigen::VectorXd y(30);
    for (auto& v : y) v = std::bernoulli_distribution(0.4)(rng) ? 1.0 : 0.0;
    const Eigen::Vector4d beta(0.3, -0.2, 0.5, 0.1);
    auto nll = [&](const Eigen::VectorXd& b) {
        double s = 0;
        for (Eigen::Index i = 0; i < 30; ++i) {
            const double eta = X.row(i).dot(b);
            s += std::log1p(std::exp(eta)) - y[i] * eta;
        }
        return s / 30.0;
    };
    auto [l, g] = loss_and_grad(beta, X, y, LossKind::logistic);
    EXPECT_NEAR(l, nll(beta), 1e-12);
    for (int j = 0; j < 4; ++j) {
        Eigen::VectorXd up = beta, down = beta;
        up[j] += 1e-6;
        down[j] -= 1e-6;
        EXPECT_NEAR(g[j], (nll(up) - nll(down)) / 2e-6, 1e-7);
    }
}

TEST(Loss, Errors)
{
    const Eigen::MatrixXd X = Eigen::MatrixXd::Identity(2, 2);
    try {
        loss_and_grad(Eigen::Vector3d::Zero(), X, Eigen::Vector2d::Zero(), LossKind::squared_error);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::shape_mismatch);
    }
    try {
        loss_and_grad(Eigen::Vector2d::Zero(), X, Eigen::Vector2d(1, 2), LossKind::logistic);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::label_domain);
    }
}

TEST(FitConfigTest, LearningRateAndBlockSize)
{
    FitConfig cfg;
    cfg.alpha0 = 0.4;
    EXPECT_DOUBLE_EQ(cfg.learning_rate(4), 0.2);
    cfg.rate = RateProtocol::constant;
    EXPECT_DOUBLE_EQ(cfg.learning_rate(9), 0.4);
    EXPECT_EQ(cfg.resolved_block_size(10), 3u);
    cfg.block_size = 11;
    EXPECT_THROW(cfg.validate(10), Error);
    cfg.block_size = 0;
    cfg.alpha0 = 0.0;
    EXPECT_THROW(cfg.validate(10), Error);
    EXPECT_EQ(parse_optimizer(to_string(Optimizer::block_cd)), Optimizer::block_cd);
    EXPECT_EQ(parse_loss("logistic"), LossKind::logistic);
    EXPECT_THROW(parse_rate("cubic"), Error);
}

TEST(Subgradient, ZeroPenaltyReachesLeastSquares)
{
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        const auto pr = well_conditioned(rng);
        FitConfig cfg;
        cfg.lambda = 0.0;
        cfg.alpha0 = 0.5;
        cfg.eps_tol = 1e-10;
        cfg.max_iters = 5000;
        const auto res = subgradient_descent(pr.X, pr.y, identity_kernel(10), cfg);
        EXPECT_LT((res.beta_hat - pr.ols).norm(), 1e-3);
        EXPECT_LE(res.iterations, cfg.max_iters);
        EXPECT_EQ(res.objective_trace.size(), res.iterations);
    }
}

TEST(BlockCd, ZeroPenaltyReachesLeastSquares)
{
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const auto pr = well_conditioned(rng);
        FitConfig cfg;
        cfg.lambda = 0.0;
        cfg.alpha0 = 0.5;
        cfg.eps_tol = 1e-12;
        cfg.max_iters = 20000;
        cfg.block_size = 1 + rep % 3;
        cfg.seed = static_cast<std::uint64_t>(rep);
        const auto res = block_cd(pr.X, pr.y, identity_kernel(10), cfg);
        EXPECT_LT((res.beta_hat - pr.ols).norm(), 1e-2) << "q = " << cfg.block_size;
    }
}

TEST(BlockCd, FullBlockMatchesSubgradientStep)
{
    std::mt19937_64 rng(4);
    const std::size_t p = 6;
    const auto e = oracle::random_edges(p, 0.5, rng);
    const auto H = simulate_heat_flow(Graph::from_edges(p, e), 1.0, 30, 5);
    const Eigen::MatrixXd X = gaussian(40, p, rng);
    Eigen::VectorXd beta0(p);
    for (auto& b : beta0) b = std::uniform_real_distribution<double>(0.2, 1)(rng);
    const Eigen::VectorXd y = noisy_response(X, beta0, 0.3, rng);
    FitConfig cfg;
    cfg.lambda = 0.2;
    cfg.block_size = p;
    cfg.max_iters = 1;
    const auto a = block_cd(X, y, H, cfg, &beta0);
    const auto b = subgradient_descent(X, y, H, cfg, &beta0);
    EXPECT_LT((a.beta_hat - b.beta_hat).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_DOUBLE_EQ(a.objective_trace[0], b.objective_trace[0]);
}

TEST(Subgradient, PairSingletonSupportRecovery)
{
    const std::vector<Edge> e{{0, 1}};
    const Graph g = Graph::from_edges(3, e);
    const Eigen::Vector3d beta_star(1, 1, 0);
    int hits = 0, exact_hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        const Eigen::MatrixXd X = gaussian(200, 3, rng);
        const Eigen::VectorXd y = noisy_response(X, beta_star, 0.1, rng);
        FitConfig cfg;
        cfg.lambda = 0.05;
        cfg.t = 3.0;
        cfg.seed = seed;
        const auto H = simulate_heat_flow(g, cfg.t, cfg.walks, seed);
        const auto res = subgradient_descent(X, y, H, cfg);
        hits += res.beta_thresholded[0] != 0 && res.beta_thresholded[1] != 0 && res.beta_thresholded[2] == 0;
        const auto exact = subgradient_descent(X, y, DenseKernel(exact_heat_kernel(g, cfg.t)), cfg);
        exact_hits += exact.beta_thresholded[0] != 0 && exact.beta_thresholded[1] != 0 && exact.beta_thresholded[2] == 0;
    }
    EXPECT_GE(hits, 95);
    EXPECT_GE(exact_hits, 95);
}

TEST(Optimizers, DeterministicForFixedSeed)
{
    std::mt19937_64 rng(5);
    const std::size_t p = 12;
    const Graph g = Graph::from_edges(p, oracle::random_edges(p, 0.3, rng));
    const Eigen::MatrixXd X = gaussian(50, p, rng);
    const Eigen::VectorXd y = noisy_response(X, Eigen::VectorXd::Ones(p), 0.3, rng);
    FitConfig cfg;
    cfg.lambda = 0.1;
    cfg.seed = 17;
    cfg.max_iters = 300;
    WalkOptions four;
    four.threads = 4;
    const auto H1 = simulate_heat_flow(g, 1.0, 50, 9);
    const auto H4 = simulate_heat_flow(g, 1.0, 50, 9, four);
    for (Optimizer m : {Optimizer::subgradient, Optimizer::block_cd}) {
        const auto a = fit(m, X, y, H1, cfg);
        const auto b = fit(m, X, y, H4, cfg);
        EXPECT_EQ(a.beta_hat, b.beta_hat);
        EXPECT_EQ(a.objective_trace, b.objective_trace);
        EXPECT_EQ(a.total_walk_steps, H1.walk_steps());
    }
}

TEST(Subgradient, EarlyObjectiveDecrease)
{
    std::mt19937_64 rng(6);
    int tested = 0;
    while (tested < 20) {
        const std::size_t p = 8;
        const auto e = oracle::random_edges(p, 0.4, rng);
        const Eigen::MatrixXd K = oracle::heat_kernel(p, e, 1.0);
        Eigen::VectorXd beta0(p);
        for (auto& b : beta0) b = std::uniform_real_distribution<double>(-1, 1)(rng);
        if ((K * beta0.cwiseAbs2()).minCoeff() < 0.01) continue;
        ++tested;
        const Eigen::MatrixXd X = gaussian(60, p, rng);
        const Eigen::VectorXd y = noisy_response(X, Eigen::VectorXd::Ones(p), 0.3, rng);
        FitConfig cfg;
        cfg.lambda = 0.1;
        cfg.alpha0 = 1e-3;
        cfg.rate = RateProtocol::constant;
        cfg.max_iters = 11;
        cfg.eps_tol = 0.0;
        const auto res = subgradient_descent(X, y, DenseKernel(K), cfg, &beta0);
        ASSERT_EQ(res.objective_trace.size(), 11u);
        for (std::size_t k = 1; k < 11; ++k) EXPECT_LT(res.objective_trace[k], res.objective_trace[k - 1]);
    }
}

TEST(Subgradient, ScalingInvariance)
{
    std::mt19937_64 rng(7);
    const auto pr = well_conditioned(rng, 80, 6);
    FitConfig cfg;
    cfg.lambda = 0.0;
    cfg.alpha0 = 0.5;
    cfg.eps_tol = 0.0;
    cfg.max_iters = 400;
    const auto base = subgradient_descent(pr.X, pr.y, identity_kernel(6), cfg);
    const double c = 4.0;
    const Eigen::VectorXd cy = c * pr.y;
    const auto scaled = subgradient_descent(pr.X, cy, identity_kernel(6), cfg);
    EXPECT_LT((scaled.beta_hat - c * base.beta_hat).norm(), 1e-10 * c * base.beta_hat.norm());
}

TEST(Subgradient, LiteralHeatProductDiffers)
{
    std::mt19937_64 rng(8);
    const std::size_t p = 6;
    const auto e = oracle::random_connected_edges(p, 0.3, rng);
    const DenseKernel K(oracle::heat_kernel(p, e, 1.0));
    const Eigen::MatrixXd X = gaussian(50, p, rng);
    Eigen::VectorXd bs(p);
    bs << 1, -1, 0.5, -0.5, 0, 0;
    const Eigen::VectorXd y = noisy_response(X, bs, 0.2, rng);
    FitConfig cfg;
    cfg.lambda = 0.2;
    cfg.max_iters = 50;
    const auto a = subgradient_descent(X, y, K, cfg);
    cfg.literal_heat_product = true;
    const auto b = subgradient_descent(X, y, K, cfg);
    EXPECT_GT((a.beta_hat - b.beta_hat).norm(), 1e-6);
}

TEST(Subgradient, DivergenceIsReported)
{
    std::mt19937_64 rng(9);
    const auto pr = well_conditioned(rng);
    FitConfig cfg;
    cfg.alpha0 = 1e6;
    cfg.rate = RateProtocol::constant;
    cfg.max_iters = 2000;
    try {
        subgradient_descent(pr.X, pr.y, identity_kernel(10), cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::non_finite_objective);
    }
    EXPECT_THROW(subgradient_descent(pr.X, pr.y, identity_kernel(9), cfg), Error);
}

TEST(Subgradient, LogisticFitRecoversSigns)
{
    std::mt19937_64 rng(10);
    const Eigen::MatrixXd X = gaussian(400, 4, rng);
    const Eigen::Vector4d beta(2, -2, 0, 0);
    Eigen::VectorXd y(400);
    for (Eigen::Index i = 0; i < 400; ++i) {
        const double prob = 1.0 / (1.0 + std::exp(-X.row(i).dot(beta)));
        y[i] = std::bernoulli_distribution(prob)(rng) ? 1.0 : 0.0;
    }
    FitConfig cfg;
    cfg.loss = LossKind::logistic;
    cfg.lambda = 0.01;
    cfg.alpha0 = 1.0;
    const auto res = subgradient_descent(X, y, identity_kernel(4), cfg);
    EXPECT_GT(res.beta_hat[0], 1.0);
    EXPECT_LT(res.beta_hat[1], -1.0);
    EXPECT_EQ(res.beta_thresholded[2], 0.0);
    EXPECT_EQ(res.beta_thresholded[3], 0.0);
}

TEST(Threshold, Examples)
{
    Eigen::Vector4d a(0.6, 0.01, -0.55, 0.02);
    EXPECT_EQ(threshold_kmeans(a), Eigen::Vector4d(0.6, 0, -0.55, 0));
    const Eigen::Vector3d flat(5, 5, 5);
    EXPECT_EQ(threshold_kmeans(flat), flat);
    const Eigen::Vector4d spike(1, 0, 0, 0);
    EXPECT_EQ(threshold_kmeans(spike), spike);
}

TEST(Threshold, MatchesExhaustivePartitions)
{
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 200; ++rep) {
        const auto p = static_cast<Eigen::Index>(2 + rep % 9);
        Eigen::VectorXd beta(p);
        for (auto& b : beta) b = std::normal_distribution<double>()(rng) * (std::bernoulli_distribution(0.5)(rng) ? 1.0 : 0.05);
        const auto best = oracle::exhaustive_two_means(beta);
        const Eigen::VectorXd out = threshold_kmeans(beta);
        for (Eigen::Index i = 0; i < p; ++i) {
            const bool zeroed = (best.low_mask >> i) & 1u;
            EXPECT_EQ(out[i], zeroed ? 0.0 : beta[i]) << "rep " << rep << " index " << i;
        }
    }
}

TEST(CrossValidate, SinglePointGrid)
{
    std::mt19937_64 rng(12);
    const std::size_t p = 5;
    const Graph g = Graph::from_edges(p, oracle::random_edges(p, 0.5, rng));
    const Eigen::MatrixXd X = gaussian(40, p, rng);
    const Eigen::VectorXd y = noisy_response(X, Eigen::VectorXd::Ones(p), 0.3, rng);
    FitConfig cfg;
    cfg.max_iters = 200;
    const std::vector<double> lam{0.07}, ts{1.5};
    const auto cv = cross_validate(X, y, g, lam, ts, 4, cfg, Optimizer::subgradient);
    EXPECT_EQ(cv.best_lambda, 0.07);
    EXPECT_EQ(cv.best_t, 1.5);
    ASSERT_EQ(cv.table.size(), 1u);
    EXPECT_EQ(cv.table[0].fold_losses.size(), 4u);
    EXPECT_EQ(cv.best_loss, cv.table[0].mean_loss);
}

TEST(CrossValidate, PrefersNoPenaltyOverHuge)
{
    std::mt19937_64 rng(13);
    const std::size_t p = 5;
    const Graph g = Graph::from_edges(p, oracle::random_edges(p, 0.5, rng));
    const Eigen::MatrixXd X = gaussian(60, p, rng);
    const Eigen::VectorXd y = noisy_response(X, Eigen::VectorXd::Ones(p), 0.3, rng);
    FitConfig cfg;
    cfg.alpha0 = 0.5;
    cfg.max_iters = 2000;
    const std::vector<double> lam{0.0, 1e6}, ts{1.0};
    const auto cv = cross_validate(X, y, g, lam, ts, 3, cfg, Optimizer::subgradient);
    EXPECT_EQ(cv.best_lambda, 0.0);
    EXPECT_LT(cv.table[0].mean_loss, cv.table[1].mean_loss);
}

TEST(CrossValidate, Errors)
{
    const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 2);
    const Eigen::VectorXd y = Eigen::VectorXd::Ones(3);
    const Graph g(2);
    const std::vector<double> one{1.0}, none;
    FitConfig cfg;
    try {
        cross_validate(X, y, g, none, one, 2, cfg, Optimizer::subgradient);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::grid_empty);
    }
    try {
        cross_validate(X, y, g, one, one, 5, cfg, Optimizer::subgradient);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::fold_too_small);
    }
}

TEST(CrossValidate, FactoryCalledOncePerTimeAndThreadInvariant)
{
    std::mt19937_64 rng(14);
    const std::size_t p = 6;
    const Graph g = Graph::from_edges(p, oracle::random_edges(p, 0.5, rng));
    const Eigen::MatrixXd X = gaussian(40, p, rng);
    const Eigen::VectorXd y = noisy_response(X, Eigen::VectorXd::Ones(p), 0.3, rng);
    FitConfig cfg;
    cfg.max_iters = 100;
    cfg.seed = 3;
    std::vector<std::size_t> calls;
    OperatorFactory factory = [&](double t, std::size_t ti) {
        calls.push_back(ti);
        return std::make_shared<HeatFlowMatrix>(simulate_heat_flow(g, t, cfg.walks, heat_flow_seed(cfg.seed, ti)));
    };
    const std::vector<double> lam{0.01, 0.1}, ts{0.5, 1, 2};
    const auto a = cross_validate(X, y, factory, lam, ts, 4, cfg, Optimizer::block_cd);
    EXPECT_EQ(calls, (std::vector<std::size_t>{0, 1, 2}));
    const auto b = cross_validate(X, y, g, lam, ts, 4, cfg, Optimizer::block_cd, 3);
    ASSERT_EQ(a.table.size(), 6u);
    for (std::size_t k = 0; k < 6; ++k) {
        EXPECT_EQ(a.table[k].mean_loss, b.table[k].mean_loss);
        EXPECT_EQ(a.table[k].t, ts[k / 2]);
        EXPECT_EQ(a.table[k].lambda, lam[k % 2]);
    }
    EXPECT_EQ(a.best_lambda, b.best_lambda);
    EXPECT_EQ(a.best_t, b.best_t);
}
