#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <heatgl/graph.hpp>
#include <heatgl/smoothing.hpp>

namespace heatgl {

enum class LossKind { squared_error, logistic };
enum class RateProtocol { constant, inv_sqrt };
enum class Optimizer { subgradient, block_cd };

std::string_view to_string(LossKind kind) noexcept;
std::string_view to_string(RateProtocol rate) noexcept;
std::string_view to_string(Optimizer method) noexcept;
LossKind parse_loss(std::string_view name);
RateProtocol parse_rate(std::string_view name);
Optimizer parse_optimizer(std::string_view name);

struct FitConfig
{
    double lambda = 0.1;
    double t = 1.0;
    std::size_t walks = 100;
    double alpha0 = 0.1;
    RateProtocol rate = RateProtocol::inv_sqrt;
    double eps_tol = 1e-6;
    std::size_t max_iters = 5000;
    /// Coordinates per block-CD iteration; 0 picks ceil(p / 4).
    std::size_t block_size = 0;
    double eps_den = 1e-8;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::squared_error;
    /// Smooth beta instead of beta*beta before multiplying by beta, i.e.
    /// h = K(beta) * beta. Reproduces a literal reading of the pseudocode.
    bool literal_heat_product = false;

    void validate(std::size_t p) const;
    double learning_rate(std::size_t iteration) const noexcept;
    std::size_t resolved_block_size(std::size_t p) const noexcept;
};

struct FitResult
{
    Eigen::VectorXd beta_hat;
    Eigen::VectorXd beta_thresholded;
    std::size_t iterations = 0;
    std::vector<double> objective_trace; // penalized loss at the start of each iteration
    bool converged = false;
    std::uint64_t total_walk_steps = 0;
};

/// Squared error: ((1/2n)||y - X beta||^2, (1/n) X^T (X beta - y)).
/// Logistic: mean negative log-likelihood with labels in {0, 1} and its gradient.
std::pair<double, Eigen::VectorXd> loss_and_grad(const Eigen::VectorXd& beta,
                                                 const Eigen::MatrixXd& X,
                                                 const Eigen::VectorXd& y,
                                                 LossKind kind);

/// Full-vector subgradient descent on L(beta) + lambda * Lambda_t(beta), where
/// the smoothing operator stands in for exp(-tL).
FitResult subgradient_descent(const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y,
                              const SmoothingOperator& op,
                              const FitConfig& cfg,
                              const Eigen::VectorXd* beta0 = nullptr);

/// Stochastic block coordinate descent: each iteration draws q coordinates
/// without replacement and evaluates only the heat-flow values they touch.
FitResult block_cd(const Eigen::MatrixXd& X,
                   const Eigen::VectorXd& y,
                   const SmoothingOperator& op,
                   const FitConfig& cfg,
                   const Eigen::VectorXd* beta0 = nullptr);

FitResult fit(Optimizer method,
              const Eigen::MatrixXd& X,
              const Eigen::VectorXd& y,
              const SmoothingOperator& op,
              const FitConfig& cfg,
              const Eigen::VectorXd* beta0 = nullptr);

/// Exact 1-D 2-means on |beta| over all sorted splits; the cluster with the
/// lower mean is zeroed. Constant |beta| is returned unchanged.
Eigen::VectorXd threshold_kmeans(const Eigen::VectorXd& beta);

/// Held-out loss: mean squared error, or mean logistic deviance.
double heldout_loss(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, LossKind kind);

struct CvCell
{
    double lambda = 0.0;
    double t = 0.0;
    double mean_loss = 0.0;
    std::vector<double> fold_losses;
};

struct CvResult
{
    double best_lambda = 0.0;
    double best_t = 0.0;
    double best_loss = 0.0;
    std::vector<CvCell> table; // t-major, then lambda, in grid order
};

using OperatorFactory = std::function<std::shared_ptr<const SmoothingOperator>(double t, std::size_t t_index)>;

/// K-fold cross-validation over the (lambda, t) grid. The factory is called once
/// per t; its operator is shared by every fold and lambda. Ties go to the
/// smaller lambda, then the smaller t.
CvResult cross_validate(const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y,
                        const OperatorFactory& make_operator,
                        std::span<const double> lambda_grid,
                        std::span<const double> t_grid,
                        std::size_t folds,
                        const FitConfig& cfg,
                        Optimizer method,
                        unsigned threads = 1);

/// Heat-flow CV: one simulated HeatFlowMatrix per t with cfg.walks walks.
CvResult cross_validate(const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y,
                        const Graph& g,
                        std::span<const double> lambda_grid,
                        std::span<const double> t_grid,
                        std::size_t folds,
                        const FitConfig& cfg,
                        Optimizer method,
                        unsigned threads = 1);

/// Seed of the HeatFlowMatrix that cross_validate simulates for grid entry t_index.
std::uint64_t heat_flow_seed(std::uint64_t base_seed, std::size_t t_index) noexcept;

} // namespace heatgl
