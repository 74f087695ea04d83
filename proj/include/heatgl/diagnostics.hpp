#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <heatgl/graph.hpp>
#include <heatgl/penalty.hpp>

namespace heatgl {

struct MetricsReport
{
    double prediction_error = 0.0; // (1/n) ||X (beta_hat - beta*)||^2
    double estimation_error = 0.0; // ||beta_hat - beta*||_2
    double sensitivity = 0.0;
    double specificity = 0.0;
};

/// Support is read with exact zeros. Sensitivity is 1 when beta* has no
/// nonzeros, and specificity is 1 when beta* has no zeros.
MetricsReport evaluate_fit(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_star, const Eigen::MatrixXd& X);

/// (sigma / sqrt n) * max_j sqrt(||X_j^T X_j / n||_op) * (1 + sqrt(4 log(1/eta) / |C_j|)).
double lambda_lower_bound(const Eigen::MatrixXd& X, double sigma, double eta, const GroupStructure& groups);

struct ReEstimate
{
    double kappa = 0.0;       // smallest ratio found; an upper estimate of kappa(s)
    double certificate = 0.0; // sqrt(lambda_min(M)), a proven lower bound on kappa(s)
    double slack = 0.0;       // kappa - certificate
};

struct ReOptions
{
    std::size_t samples_per_subset = 100000;
    std::size_t refine_steps = 2000;
    std::uint64_t seed = 0;
};

/// Restricted-eigenvalue constant
///   min sqrt(D^T M D) / ||D_A||  over |A| <= s and
///   sum_{j not in A} sqrt|C_j| ||D^j|| <= 3 sum_{j in A} sqrt|C_j| ||D^j||,
/// searched by random cone directions plus local refinement. Limited to p <= 12, k <= 5.
ReEstimate brute_force_re(const Eigen::MatrixXd& M, const GroupStructure& groups, std::size_t s, const ReOptions& options = {});

struct FlowTime
{
    double t_flow = 0.0;
    double n_step = 0.0; // d_max * t_flow
    double spectral_gap = 0.0;
};

inline constexpr double flow_time_constant = 3.0;

/// t = c * max(log n, log p) / lambda_g, or c * (log p + log(1/epsilon)) / lambda_g
/// when epsilon is given; c = flow_time_constant.
FlowTime flow_time_prescription(const Graph& g,
                                std::size_t n,
                                std::optional<double> epsilon = std::nullopt,
                                std::size_t dense_limit = default_dense_limit);

struct BoundCheck
{
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool applicable = true;
    bool pass = true;
    double slack() const { return rhs - lhs; }
};

struct SpectralBoundsReport
{
    std::vector<BoundCheck> checks;
    bool all_pass() const;
};

/// Conductance min over nonempty S != V of E(S, S^c) / min(vol S, vol S^c); p <= 20.
double brute_force_conductance(const Graph& g);

/// Smallest nonzero eigenvalue of D^{-1/2} L D^{-1/2} on a graph without isolated vertices.
double normalized_spectral_gap(const Graph& g);

/// Checks sigma_max(L) <= 2 d_max, sigma_max(A) <= (sqrt(1 + 8|E|) - 1)/2, and
/// (for connected graphs with p <= 12) gap(L*) >= conductance^2 / 2.
SpectralBoundsReport verify_spectral_bounds(const Graph& g, std::size_t dense_limit = default_dense_limit);

} // namespace heatgl
