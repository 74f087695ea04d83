#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include <heatgl/graph.hpp>
#include <heatgl/optimize.hpp>
#include <heatgl/penalty.hpp>

namespace heatgl {

enum class DesignKind { block_equicorr, gff, sbm_cov };

std::string_view to_string(DesignKind kind) noexcept;
DesignKind parse_design_kind(std::string_view name);

struct BetaScheme
{
    enum class Kind { uniform, zero };
    Kind kind = Kind::zero;
    double lo = 0.0;
    double hi = 0.0;

    static BetaScheme uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
    static BetaScheme zero() { return {}; }
};

/// Default per-group coefficients: U(0.5, 0.7), 0, U(-0.7, -0.5), 0, repeating
/// the four-group pattern when k is not 4.
std::vector<BetaScheme> default_beta_schemes(std::size_t k);

struct DesignSpec
{
    DesignKind kind = DesignKind::block_equicorr;
    std::vector<std::size_t> sizes{16, 24, 40, 20};
    std::vector<double> rho{0.6, 0.9, 0.7, 0.4}; // block_equicorr, one per group
    std::optional<double> mass;                  // gff; absent picks default_gff_mass
    double a = 0.5;                              // gff graph and sbm_cov
    double b = 0.01;
    std::size_t n = 200;
    double noise_sigma = 0.5;
    std::vector<BetaScheme> beta; // empty picks default_beta_schemes
    LossKind response = LossKind::squared_error;
    std::uint64_t seed = 0;

    std::size_t p() const noexcept;
    void validate() const;
};

/// Group sizes summing to p from relative sizes (largest-remainder rounding).
std::vector<std::size_t> sizes_from_fractions(std::size_t p, std::span<const double> fractions);

/// Seed of the SBM graph drawn for gff designs when none is supplied.
std::uint64_t design_graph_seed(std::uint64_t seed) noexcept;

/// The SBM graph a gff design uses when no graph is supplied.
Graph design_graph(const DesignSpec& spec);

/// block_equicorr: block-diag((1-rho_i) I + rho_i 11^T); gff: (L + theta I)^{-1};
/// sbm_cov: I + P with a on within-block off-diagonals and b across blocks.
Eigen::MatrixXd make_covariance(const DesignSpec& spec, const Graph* g = nullptr);

/// The eigenvalue with 0-based index k of the graph Laplacian, required > 0.
double default_gff_mass(const Graph& g, std::size_t k, std::size_t dense_limit = default_dense_limit);

struct Dataset
{
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::VectorXd beta_star;
    GroupStructure groups;
    Eigen::MatrixXd sigma;
    std::optional<Graph> graph; // set for gff designs
};

/// Rows of X are iid N(0, Sigma), drawn through the symmetric square root of
/// Sigma; y = X beta* + sigma * noise, or Bernoulli(logistic(X beta*)).
Dataset sample_design_and_response(const DesignSpec& spec, const Graph* g = nullptr);

/// Symmetric PSD square root via eigendecomposition, negative eigenvalues clamped to 0.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& sigma);

} // namespace heatgl
