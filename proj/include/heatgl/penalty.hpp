#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include <heatgl/graph.hpp>
#include <heatgl/smoothing.hpp>

namespace heatgl {

/// Partition of [p] into k groups. Labels are 0-based here; the JSON and CSV
/// surfaces write them 1-based.
class GroupStructure
{
public:
    GroupStructure() = default;

    /// Labels must use every value in 0..k-1.
    explicit GroupStructure(std::vector<std::uint32_t> labels);

    /// Contiguous blocks: the first sizes[0] indices form group 0, and so on.
    static GroupStructure from_sizes(std::span<const std::size_t> sizes);
    static GroupStructure from_components(const Graph& g);

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t group_count() const noexcept { return members_.size(); }
    std::uint32_t label(std::size_t i) const { return labels_.at(i); }
    const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }
    std::span<const Vertex> members(std::size_t group) const { return members_.at(group); }
    std::size_t group_size(std::size_t group) const { return members_.at(group).size(); }
    std::vector<std::size_t> sizes() const;
    std::size_t max_group_size() const noexcept;

    /// Groups with nonzero norm, A(beta).
    std::vector<std::size_t> active_groups(const Eigen::VectorXd& beta) const;

private:
    std::vector<std::uint32_t> labels_;
    std::vector<std::vector<Vertex>> members_;
};

/// Within-group averaging, (K f)_i = mean of f over the group of i. This is the
/// infinite-time heat kernel of a graph whose components are the groups, so
/// plugging it into the heat-flow penalty gives the group lasso penalty.
class GroupAverager final : public SmoothingOperator
{
public:
    explicit GroupAverager(GroupStructure groups);

    std::size_t size() const noexcept override { return groups_.size(); }
    void apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const override;
    double apply_at(const Eigen::VectorXd& f, Vertex i) const override;
    void support(Vertex i, std::vector<Vertex>& out) const override;
    using SmoothingOperator::apply;

    const GroupStructure& groups() const noexcept { return groups_; }

private:
    GroupStructure groups_;
};

inline constexpr double default_eps_den = 1e-8;

/// sum_j sqrt|h_j| with h = K (beta * beta); entries with |h_j| < eps_abs count as 0.
double penalty_value(const Eigen::VectorXd& beta, const SmoothingOperator& op, double eps_abs = 0.0);

/// sum_l sqrt|C_l| * ||beta_{C_l}||_2
double group_lasso_penalty(const Eigen::VectorXd& beta, const GroupStructure& groups);

/// zeta_j = sgn(h_j) / max(sqrt|h_j|, eps_den), h as above; returns (K zeta) * beta.
Eigen::VectorXd penalty_subgradient(const Eigen::VectorXd& beta,
                                    const SmoothingOperator& op,
                                    double eps_den = default_eps_den);

/// zeta(h) elementwise, shared by the optimizers.
Eigen::VectorXd penalty_zeta(const Eigen::VectorXd& h, double eps_den);

struct GapBound
{
    double G = 0.0;         // (p - k) exp(-t lambda_g) ||beta^2||_2
    double value = 0.0;     // p * sqrt(G)
    bool precondition = false; // G <= (1/2) min over active groups of ||beta_C||^2 / |C|
};

/// Bound on |Lambda_t(beta) - GL(beta)| for a graph whose components are `groups`.
GapBound penalty_gap_bound(const Eigen::VectorXd& beta,
                           double t,
                           const LaplacianSpectrum& spectrum,
                           const GroupStructure& groups);

} // namespace heatgl
