#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <heatgl/graph.hpp>
#include <heatgl/smoothing.hpp>

namespace heatgl {

struct WalkOptions
{
    /// Hold for Exponential(1) regardless of degree, as a literal reading of the
    /// simulation pseudocode does. That walk has generator D^{-1}A - I, not -L;
    /// for comparison runs only.
    bool unit_rate_holding = false;
    unsigned threads = 1;
};

/// Terminal vertices of B continuous-time random walks per start vertex, run
/// for time t. Row i holds the walks started at i.
class HeatFlowMatrix final : public SmoothingOperator
{
public:
    HeatFlowMatrix() = default;
    HeatFlowMatrix(std::size_t p,
                   std::size_t walks,
                   double t,
                   std::uint64_t seed,
                   std::vector<Vertex> terminals,
                   std::vector<std::uint32_t> step_counts = {});

    std::size_t size() const noexcept override { return p_; }
    std::size_t walks() const noexcept { return walks_; }
    double time() const noexcept { return t_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::span<const Vertex> terminals(Vertex i) const;
    const std::vector<Vertex>& terminal_table() const noexcept { return terminals_; }

    /// Jump counts, parallel to terminals; empty for matrices loaded from disk.
    bool has_step_counts() const noexcept { return !steps_.empty(); }
    std::span<const std::uint32_t> step_counts(Vertex i) const;
    std::uint64_t walk_steps() const noexcept override { return total_steps_; }
    double mean_steps_per_walk() const noexcept;

    void apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const override;
    double apply_at(const Eigen::VectorXd& f, Vertex i) const override;
    void support(Vertex i, std::vector<Vertex>& out) const override;
    using SmoothingOperator::apply;

    /// Binary layout, little-endian: "HFM1", p (u64), B (u64), t (f64), seed (u64),
    /// then p*B terminals (u32) row-major.
    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;
    static HeatFlowMatrix load(std::istream& in);
    static HeatFlowMatrix load_file(const std::string& path);

    bool operator==(const HeatFlowMatrix& other) const
    {
        return p_ == other.p_ && walks_ == other.walks_ && t_ == other.t_ && seed_ == other.seed_ &&
               terminals_ == other.terminals_;
    }

private:
    std::size_t p_ = 0;
    std::size_t walks_ = 0;
    double t_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<Vertex> terminals_;
    std::vector<std::uint32_t> steps_;
    std::uint64_t total_steps_ = 0;
};

/// Runs B walks from every vertex. Each walk holds at v for an
/// Exponential(deg v) time (forever when deg v = 0), then jumps to a uniform
/// neighbour; the walk from i with index j draws from its own stream keyed by
/// (seed, i, j), so the result does not depend on the thread count.
HeatFlowMatrix simulate_heat_flow(const Graph& g,
                                  double t,
                                  std::size_t walks,
                                  std::uint64_t seed,
                                  const WalkOptions& options = {});

/// (1/B) sum_j f[H_ij] for each i in S.
std::vector<double> heatflow_apply(const HeatFlowMatrix& H,
                                   const Eigen::VectorXd& f,
                                   std::span<const Vertex> S);

/// sum_i exp(-t lambda_i) v_i v_i^T.
Eigen::MatrixXd exact_heat_kernel(const LaplacianSpectrum& spectrum, double t);
Eigen::MatrixXd exact_heat_kernel(const Graph& g, double t, std::size_t dense_limit = default_dense_limit);

} // namespace heatgl
