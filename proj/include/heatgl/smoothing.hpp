#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include <heatgl/graph.hpp>

namespace heatgl {

/// A linear operator K on functions over the p vertices, accessed the way the
/// optimizers need it: whole-vector products, single rows, and the set of
/// vertices a row reads from. Implementations are immutable after construction
/// and safe to share across threads.
class SmoothingOperator
{
public:
    virtual ~SmoothingOperator() = default;

    virtual std::size_t size() const noexcept = 0;

    /// out = K f
    virtual void apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const = 0;

    /// (K f)_i, reading f only at support(i).
    virtual double apply_at(const Eigen::VectorXd& f, Vertex i) const = 0;

    /// Vertices read by apply_at(., i); may contain repeats.
    virtual void support(Vertex i, std::vector<Vertex>& out) const = 0;

    /// Random-walk jumps spent building the operator (0 for deterministic ones).
    virtual std::uint64_t walk_steps() const noexcept { return 0; }

    Eigen::VectorXd apply(const Eigen::VectorXd& f) const
    {
        Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
        apply(f, out);
        return out;
    }
};

/// Dense matrix operator; carries the exact heat kernel in oracle comparisons.
class DenseKernel final : public SmoothingOperator
{
public:
    explicit DenseKernel(Eigen::MatrixXd kernel);

    std::size_t size() const noexcept override { return static_cast<std::size_t>(kernel_.rows()); }
    void apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const override;
    double apply_at(const Eigen::VectorXd& f, Vertex i) const override;
    void support(Vertex i, std::vector<Vertex>& out) const override;

    const Eigen::MatrixXd& matrix() const noexcept { return kernel_; }

private:
    Eigen::MatrixXd kernel_;
};

} // namespace heatgl
