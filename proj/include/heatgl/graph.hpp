#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace heatgl {

using Vertex = std::uint32_t;
using Edge = std::pair<Vertex, Vertex>;

inline constexpr std::size_t default_dense_limit = 2048;
inline constexpr double default_zero_tolerance = 1e-9;

/// Undirected 0/1 graph on p vertices stored as sorted adjacency lists.
///
/// A self-loop at v appears once in neighbors(v) and counts once toward
/// degree(v). Self-loops are rejected unless the graph allows them.
class Graph
{
public:
    Graph() = default;
    explicit Graph(std::size_t p, bool allow_self_loops = false);

    /// Builds a graph from an edge list; duplicate and reversed pairs collapse.
    static Graph from_edges(std::size_t p, std::span<const Edge> edges, bool allow_self_loops = false);

    /// Builds a graph from a symmetric 0/1 matrix (nonzero means adjacent).
    static Graph from_adjacency(const Eigen::MatrixXd& adjacency, bool allow_self_loops = false);

    std::size_t size() const noexcept { return neighbors_.size(); }
    bool allow_self_loops() const noexcept { return allow_self_loops_; }

    std::span<const Vertex> neighbors(Vertex v) const { return neighbors_.at(v); }
    std::size_t degree(Vertex v) const { return neighbors_.at(v).size(); }
    std::size_t max_degree() const noexcept;
    std::size_t min_degree() const noexcept;

    /// Number of unordered edges, self-loops included.
    std::size_t edge_count() const noexcept;
    bool has_edge(Vertex u, Vertex v) const;

    /// Unordered edges (u <= v) in lexicographic order.
    std::vector<Edge> edges() const;

    /// Induced subgraph on `vertices`, relabelled 0..|vertices|-1 in the given order.
    Graph induced(std::span<const Vertex> vertices) const;

    /// Same graph with vertex v renamed to perm[v].
    Graph permuted(std::span<const Vertex> perm) const;

    bool operator==(const Graph&) const = default;

private:
    std::vector<std::vector<Vertex>> neighbors_;
    bool allow_self_loops_ = false;
};

/// L = D - A. Entries are formed in integer arithmetic, so L * 1 == 0 exactly.
Eigen::MatrixXd laplacian(const Graph& g);
Eigen::MatrixXd adjacency_matrix(const Graph& g);

struct Components
{
    std::size_t count = 0;
    std::vector<std::uint32_t> label; // 0..count-1, ordered by smallest member
};

/// Union-find connected components.
Components connected_components(const Graph& g);

struct LaplacianSpectrum
{
    Eigen::VectorXd eigenvalues;  // nondecreasing
    Eigen::MatrixXd eigenvectors; // column i pairs with eigenvalues[i]
    std::size_t zero_multiplicity = 0;
    double zero_tolerance = default_zero_tolerance;

    /// Smallest eigenvalue above the zero tolerance; empty when none exists.
    std::optional<double> spectral_gap() const;
    double largest() const { return eigenvalues.size() ? eigenvalues[eigenvalues.size() - 1] : 0.0; }
};

struct SpectralOptions
{
    std::size_t dense_limit = default_dense_limit;
    double zero_tolerance = default_zero_tolerance;
};

/// Dense eigendecomposition of the Laplacian; verification oracle only.
LaplacianSpectrum spectral_decompose(const Graph& g, const SpectralOptions& options = {});

/// Type-1 (nearest-rank) quantile: the ceil(alpha * m)-th smallest of m values.
double nearest_rank_quantile(std::vector<double> values, double alpha);

/// Threshold |corr| at its nearest-rank alpha-quantile over i < j; edge iff |corr_ij| > theta.
Graph estimate_graph(const Eigen::MatrixXd& corr, double alpha);

/// Pearson correlation of the columns of X. Constant columns get zero off-diagonals.
Eigen::MatrixXd sample_correlation(const Eigen::MatrixXd& X);

/// Stochastic block model with contiguous blocks of the given sizes.
/// Pairs within a block are joined with probability `within`, across blocks with `between`.
/// With self_loops, each vertex also carries a loop with probability `within`.
Graph sample_block_graph(std::span<const std::size_t> sizes,
                         double within,
                         double between,
                         bool self_loops,
                         std::uint64_t seed);

/// Edge-list text format: header "p <count>", then one "i j" pair per line (0-based).
Graph read_edge_list(std::istream& in);
Graph read_edge_list_file(const std::string& path);
void write_edge_list(std::ostream& out, const Graph& g);
void write_edge_list_file(const std::string& path, const Graph& g);

} // namespace heatgl
