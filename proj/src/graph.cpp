#include <heatgl/graph.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <heatgl/error.hpp>

namespace heatgl {

Graph::Graph(std::size_t p, bool allow_self_loops)
    : neighbors_(p), allow_self_loops_(allow_self_loops)
{
    if (p >= static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
        throw Error(Errc::dimension_too_large, "vertex count must be below 2^31");
    }
}

Graph Graph::from_edges(std::size_t p, std::span<const Edge> edges, bool allow_self_loops)
{
    Graph g(p, allow_self_loops);
    for (auto [u, v] : edges) {
        if (u >= p || v >= p) {
            throw Error(Errc::index_out_of_range,
                        "edge (" + std::to_string(u) + ", " + std::to_string(v) + ") outside p = " +
                            std::to_string(p));
        }
        if (u == v) {
            if (!allow_self_loops) {
                throw Error(Errc::invalid_argument, "self-loop at vertex " + std::to_string(u));
            }
            g.neighbors_[u].push_back(u);
            continue;
        }
        g.neighbors_[u].push_back(v);
        g.neighbors_[v].push_back(u);
    }
    for (auto& list : g.neighbors_) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return g;
}

Graph Graph::from_adjacency(const Eigen::MatrixXd& adjacency, bool allow_self_loops)
{
    if (adjacency.rows() != adjacency.cols()) {
        throw Error(Errc::shape_mismatch, "adjacency matrix must be square");
    }
    const auto p = static_cast<std::size_t>(adjacency.rows());
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            const bool a = adjacency(i, j) != 0.0;
            if (a != (adjacency(j, i) != 0.0)) {
                throw Error(Errc::invalid_argument, "adjacency matrix is not symmetric");
            }
            if (a && (i != j || allow_self_loops)) {
                edges.emplace_back(static_cast<Vertex>(i), static_cast<Vertex>(j));
            }
        }
    }
    return from_edges(p, edges, allow_self_loops);
}

std::size_t Graph::max_degree() const noexcept
{
    std::size_t d = 0;
    for (const auto& list : neighbors_) d = std::max(d, list.size());
    return d;
}

std::size_t Graph::min_degree() const noexcept
{
    if (neighbors_.empty()) return 0;
    std::size_t d = std::numeric_limits<std::size_t>::max();
    for (const auto& list : neighbors_) d = std::min(d, list.size());
    return d;
}

std::size_t Graph::edge_count() const noexcept
{
    std::size_t twice = 0;
    std::size_t loops = 0;
    for (std::size_t v = 0; v < neighbors_.size(); ++v) {
        twice += neighbors_[v].size();
        loops += std::binary_search(neighbors_[v].begin(), neighbors_[v].end(), static_cast<Vertex>(v));
    }
    return (twice + loops) / 2;
}

bool Graph::has_edge(Vertex u, Vertex v) const
{
    const auto& list = neighbors_.at(u);
    return std::binary_search(list.begin(), list.end(), v);
}

std::vector<Edge> Graph::edges() const
{
    std::vector<Edge> out;
    for (std::size_t u = 0; u < neighbors_.size(); ++u) {
        for (Vertex v : neighbors_[u]) {
            if (v >= u) out.emplace_back(static_cast<Vertex>(u), v);
        }
    }
    return out;
}

Graph Graph::induced(std::span<const Vertex> vertices) const
{
    std::vector<std::int64_t> index(size(), -1);
    for (std::size_t k = 0; k < vertices.size(); ++k) index.at(vertices[k]) = static_cast<std::int64_t>(k);
    std::vector<Edge> sub;
    for (auto [u, v] : edges()) {
        if (index[u] >= 0 && index[v] >= 0) {
            sub.emplace_back(static_cast<Vertex>(index[u]), static_cast<Vertex>(index[v]));
        }
    }
    return from_edges(vertices.size(), sub, allow_self_loops_);
}

Graph Graph::permuted(std::span<const Vertex> perm) const
{
    if (perm.size() != size()) throw Error(Errc::length_mismatch, "permutation length differs from p");
    std::vector<Edge> moved;
    for (auto [u, v] : edges()) moved.emplace_back(perm[u], perm[v]);
    return from_edges(size(), moved, allow_self_loops_);
}

Eigen::MatrixXd laplacian(const Graph& g)
{
    const auto p = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        std::int64_t diag = static_cast<std::int64_t>(g.degree(static_cast<Vertex>(i)));
        for (Vertex j : g.neighbors(static_cast<Vertex>(i))) {
            if (j == i) {
                --diag;
            } else {
                L(i, j) = -1.0;
            }
        }
        L(i, i) = static_cast<double>(diag);
    }
    return L;
}

Eigen::MatrixXd adjacency_matrix(const Graph& g)
{
    const auto p = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Vertex j : g.neighbors(static_cast<Vertex>(i))) A(i, j) = 1.0;
    }
    return A;
}

namespace {

struct DisjointSets
{
    std::vector<std::uint32_t> parent;
    std::vector<std::uint32_t> rank;

    explicit DisjointSets(std::size_t n) : parent(n), rank(n, 0)
    {
        std::iota(parent.begin(), parent.end(), 0u);
    }

    std::uint32_t find(std::uint32_t x)
    {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(std::uint32_t a, std::uint32_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank[a] < rank[b]) std::swap(a, b);
        parent[b] = a;
        if (rank[a] == rank[b]) ++rank[a];
    }
};

void check_dense_limit(std::size_t p, std::size_t limit)
{
    if (p > limit) {
        throw Error(Errc::dimension_too_large,
                    "p = " + std::to_string(p) + " exceeds the dense oracle limit " + std::to_string(limit));
    }
}

} // namespace

Components connected_components(const Graph& g)
{
    DisjointSets sets(g.size());
    for (auto [u, v] : g.edges()) sets.unite(u, v);

    Components out;
    out.label.assign(g.size(), 0);
    std::vector<std::int64_t> root_label(g.size(), -1);
    for (std::uint32_t v = 0; v < g.size(); ++v) {
        const auto r = sets.find(v);
        if (root_label[r] < 0) root_label[r] = static_cast<std::int64_t>(out.count++);
        out.label[v] = static_cast<std::uint32_t>(root_label[r]);
    }
    return out;
}

std::optional<double> LaplacianSpectrum::spectral_gap() const
{
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        if (eigenvalues[i] > zero_tolerance) return eigenvalues[i];
    }
    return std::nullopt;
}

LaplacianSpectrum spectral_decompose(const Graph& g, const SpectralOptions& options)
{
    check_dense_limit(g.size(), options.dense_limit);
    LaplacianSpectrum out;
    out.zero_tolerance = options.zero_tolerance;
    if (g.size() == 0) return out;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian(g));
    if (solver.info() != Eigen::Success) {
        throw Error(Errc::invalid_argument, "Laplacian eigendecomposition failed");
    }
    out.eigenvalues = solver.eigenvalues();
    out.eigenvectors = solver.eigenvectors();
    for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i) {
        if (std::abs(out.eigenvalues[i]) <= options.zero_tolerance) ++out.zero_multiplicity;
    }
    return out;
}

double nearest_rank_quantile(std::vector<double> values, double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(Errc::invalid_quantile, "quantile level must lie in (0, 1)");
    }
    if (values.empty()) throw Error(Errc::invalid_argument, "quantile of an empty set");
    const auto m = values.size();
    auto rank = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(m)));
    rank = std::clamp<std::size_t>(rank, 1, m);
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
    return values[rank - 1];
}

Graph estimate_graph(const Eigen::MatrixXd& corr, double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(Errc::invalid_quantile, "quantile level must lie in (0, 1)");
    }
    if (corr.rows() != corr.cols()) throw Error(Errc::shape_mismatch, "correlation matrix must be square");
    const auto p = static_cast<std::size_t>(corr.rows());
    for (std::size_t i = 0; i < p; ++i) {
        if (std::abs(corr(i, i) - 1.0) > 1e-8) {
            throw Error(Errc::not_a_correlation, "diagonal entry " + std::to_string(i) + " is not 1");
        }
        for (std::size_t j = i + 1; j < p; ++j) {
            if (std::abs(corr(i, j)) > 1.0 + 1e-12 || std::abs(corr(i, j) - corr(j, i)) > 1e-12) {
                throw Error(Errc::not_a_correlation,
                            "entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                ") is out of range or asymmetric");
            }
        }
    }
    if (p < 2) return Graph(p);

    std::vector<double> magnitudes;
    magnitudes.reserve(p * (p - 1) / 2);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) magnitudes.push_back(std::abs(corr(i, j)));
    }
    const double theta = nearest_rank_quantile(magnitudes, alpha);

    std::vector<Edge> edges;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            if (std::abs(corr(i, j)) > theta) edges.emplace_back(static_cast<Vertex>(i), static_cast<Vertex>(j));
        }
    }
    return Graph::from_edges(p, edges);
}

Eigen::MatrixXd sample_correlation(const Eigen::MatrixXd& X)
{
    if (X.rows() < 2) throw Error(Errc::shape_mismatch, "correlation needs at least two rows");
    const Eigen::MatrixXd centered = X.rowwise() - X.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered;
    const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    const auto p = cov.rows();
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i + 1; j < p; ++j) {
            double r = 0.0;
            if (sd[i] > 0.0 && sd[j] > 0.0) r = std::clamp(cov(i, j) / (sd[i] * sd[j]), -1.0, 1.0);
            corr(i, j) = corr(j, i) = r;
        }
    }
    return corr;
}

Graph sample_block_graph(std::span<const std::size_t> sizes,
                         double within,
                         double between,
                         bool self_loops,
                         std::uint64_t seed)
{
    auto valid = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!valid(within) || !valid(between)) {
        throw Error(Errc::invalid_probability, "connection probabilities must lie in [0, 1]");
    }
    if (between > within) {
        throw Error(Errc::invalid_probability, "between-block probability exceeds within-block probability");
    }
    std::vector<std::uint32_t> block;
    for (std::size_t b = 0; b < sizes.size(); ++b) {
        if (sizes[b] == 0) throw Error(Errc::invalid_argument, "block sizes must be positive");
        block.insert(block.end(), sizes[b], static_cast<std::uint32_t>(b));
    }
    const std::size_t p = block.size();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < p; ++i) {
        if (self_loops && unit(rng) < within) edges.emplace_back(static_cast<Vertex>(i), static_cast<Vertex>(i));
        for (std::size_t j = i + 1; j < p; ++j) {
            const double prob = block[i] == block[j] ? within : between;
            if (unit(rng) < prob) edges.emplace_back(static_cast<Vertex>(i), static_cast<Vertex>(j));
        }
    }
    return Graph::from_edges(p, edges, self_loops);
}

Graph read_edge_list(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> p;
    std::vector<Edge> edges;
    bool loops = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string first;
        if (!(fields >> first)) continue;
        if (!p) {
            std::size_t count = 0;
            if (first != "p" || !(fields >> count)) {
                throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": expected header \"p <count>\"");
            }
            p = count;
            continue;
        }
        long long u = 0, v = 0;
        std::istringstream pair(line);
        if (!(pair >> u >> v) || u < 0 || v < 0) {
            throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": expected \"i j\"");
        }
        if (static_cast<std::size_t>(u) >= *p || static_cast<std::size_t>(v) >= *p) {
            throw Error(Errc::index_out_of_range, "line " + std::to_string(line_no) + ": vertex outside [0, p)");
        }
        loops = loops || u == v;
        edges.emplace_back(static_cast<Vertex>(u), static_cast<Vertex>(v));
    }
    if (!p) throw Error(Errc::parse_error, "missing \"p <count>\" header");
    return Graph::from_edges(*p, edges, loops);
}

Graph read_edge_list_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    return read_edge_list(in);
}

void write_edge_list(std::ostream& out, const Graph& g)
{
    out << "p " << g.size() << '\n';
    for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

void write_edge_list_file(const std::string& path, const Graph& g)
{
    std::ofstream out(path);
    if (!out) throw Error(Errc::io_error, "cannot write " + path);
    write_edge_list(out, g);
}

} // namespace heatgl
