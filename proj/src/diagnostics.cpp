#include <heatgl/diagnostics.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <heatgl/error.hpp>
#include <heatgl/random.hpp>

namespace heatgl {

MetricsReport evaluate_fit(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_star, const Eigen::MatrixXd& X)
{
    if (beta_hat.size() != beta_star.size() || X.cols() != beta_hat.size()) {
        throw Error(Errc::shape_mismatch, "beta_hat, beta_star and X columns must agree");
    }
    if (X.rows() == 0) throw Error(Errc::shape_mismatch, "empty design");
    MetricsReport out;
    const Eigen::VectorXd diff = beta_hat - beta_star;
    out.prediction_error = (X * diff).squaredNorm() / static_cast<double>(X.rows());
    out.estimation_error = diff.norm();

    std::size_t signal = 0, hit = 0, null = 0, kept = 0;
    for (Eigen::Index i = 0; i < beta_star.size(); ++i) {
        if (beta_star[i] != 0.0) {
            ++signal;
            hit += beta_hat[i] != 0.0;
        } else {
            ++null;
            kept += beta_hat[i] == 0.0;
        }
    }
    out.sensitivity = signal ? static_cast<double>(hit) / static_cast<double>(signal) : 1.0;
    out.specificity = null ? static_cast<double>(kept) / static_cast<double>(null) : 1.0;
    return out;
}

double lambda_lower_bound(const Eigen::MatrixXd& X, double sigma, double eta, const GroupStructure& groups)
{
    if (static_cast<std::size_t>(X.cols()) != groups.size()) throw Error(Errc::shape_mismatch, "groups differ from X columns");
    if (!(eta > 0.0 && eta < 1.0)) throw Error(Errc::invalid_argument, "eta must lie in (0, 1)");
    if (!(sigma >= 0.0)) throw Error(Errc::invalid_argument, "sigma must be >= 0");
    const double n = static_cast<double>(X.rows());
    double worst = 0.0;
    for (std::size_t g = 0; g < groups.group_count(); ++g) {
        const auto members = groups.members(g);
        Eigen::MatrixXd Xg(X.rows(), static_cast<Eigen::Index>(members.size()));
        for (std::size_t k = 0; k < members.size(); ++k) Xg.col(static_cast<Eigen::Index>(k)) = X.col(members[k]);
        const Eigen::MatrixXd psi = Xg.transpose() * Xg / n;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(psi, Eigen::EigenvaluesOnly);
        const double op_norm = std::max(solver.eigenvalues().maxCoeff(), 0.0);
        const double tail = std::sqrt(4.0 * std::log(1.0 / eta) / static_cast<double>(members.size()));
        worst = std::max(worst, std::sqrt(op_norm) * (1.0 + tail));
    }
    return sigma / std::sqrt(n) * worst;
}

namespace {

struct ConeProblem
{
    const Eigen::MatrixXd& M;
    const GroupStructure& groups;
    std::vector<bool> in_A;
    std::vector<double> weight; // sqrt |C_j|

    double group_norm(const Eigen::VectorXd& d, std::size_t g) const
    {
        double sq = 0.0;
        for (Vertex v : groups.members(g)) sq += d[v] * d[v];
        return std::sqrt(sq);
    }

    double budget(const Eigen::VectorXd& d) const
    {
        double total = 0.0;
        for (std::size_t g = 0; g < in_A.size(); ++g) {
            if (in_A[g]) total += weight[g] * group_norm(d, g);
        }
        return 3.0 * total;
    }

    double outside(const Eigen::VectorXd& d) const
    {
        double total = 0.0;
        for (std::size_t g = 0; g < in_A.size(); ++g) {
            if (!in_A[g]) total += weight[g] * group_norm(d, g);
        }
        return total;
    }

    double norm_A(const Eigen::VectorXd& d) const
    {
        double sq = 0.0;
        for (std::size_t g = 0; g < in_A.size(); ++g) {
            if (in_A[g]) sq += std::pow(group_norm(d, g), 2);
        }
        return std::sqrt(sq);
    }

    /// Scales the off-A part into the cone, then normalizes ||d_A|| = 1.
    /// Returns false when d_A vanishes.
    bool project(Eigen::VectorXd& d) const
    {
        const double a = norm_A(d);
        if (!(a > 1e-300)) return false;
        d /= a;
        const double cap = budget(d);
        const double out = outside(d);
        if (out > cap) {
            const double shrink = cap / out;
            for (std::size_t g = 0; g < in_A.size(); ++g) {
                if (in_A[g]) continue;
                for (Vertex v : groups.members(g)) d[v] *= shrink;
            }
        }
        return true;
    }

    double ratio(const Eigen::VectorXd& d) const { return std::sqrt(std::max(d.dot(M * d), 0.0)); }
};

} // namespace

ReEstimate brute_force_re(const Eigen::MatrixXd& M, const GroupStructure& groups, std::size_t s, const ReOptions& options)
{
    const auto p = groups.size();
    const auto k = groups.group_count();
    if (p > 12 || k > 5) throw Error(Errc::dimension_too_large, "brute-force RE is limited to p <= 12 and k <= 5");
    if (M.rows() != M.cols() || static_cast<std::size_t>(M.rows()) != p) throw Error(Errc::shape_mismatch, "M must be p x p");
    if (s == 0) throw Error(Errc::invalid_argument, "s must be >= 1");

    ReEstimate out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    out.certificate = std::sqrt(std::max(solver.eigenvalues().minCoeff(), 0.0));

    std::mt19937_64 rng(derive_seed(options.seed, 0x4eULL));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) > s) continue;
        ConeProblem cone{M, groups, std::vector<bool>(k), std::vector<double>(k)};
        for (std::size_t g = 0; g < k; ++g) {
            cone.in_A[g] = (mask >> g) & 1u;
            cone.weight[g] = std::sqrt(static_cast<double>(groups.group_size(g)));
        }

        Eigen::VectorXd d(static_cast<Eigen::Index>(p)), best_d;
        double subset_best = std::numeric_limits<double>::infinity();
        for (std::size_t sample = 0; sample < options.samples_per_subset; ++sample) {
            for (auto& x : d) x = normal(rng);
            if (!cone.project(d)) continue;
            // Spread the off-A mass over the whole cone, not only its boundary.
            const double cap = cone.budget(d);
            const double outside = cone.outside(d);
            if (outside > 0.0) {
                const double target = (sample % 2 == 0 ? 1.0 : unit(rng)) * cap;
                for (std::size_t g = 0; g < k; ++g) {
                    if (cone.in_A[g]) continue;
                    for (Vertex v : groups.members(g)) d[v] *= target / outside;
                }
            }
            const double r = cone.ratio(d);
            if (r < subset_best) {
                subset_best = r;
                best_d = d;
            }
        }
        if (best_d.size() == 0) continue;

        double step = 0.5;
        Eigen::VectorXd trial(static_cast<Eigen::Index>(p));
        for (std::size_t it = 0; it < options.refine_steps; ++it) {
            for (Eigen::Index j = 0; j < trial.size(); ++j) trial[j] = best_d[j] + step * normal(rng);
            if (cone.project(trial)) {
                const double r = cone.ratio(trial);
                if (r < subset_best) {
                    subset_best = r;
                    best_d = trial;
                    continue;
                }
            }
            step = std::max(step * 0.995, 1e-6);
        }
        best = std::min(best, subset_best);
    }
    out.kappa = std::max(best, 0.0);
    out.slack = out.kappa - out.certificate;
    return out;
}

FlowTime flow_time_prescription(const Graph& g, std::size_t n, std::optional<double> epsilon, std::size_t dense_limit)
{
    if (n == 0) throw Error(Errc::invalid_argument, "n must be positive");
    SpectralOptions options;
    options.dense_limit = dense_limit;
    const auto gap = spectral_decompose(g, options).spectral_gap();
    if (!gap) throw Error(Errc::invalid_argument, "graph has no nonzero Laplacian eigenvalue");
    const double log_p = std::log(static_cast<double>(g.size()));
    double scale = 0.0;
    if (epsilon) {
        if (!(*epsilon > 0.0)) throw Error(Errc::invalid_argument, "epsilon must be positive");
        scale = log_p + std::log(1.0 / *epsilon);
    } else {
        scale = std::max(std::log(static_cast<double>(n)), log_p);
    }
    FlowTime out;
    out.spectral_gap = *gap;
    out.t_flow = flow_time_constant * scale / *gap;
    out.n_step = static_cast<double>(g.max_degree()) * out.t_flow;
    return out;
}

bool SpectralBoundsReport::all_pass() const
{
    return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return !c.applicable || c.pass; });
}

double brute_force_conductance(const Graph& g)
{
    const auto p = g.size();
    if (p < 2) throw Error(Errc::invalid_argument, "conductance needs at least two vertices");
    if (p > 20) throw Error(Errc::dimension_too_large, "brute-force conductance is limited to p <= 20");
    const auto edges = g.edges();
    double best = std::numeric_limits<double>::infinity();
    // S and its complement give the same value, so fix vertex p-1 outside S.
    for (std::uint32_t mask = 1; mask < (1u << (p - 1)); ++mask) {
        double vol_s = 0.0, vol_c = 0.0, cut = 0.0;
        for (std::size_t v = 0; v < p; ++v) ((mask >> v) & 1u ? vol_s : vol_c) += static_cast<double>(g.degree(static_cast<Vertex>(v)));
        for (auto [u, v] : edges) cut += ((mask >> u) & 1u) != ((mask >> v) & 1u);
        const double denom = std::min(vol_s, vol_c);
        if (denom > 0.0) best = std::min(best, cut / denom);
    }
    return best;
}

double normalized_spectral_gap(const Graph& g)
{
    const auto p = static_cast<Eigen::Index>(g.size());
    Eigen::VectorXd inv_sqrt_deg(p);
    for (Eigen::Index v = 0; v < p; ++v) {
        const auto d = g.degree(static_cast<Vertex>(v));
        if (d == 0) throw Error(Errc::invalid_argument, "normalized Laplacian needs no isolated vertices");
        inv_sqrt_deg[v] = 1.0 / std::sqrt(static_cast<double>(d));
    }
    const Eigen::MatrixXd normalized = inv_sqrt_deg.asDiagonal() * laplacian(g) * inv_sqrt_deg.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(normalized, Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < p; ++i) {
        if (solver.eigenvalues()[i] > default_zero_tolerance) return solver.eigenvalues()[i];
    }
    return 0.0;
}

SpectralBoundsReport verify_spectral_bounds(const Graph& g, std::size_t dense_limit)
{
    SpectralOptions options;
    options.dense_limit = dense_limit;
    const auto spectrum = spectral_decompose(g, options);
    SpectralBoundsReport report;
    const double sigma_L = g.size() ? spectrum.largest() : 0.0;
    const double edges = static_cast<double>(g.edge_count());
    const double stanley = (std::sqrt(1.0 + 8.0 * edges) - 1.0) / 2.0;
    const double tol = 1e-9;

    BoundCheck degree_bound{"laplacian_max_le_2dmax", sigma_L, 2.0 * static_cast<double>(g.max_degree())};
    degree_bound.pass = degree_bound.lhs <= degree_bound.rhs + tol;
    report.checks.push_back(degree_bound);

    double sigma_A = 0.0;
    if (g.size()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> adj(adjacency_matrix(g), Eigen::EigenvaluesOnly);
        sigma_A = adj.eigenvalues().cwiseAbs().maxCoeff();
    }
    BoundCheck stanley_bound{"adjacency_max_le_stanley", sigma_A, stanley};
    stanley_bound.pass = stanley_bound.lhs <= stanley_bound.rhs + tol;
    report.checks.push_back(stanley_bound);

    // The same edge-count bound applied to L does not hold in general (K_5: 5 > 4); reported, not enforced.
    BoundCheck laplacian_stanley{"laplacian_max_le_stanley", sigma_L, stanley};
    laplacian_stanley.pass = laplacian_stanley.lhs <= laplacian_stanley.rhs + tol;
    laplacian_stanley.applicable = false;
    report.checks.push_back(laplacian_stanley);

    BoundCheck cheeger{"cheeger_normalized_gap", 0.0, 0.0};
    const bool connected = g.size() >= 2 && connected_components(g).count == 1;
    if (connected && g.size() <= 12) {
        const double phi = brute_force_conductance(g);
        cheeger.lhs = 0.5 * phi * phi;
        cheeger.rhs = normalized_spectral_gap(g);
        cheeger.pass = cheeger.lhs <= cheeger.rhs + tol;
    } else {
        cheeger.applicable = false;
    }
    report.checks.push_back(cheeger);
    return report;
}

} // namespace heatgl
