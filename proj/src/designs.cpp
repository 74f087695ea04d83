#include <heatgl/designs.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <heatgl/error.hpp>
#include <heatgl/random.hpp>

namespace heatgl {

std::string_view to_string(DesignKind kind) noexcept
{
    switch (kind) {
        case DesignKind::block_equicorr: return "block_equicorr";
        case DesignKind::gff: return "gff";
        case DesignKind::sbm_cov: return "sbm_cov";
    }
    return "block_equicorr";
}

DesignKind parse_design_kind(std::string_view name)
{
    if (name == "block_equicorr") return DesignKind::block_equicorr;
    if (name == "gff") return DesignKind::gff;
    if (name == "sbm_cov") return DesignKind::sbm_cov;
    throw Error(Errc::invalid_argument, "unknown design kind '" + std::string(name) + "'");
}

std::vector<BetaScheme> default_beta_schemes(std::size_t k)
{
    const BetaScheme pattern[] = {BetaScheme::uniform(0.5, 0.7), BetaScheme::zero(), BetaScheme::uniform(-0.7, -0.5),
                                  BetaScheme::zero()};
    std::vector<BetaScheme> out;
    for (std::size_t g = 0; g < k; ++g) out.push_back(pattern[g % 4]);
    return out;
}

std::size_t DesignSpec::p() const noexcept
{
    return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
}

void DesignSpec::validate() const
{
    auto fail = [](Errc code, const std::string& what) { throw Error(code, what); };
    if (sizes.empty()) fail(Errc::invalid_argument, "design needs at least one group");
    for (auto s : sizes) {
        if (s == 0) fail(Errc::invalid_argument, "group sizes must be positive");
    }
    if (n == 0) fail(Errc::invalid_argument, "sample size must be positive");
    if (!(noise_sigma >= 0.0)) fail(Errc::invalid_argument, "noise sigma must be >= 0");
    if (!beta.empty() && beta.size() != sizes.size()) fail(Errc::length_mismatch, "one beta scheme per group required");
    switch (kind) {
        case DesignKind::block_equicorr:
            if (rho.size() != sizes.size()) fail(Errc::length_mismatch, "one rho per group required");
            for (std::size_t g = 0; g < sizes.size(); ++g) {
                const double lower = sizes[g] > 1 ? -1.0 / static_cast<double>(sizes[g] - 1) : -1.0;
                if (!(rho[g] > lower && rho[g] < 1.0)) {
                    fail(Errc::not_positive_definite, "rho[" + std::to_string(g) + "] outside (-1/(T-1), 1)");
                }
            }
            break;
        case DesignKind::gff:
            if (mass && !(*mass > 0.0)) fail(Errc::not_positive_definite, "GFF mass must be positive");
            [[fallthrough]];
        case DesignKind::sbm_cov:
            if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0)) fail(Errc::invalid_probability, "a, b must lie in [0, 1]");
            if (b > a) fail(Errc::invalid_probability, "b must not exceed a");
            break;
    }
}

std::vector<std::size_t> sizes_from_fractions(std::size_t p, std::span<const double> fractions)
{
    const double total = std::accumulate(fractions.begin(), fractions.end(), 0.0);
    if (fractions.empty() || !(total > 0.0)) throw Error(Errc::invalid_argument, "fractions must be positive");
    std::vector<std::size_t> out(fractions.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t g = 0; g < fractions.size(); ++g) {
        const double exact = static_cast<double>(p) * fractions[g] / total;
        out[g] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        assigned += out[g];
        remainders.emplace_back(exact - static_cast<double>(out[g]), g);
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](auto& l, auto& r) { return l.first > r.first; });
    for (std::size_t k = 0; assigned < p; ++k, ++assigned) ++out[remainders[k % remainders.size()].second];
    return out;
}

std::uint64_t design_graph_seed(std::uint64_t seed) noexcept
{
    return derive_seed(seed, 0x6a7ULL);
}

Graph design_graph(const DesignSpec& spec)
{
    return sample_block_graph(spec.sizes, spec.a, spec.b, false, design_graph_seed(spec.seed));
}

double default_gff_mass(const Graph& g, std::size_t k, std::size_t dense_limit)
{
    SpectralOptions options;
    options.dense_limit = dense_limit;
    const auto spectrum = spectral_decompose(g, options);
    if (k >= static_cast<std::size_t>(spectrum.eigenvalues.size())) {
        throw Error(Errc::invalid_argument, "graph has fewer than k + 1 eigenvalues");
    }
    const double theta = spectrum.eigenvalues[static_cast<Eigen::Index>(k)];
    if (!(theta > spectrum.zero_tolerance)) {
        throw Error(Errc::not_positive_definite, "eigenvalue " + std::to_string(k) + " is zero; GFF mass must be positive");
    }
    return theta;
}

namespace {

void require_positive_definite(const Eigen::MatrixXd& sigma)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success || solver.eigenvalues()[0] <= 1e-10) {
        throw Error(Errc::not_positive_definite, "covariance is not positive definite");
    }
}

} // namespace

Eigen::MatrixXd make_covariance(const DesignSpec& spec, const Graph* g)
{
    spec.validate();
    const auto p = static_cast<Eigen::Index>(spec.p());
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(p, p);
    switch (spec.kind) {
        case DesignKind::block_equicorr: {
            Eigen::Index offset = 0;
            for (std::size_t g_idx = 0; g_idx < spec.sizes.size(); ++g_idx) {
                const auto T = static_cast<Eigen::Index>(spec.sizes[g_idx]);
                const double rho = spec.rho[g_idx];
                sigma.block(offset, offset, T, T).setConstant(rho);
                sigma.block(offset, offset, T, T).diagonal().setOnes();
                offset += T;
            }
            break;
        }
        case DesignKind::gff: {
            std::optional<Graph> sampled;
            if (!g) {
                sampled = design_graph(spec);
                g = &*sampled;
            }
            if (static_cast<Eigen::Index>(g->size()) != p) throw Error(Errc::shape_mismatch, "graph size differs from p");
            const double theta = spec.mass ? *spec.mass : default_gff_mass(*g, spec.sizes.size());
            if (!(theta > 0.0)) throw Error(Errc::not_positive_definite, "GFF mass must be positive");
            Eigen::MatrixXd precision = laplacian(*g);
            precision.diagonal().array() += theta;
            sigma = precision.llt().solve(Eigen::MatrixXd::Identity(p, p));
            sigma = 0.5 * (sigma + sigma.transpose());
            break;
        }
        case DesignKind::sbm_cov: {
            std::vector<std::size_t> block;
            for (std::size_t g_idx = 0; g_idx < spec.sizes.size(); ++g_idx) block.insert(block.end(), spec.sizes[g_idx], g_idx);
            for (Eigen::Index i = 0; i < p; ++i) {
                for (Eigen::Index j = 0; j < p; ++j) {
                    if (i == j) {
                        sigma(i, j) = 1.0;
                    } else {
                        sigma(i, j) = block[static_cast<std::size_t>(i)] == block[static_cast<std::size_t>(j)] ? spec.a : spec.b;
                    }
                }
            }
            break;
        }
    }
    require_positive_definite(sigma);
    return sigma;
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& sigma)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma);
    if (solver.info() != Eigen::Success) throw Error(Errc::invalid_argument, "eigendecomposition failed");
    const Eigen::VectorXd root = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return solver.eigenvectors() * root.asDiagonal() * solver.eigenvectors().transpose();
}

Dataset sample_design_and_response(const DesignSpec& spec, const Graph* g)
{
    spec.validate();
    Dataset out;
    if (spec.kind == DesignKind::gff) {
        out.graph = g ? *g : design_graph(spec);
        out.sigma = make_covariance(spec, &*out.graph);
    } else {
        out.sigma = make_covariance(spec, g);
    }
    out.groups = GroupStructure::from_sizes(spec.sizes);

    const auto p = static_cast<Eigen::Index>(spec.p());
    const auto n = static_cast<Eigen::Index>(spec.n);
    std::mt19937_64 rng(derive_seed(spec.seed, 0xd5ULL));
    std::normal_distribution<double> normal(0.0, 1.0);

    const auto schemes = spec.beta.empty() ? default_beta_schemes(spec.sizes.size()) : spec.beta;
    out.beta_star = Eigen::VectorXd::Zero(p);
    for (std::size_t g_idx = 0; g_idx < spec.sizes.size(); ++g_idx) {
        const auto& scheme = schemes[g_idx];
        if (scheme.kind == BetaScheme::Kind::zero) continue;
        std::uniform_real_distribution<double> draw(scheme.lo, scheme.hi);
        for (Vertex v : out.groups.members(g_idx)) out.beta_star[v] = draw(rng);
    }

    Eigen::MatrixXd Z(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) Z(i, j) = normal(rng);
    }
    out.X = Z * symmetric_sqrt(out.sigma);

    const Eigen::VectorXd signal = out.X * out.beta_star;
    out.y.resize(n);
    if (spec.response == LossKind::logistic) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (Eigen::Index i = 0; i < n; ++i) out.y[i] = unit(rng) < 1.0 / (1.0 + std::exp(-signal[i])) ? 1.0 : 0.0;
    } else {
        for (Eigen::Index i = 0; i < n; ++i) out.y[i] = signal[i] + spec.noise_sigma * normal(rng);
    }
    return out;
}

} // namespace heatgl
