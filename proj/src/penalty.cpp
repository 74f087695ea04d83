#include <heatgl/penalty.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include <heatgl/error.hpp>

namespace heatgl {

GroupStructure::GroupStructure(std::vector<std::uint32_t> labels) : labels_(std::move(labels))
{
    std::uint32_t k = 0;
    for (auto l : labels_) k = std::max(k, l + 1);
    members_.resize(k);
    for (std::size_t i = 0; i < labels_.size(); ++i) members_[labels_[i]].push_back(static_cast<Vertex>(i));
    for (std::size_t g = 0; g < k; ++g) {
        if (members_[g].empty()) {
            throw Error(Errc::invalid_argument, "group labels are not contiguous: label " + std::to_string(g) + " unused");
        }
    }
}

GroupStructure GroupStructure::from_sizes(std::span<const std::size_t> sizes)
{
    std::vector<std::uint32_t> labels;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        if (sizes[g] == 0) throw Error(Errc::invalid_argument, "group sizes must be positive");
        labels.insert(labels.end(), sizes[g], static_cast<std::uint32_t>(g));
    }
    return GroupStructure(std::move(labels));
}

GroupStructure GroupStructure::from_components(const Graph& g)
{
    return GroupStructure(connected_components(g).label);
}

std::vector<std::size_t> GroupStructure::sizes() const
{
    std::vector<std::size_t> out;
    for (const auto& m : members_) out.push_back(m.size());
    return out;
}

std::size_t GroupStructure::max_group_size() const noexcept
{
    std::size_t best = 0;
    for (const auto& m : members_) best = std::max(best, m.size());
    return best;
}

std::vector<std::size_t> GroupStructure::active_groups(const Eigen::VectorXd& beta) const
{
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < members_.size(); ++g) {
        if (std::any_of(members_[g].begin(), members_[g].end(), [&](Vertex v) { return beta[v] != 0.0; })) {
            out.push_back(g);
        }
    }
    return out;
}

GroupAverager::GroupAverager(GroupStructure groups) : groups_(std::move(groups)) {}

void GroupAverager::apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const
{
    if (static_cast<std::size_t>(f.size()) != size()) throw Error(Errc::length_mismatch, "vector length differs from p");
    out.resize(f.size());
    for (std::size_t g = 0; g < groups_.group_count(); ++g) {
        const auto members = groups_.members(g);
        double mean = 0.0;
        for (Vertex v : members) mean += f[v];
        mean /= static_cast<double>(members.size());
        for (Vertex v : members) out[v] = mean;
    }
}

double GroupAverager::apply_at(const Eigen::VectorXd& f, Vertex i) const
{
    const auto members = groups_.members(groups_.label(i));
    double mean = 0.0;
    for (Vertex v : members) mean += f[v];
    return mean / static_cast<double>(members.size());
}

void GroupAverager::support(Vertex i, std::vector<Vertex>& out) const
{
    const auto members = groups_.members(groups_.label(i));
    out.assign(members.begin(), members.end());
}

namespace {

void check_length(const Eigen::VectorXd& beta, std::size_t p)
{
    if (static_cast<std::size_t>(beta.size()) != p) {
        throw Error(Errc::length_mismatch,
                    "beta has length " + std::to_string(beta.size()) + ", expected " + std::to_string(p));
    }
}

double sgn(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

} // namespace

double penalty_value(const Eigen::VectorXd& beta, const SmoothingOperator& op, double eps_abs)
{
    check_length(beta, op.size());
    const Eigen::VectorXd h = op.apply(beta.cwiseAbs2());
    double total = 0.0;
    for (Eigen::Index j = 0; j < h.size(); ++j) {
        const double a = std::abs(h[j]);
        if (a >= eps_abs) total += std::sqrt(a);
    }
    return total;
}

double group_lasso_penalty(const Eigen::VectorXd& beta, const GroupStructure& groups)
{
    check_length(beta, groups.size());
    double total = 0.0;
    for (std::size_t g = 0; g < groups.group_count(); ++g) {
        double sq = 0.0;
        for (Vertex v : groups.members(g)) sq += beta[v] * beta[v];
        total += std::sqrt(static_cast<double>(groups.group_size(g)) * sq);
    }
    return total;
}

Eigen::VectorXd penalty_zeta(const Eigen::VectorXd& h, double eps_den)
{
    Eigen::VectorXd zeta(h.size());
    for (Eigen::Index j = 0; j < h.size(); ++j) {
        zeta[j] = sgn(h[j]) / std::max(std::sqrt(std::abs(h[j])), eps_den);
    }
    return zeta;
}

Eigen::VectorXd penalty_subgradient(const Eigen::VectorXd& beta, const SmoothingOperator& op, double eps_den)
{
    check_length(beta, op.size());
    const Eigen::VectorXd h = op.apply(beta.cwiseAbs2());
    return op.apply(penalty_zeta(h, eps_den)).cwiseProduct(beta);
}

GapBound penalty_gap_bound(const Eigen::VectorXd& beta,
                           double t,
                           const LaplacianSpectrum& spectrum,
                           const GroupStructure& groups)
{
    const auto p = groups.size();
    check_length(beta, p);
    if (static_cast<std::size_t>(spectrum.eigenvalues.size()) != p) {
        throw Error(Errc::length_mismatch, "spectrum and groups disagree on p");
    }
    GapBound out;
    const auto gap = spectrum.spectral_gap();
    const auto k = groups.group_count();
    if (gap && p > k) {
        out.G = static_cast<double>(p - k) * std::exp(-t * *gap) * beta.cwiseAbs2().norm();
    }
    out.value = static_cast<double>(p) * std::sqrt(out.G);

    double min_ratio = std::numeric_limits<double>::infinity();
    for (auto g : groups.active_groups(beta)) {
        double sq = 0.0;
        for (Vertex v : groups.members(g)) sq += beta[v] * beta[v];
        min_ratio = std::min(min_ratio, sq / static_cast<double>(groups.group_size(g)));
    }
    out.precondition = out.G <= 0.5 * min_ratio;
    return out;
}

} // namespace heatgl
