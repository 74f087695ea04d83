#include <heatgl/optimize.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <heatgl/error.hpp>
#include <heatgl/heat_flow.hpp>
#include <heatgl/parallel.hpp>
#include <heatgl/penalty.hpp>
#include <heatgl/random.hpp>

namespace heatgl {

std::string_view to_string(LossKind kind) noexcept
{
    return kind == LossKind::logistic ? "logistic" : "squared";
}

std::string_view to_string(RateProtocol rate) noexcept
{
    return rate == RateProtocol::constant ? "constant" : "inv_sqrt";
}

std::string_view to_string(Optimizer method) noexcept
{
    return method == Optimizer::block_cd ? "cd" : "sd";
}

LossKind parse_loss(std::string_view name)
{
    if (name == "squared" || name == "squared_error") return LossKind::squared_error;
    if (name == "logistic") return LossKind::logistic;
    throw Error(Errc::invalid_argument, "unknown loss '" + std::string(name) + "'");
}

RateProtocol parse_rate(std::string_view name)
{
    if (name == "constant") return RateProtocol::constant;
    if (name == "inv_sqrt") return RateProtocol::inv_sqrt;
    throw Error(Errc::invalid_argument, "unknown learning-rate protocol '" + std::string(name) + "'");
}

Optimizer parse_optimizer(std::string_view name)
{
    if (name == "sd" || name == "subgradient") return Optimizer::subgradient;
    if (name == "cd" || name == "block_cd") return Optimizer::block_cd;
    throw Error(Errc::invalid_argument, "unknown optimizer '" + std::string(name) + "'");
}

void FitConfig::validate(std::size_t p) const
{
    auto fail = [](const std::string& what) { throw Error(Errc::invalid_argument, what); };
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must be finite and >= 0");
    if (!(t >= 0.0) || !std::isfinite(t)) fail("t must be finite and >= 0");
    if (walks == 0) fail("walks must be positive");
    if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) fail("alpha0 must be positive");
    if (!(eps_tol >= 0.0)) fail("eps_tol must be >= 0");
    if (max_iters == 0) fail("max_iters must be positive");
    if (block_size > p) fail("block_size exceeds p");
    if (!(eps_den > 0.0)) fail("eps_den must be positive");
}

double FitConfig::learning_rate(std::size_t iteration) const noexcept
{
    if (rate == RateProtocol::constant) return alpha0;
    return alpha0 / std::sqrt(static_cast<double>(std::max<std::size_t>(iteration, 1)));
}

std::size_t FitConfig::resolved_block_size(std::size_t p) const noexcept
{
    if (block_size != 0) return block_size;
    return std::max<std::size_t>(1, (p + 3) / 4);
}

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x)
{
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Loss as a function of the linear predictor eta = X beta.
class LossModel
{
public:
    LossModel(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, LossKind kind) : X_(X), y_(y), kind_(kind)
    {
        if (X.rows() != y.size()) {
            throw Error(Errc::shape_mismatch,
                        "X has " + std::to_string(X.rows()) + " rows but y has length " + std::to_string(y.size()));
        }
        if (X.rows() == 0) throw Error(Errc::shape_mismatch, "empty design");
        if (kind == LossKind::logistic) {
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                if (y[i] != 0.0 && y[i] != 1.0) {
                    throw Error(Errc::label_domain, "logistic labels must be 0 or 1 (row " + std::to_string(i) + ")");
                }
            }
        }
        inv_n_ = 1.0 / static_cast<double>(X.rows());
    }

    double value(const Eigen::VectorXd& eta) const
    {
        if (kind_ == LossKind::squared_error) return 0.5 * inv_n_ * (y_ - eta).squaredNorm();
        double total = 0.0;
        for (Eigen::Index i = 0; i < eta.size(); ++i) total += softplus(eta[i]) - y_[i] * eta[i];
        return total * inv_n_;
    }

    /// dLoss/deta scaled by n.
    void residual(const Eigen::VectorXd& eta, Eigen::VectorXd& r) const
    {
        if (kind_ == LossKind::squared_error) {
            r = eta - y_;
            return;
        }
        r.resize(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) r[i] = sigmoid(eta[i]) - y_[i];
    }

    double inv_n() const noexcept { return inv_n_; }
    const Eigen::MatrixXd& X() const noexcept { return X_; }

private:
    const Eigen::MatrixXd& X_;
    const Eigen::VectorXd& y_;
    LossKind kind_;
    double inv_n_ = 0.0;
};

void check_problem(const Eigen::MatrixXd& X, const SmoothingOperator& op, const FitConfig& cfg, const Eigen::VectorXd* beta0)
{
    const auto p = static_cast<std::size_t>(X.cols());
    if (op.size() != p) {
        throw Error(Errc::shape_mismatch,
                    "operator dimension " + std::to_string(op.size()) + " differs from X columns " + std::to_string(p));
    }
    if (beta0 && static_cast<std::size_t>(beta0->size()) != p) throw Error(Errc::shape_mismatch, "beta0 length differs from p");
    cfg.validate(p);
}

/// h = K(beta^2), or K(beta) * beta in literal mode.
void smooth_squares(const SmoothingOperator& op, const Eigen::VectorXd& beta, bool literal, Eigen::VectorXd& h)
{
    if (literal) {
        op.apply(beta, h);
        h.array() *= beta.array();
    } else {
        op.apply(beta.cwiseAbs2(), h);
    }
}

double sqrt_abs_sum(const Eigen::VectorXd& h) { return h.cwiseAbs().cwiseSqrt().sum(); }

void check_finite(double objective, std::size_t iteration)
{
    if (!std::isfinite(objective)) {
        throw Error(Errc::non_finite_objective,
                    "objective is not finite at iteration " + std::to_string(iteration) + "; reduce the learning rate");
    }
}

double safe_norm(double x) { return std::max(x, 1e-12); }

} // namespace

std::pair<double, Eigen::VectorXd> loss_and_grad(const Eigen::VectorXd& beta,
                                                 const Eigen::MatrixXd& X,
                                                 const Eigen::VectorXd& y,
                                                 LossKind kind)
{
    if (X.cols() != beta.size()) throw Error(Errc::shape_mismatch, "beta length differs from X columns");
    LossModel model(X, y, kind);
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd r;
    model.residual(eta, r);
    Eigen::VectorXd grad = model.inv_n() * (X.transpose() * r);
    return {model.value(eta), std::move(grad)};
}

FitResult subgradient_descent(const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y,
                              const SmoothingOperator& op,
                              const FitConfig& cfg,
                              const Eigen::VectorXd* beta0)
{
    check_problem(X, op, cfg, beta0);
    const LossModel model(X, y, cfg.loss);
    const auto p = X.cols();

    Eigen::VectorXd beta = beta0 ? *beta0 : Eigen::VectorXd::Zero(p);
    Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd r, h, smoothed_zeta, step(p);

    FitResult out;
    double reldiff = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (reldiff > cfg.eps_tol && i < cfg.max_iters) {
        ++i;
        model.residual(eta, r);
        smooth_squares(op, beta, cfg.literal_heat_product, h);
        const double objective = model.value(eta) + cfg.lambda * sqrt_abs_sum(h);
        check_finite(objective, i);
        out.objective_trace.push_back(objective);

        op.apply(penalty_zeta(h, cfg.eps_den), smoothed_zeta);
        step.noalias() = model.inv_n() * (X.transpose() * r);
        step += cfg.lambda * smoothed_zeta.cwiseProduct(beta);
        step *= -cfg.learning_rate(i);

        reldiff = step.norm() / safe_norm(beta.norm());
        beta += step;
        eta.noalias() += X * step;
    }
    if (!beta.allFinite()) throw Error(Errc::non_finite_objective, "iterate diverged; reduce the learning rate");
    out.iterations = i;
    out.converged = reldiff <= cfg.eps_tol;
    out.total_walk_steps = op.walk_steps();
    out.beta_thresholded = threshold_kmeans(beta);
    out.beta_hat = std::move(beta);
    return out;
}

FitResult block_cd(const Eigen::MatrixXd& X,
                   const Eigen::VectorXd& y,
                   const SmoothingOperator& op,
                   const FitConfig& cfg,
                   const Eigen::VectorXd* beta0)
{
    check_problem(X, op, cfg, beta0);
    const LossModel model(X, y, cfg.loss);
    const auto p = static_cast<std::size_t>(X.cols());
    const auto q = cfg.resolved_block_size(p);

    Eigen::VectorXd beta = beta0 ? *beta0 : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    Eigen::VectorXd squares = beta.cwiseAbs2();
    Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd r, h_full;

    // Per-iteration memo of h and zeta at the vertices the sampled rows read.
    Eigen::VectorXd zeta_memo = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    std::vector<std::size_t> stamp(p, 0);
    std::vector<Vertex> reach;

    std::vector<Vertex> order(p);
    std::iota(order.begin(), order.end(), Vertex{0});
    std::mt19937_64 rng(derive_seed(cfg.seed, 0xcdULL));

    std::vector<Vertex> block(q);
    Eigen::VectorXd delta(static_cast<Eigen::Index>(q));

    FitResult out;
    double reldiff = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (reldiff > cfg.eps_tol && i < cfg.max_iters) {
        ++i;
        model.residual(eta, r);
        smooth_squares(op, beta, cfg.literal_heat_product, h_full);
        const double objective = model.value(eta) + cfg.lambda * sqrt_abs_sum(h_full);
        check_finite(objective, i);
        out.objective_trace.push_back(objective);

        // Partial Fisher-Yates: the first q entries of `order` form a uniform q-subset.
        for (std::size_t k = 0; k < q; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, p - 1);
            std::swap(order[k], order[pick(rng)]);
            block[k] = order[k];
        }

        const double rate = cfg.learning_rate(i);
        double old_norm_sq = 0.0;
        for (std::size_t k = 0; k < q; ++k) {
            const Vertex j = block[k];
            op.support(j, reach);
            for (Vertex e : reach) {
                if (stamp[e] == i) continue;
                stamp[e] = i;
                const double h_e = cfg.literal_heat_product ? op.apply_at(beta, e) * beta[e] : op.apply_at(squares, e);
                const double mag = std::sqrt(std::abs(h_e));
                zeta_memo[e] = (h_e > 0.0 ? 1.0 : (h_e < 0.0 ? -1.0 : 0.0)) / std::max(mag, cfg.eps_den);
            }
            const double pen_grad = op.apply_at(zeta_memo, j) * beta[j];
            const double loss_grad = model.inv_n() * X.col(j).dot(r);
            delta[static_cast<Eigen::Index>(k)] = -rate * (loss_grad + cfg.lambda * pen_grad);
            old_norm_sq += beta[j] * beta[j];
        }

        for (std::size_t k = 0; k < q; ++k) {
            const Vertex j = block[k];
            const double d = delta[static_cast<Eigen::Index>(k)];
            beta[j] += d;
            squares[j] = beta[j] * beta[j];
            eta.noalias() += d * X.col(j);
        }
        reldiff = delta.norm() / safe_norm(std::sqrt(old_norm_sq));
    }
    if (!beta.allFinite()) throw Error(Errc::non_finite_objective, "iterate diverged; reduce the learning rate");
    out.iterations = i;
    out.converged = reldiff <= cfg.eps_tol;
    out.total_walk_steps = op.walk_steps();
    out.beta_thresholded = threshold_kmeans(beta);
    out.beta_hat = std::move(beta);
    return out;
}

FitResult fit(Optimizer method,
              const Eigen::MatrixXd& X,
              const Eigen::VectorXd& y,
              const SmoothingOperator& op,
              const FitConfig& cfg,
              const Eigen::VectorXd* beta0)
{
    return method == Optimizer::block_cd ? block_cd(X, y, op, cfg, beta0) : subgradient_descent(X, y, op, cfg, beta0);
}

Eigen::VectorXd threshold_kmeans(const Eigen::VectorXd& beta)
{
    const auto p = static_cast<std::size_t>(beta.size());
    if (p < 2) return beta;
    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(beta[static_cast<Eigen::Index>(a)]) < std::abs(beta[static_cast<Eigen::Index>(b)]);
    });
    auto mag = [&](std::size_t k) { return std::abs(beta[static_cast<Eigen::Index>(idx[k])]); };
    if (mag(0) == mag(p - 1)) return beta;

    std::vector<double> prefix(p + 1, 0.0);
    for (std::size_t k = 0; k < p; ++k) prefix[k + 1] = prefix[k] + mag(k);
    const double total = prefix[p];

    // Total SSE = sum a^2 - S_L^2/k - S_R^2/(p-k); minimize by maximizing the subtracted part.
    std::size_t best_split = 1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < p; ++k) {
        const double left = prefix[k];
        const double right = total - left;
        const double score = left * left / static_cast<double>(k) + right * right / static_cast<double>(p - k);
        if (score > best_score) {
            best_score = score;
            best_split = k;
        }
    }
    Eigen::VectorXd out = beta;
    for (std::size_t k = 0; k < best_split; ++k) out[static_cast<Eigen::Index>(idx[k])] = 0.0;
    return out;
}

double heldout_loss(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, LossKind kind)
{
    if (X.cols() != beta.size() || X.rows() != y.size()) throw Error(Errc::shape_mismatch, "held-out shapes disagree");
    const Eigen::VectorXd eta = X * beta;
    if (kind == LossKind::squared_error) return (y - eta).squaredNorm() / static_cast<double>(y.size());
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double prob = std::clamp(sigmoid(eta[i]), 1e-12, 1.0 - 1e-12);
        total -= y[i] * std::log(prob) + (1.0 - y[i]) * std::log1p(-prob);
    }
    return 2.0 * total / static_cast<double>(y.size());
}

std::uint64_t heat_flow_seed(std::uint64_t base_seed, std::size_t t_index) noexcept
{
    return derive_seed(base_seed, 0x4846ULL, t_index);
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, std::span<const std::size_t> rows)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(rows[k]));
    return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& y, std::span<const std::size_t> rows)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) out[static_cast<Eigen::Index>(k)] = y[static_cast<Eigen::Index>(rows[k])];
    return out;
}

} // namespace

CvResult cross_validate(const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y,
                        const OperatorFactory& make_operator,
                        std::span<const double> lambda_grid,
                        std::span<const double> t_grid,
                        std::size_t folds,
                        const FitConfig& cfg,
                        Optimizer method,
                        unsigned threads)
{
    if (lambda_grid.empty() || t_grid.empty()) throw Error(Errc::grid_empty, "lambda and t grids must be nonempty");
    if (folds < 2) throw Error(Errc::invalid_argument, "cross-validation needs at least 2 folds");
    if (X.rows() != y.size()) throw Error(Errc::shape_mismatch, "X rows differ from y length");
    const auto n = static_cast<std::size_t>(X.rows());
    if (n < folds) {
        throw Error(Errc::fold_too_small, "n = " + std::to_string(n) + " is smaller than folds = " + std::to_string(folds));
    }

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(cfg.seed, 0xf01dULL));
    std::shuffle(perm.begin(), perm.end(), rng);

    struct Split
    {
        Eigen::MatrixXd X_train, X_test;
        Eigen::VectorXd y_train, y_test;
    };
    std::vector<Split> splits(folds);
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::size_t> train, test;
        for (std::size_t k = 0; k < n; ++k) (k % folds == f ? test : train).push_back(perm[k]);
        splits[f] = {take_rows(X, train), take_rows(X, test), take_rows(y, train), take_rows(y, test)};
    }

    std::vector<std::shared_ptr<const SmoothingOperator>> ops(t_grid.size());
    parallel_for(t_grid.size(), threads, [&](std::size_t ti) { ops[ti] = make_operator(t_grid[ti], ti); });

    const std::size_t cells = t_grid.size() * lambda_grid.size();
    std::vector<double> losses(cells * folds);
    parallel_for(cells * folds, threads, [&](std::size_t task) {
        const std::size_t cell = task / folds;
        const std::size_t f = task % folds;
        const std::size_t ti = cell / lambda_grid.size();
        const std::size_t li = cell % lambda_grid.size();
        FitConfig local = cfg;
        local.t = t_grid[ti];
        local.lambda = lambda_grid[li];
        local.seed = derive_seed(cfg.seed, cell, f);
        const auto& split = splits[f];
        const auto result = fit(method, split.X_train, split.y_train, *ops[ti], local);
        losses[task] = heldout_loss(result.beta_hat, split.X_test, split.y_test, cfg.loss);
    });

    CvResult out;
    out.best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t cell = 0; cell < cells; ++cell) {
        CvCell row;
        row.t = t_grid[cell / lambda_grid.size()];
        row.lambda = lambda_grid[cell % lambda_grid.size()];
        row.fold_losses.assign(losses.begin() + static_cast<std::ptrdiff_t>(cell * folds),
                               losses.begin() + static_cast<std::ptrdiff_t>((cell + 1) * folds));
        row.mean_loss = std::accumulate(row.fold_losses.begin(), row.fold_losses.end(), 0.0) / static_cast<double>(folds);
        const bool better = row.mean_loss < out.best_loss ||
                            (row.mean_loss == out.best_loss &&
                             (row.lambda < out.best_lambda || (row.lambda == out.best_lambda && row.t < out.best_t)));
        if (better) {
            out.best_loss = row.mean_loss;
            out.best_lambda = row.lambda;
            out.best_t = row.t;
        }
        out.table.push_back(std::move(row));
    }
    return out;
}

CvResult cross_validate(const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y,
                        const Graph& g,
                        std::span<const double> lambda_grid,
                        std::span<const double> t_grid,
                        std::size_t folds,
                        const FitConfig& cfg,
                        Optimizer method,
                        unsigned threads)
{
    if (g.size() != static_cast<std::size_t>(X.cols())) throw Error(Errc::shape_mismatch, "graph size differs from X columns");
    OperatorFactory factory = [&](double t, std::size_t ti) -> std::shared_ptr<const SmoothingOperator> {
        return std::make_shared<HeatFlowMatrix>(simulate_heat_flow(g, t, cfg.walks, heat_flow_seed(cfg.seed, ti)));
    };
    return cross_validate(X, y, factory, lambda_grid, t_grid, folds, cfg, method, threads);
}

} // namespace heatgl
