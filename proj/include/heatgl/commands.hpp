#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <heatgl/designs.hpp>
#include <heatgl/diagnostics.hpp>
#include <heatgl/graph.hpp>
#include <heatgl/optimize.hpp>

namespace heatgl {

enum class OperatorKind { heat_flow, exact, group_lasso };

std::string_view to_string(OperatorKind kind) noexcept;
OperatorKind parse_operator_kind(std::string_view name);

struct GraphSource
{
    enum class Kind { from_design, estimate, path };
    Kind kind = Kind::estimate;
    double alpha = 0.75;
    std::string path;
};

/// Precedence: built-in defaults, then the JSON config, then command-line flags.
struct ExperimentConfig
{
    DesignSpec design;
    FitConfig fit;
    Optimizer method = Optimizer::block_cd;
    OperatorKind op = OperatorKind::heat_flow;
    std::vector<double> lambda_grid; // empty: use fit.lambda
    std::vector<double> t_grid;      // empty: use fit.t
    std::size_t folds = 5;
    GraphSource graph;
    std::string output = "out";
    std::size_t repeats = 1;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    void validate() const;
};

/// Accepts either a config document or a run manifest (its "config" member).
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

struct RepeatSeeds
{
    std::uint64_t design = 0;
    std::uint64_t fit = 0;
    std::uint64_t heat_flow = 0; // seed of the operator used for the final fit
};

RepeatSeeds repeat_seeds(std::uint64_t base, std::size_t repeat) noexcept;

struct RepeatOutcome
{
    Dataset data;
    Graph graph;
    std::optional<CvResult> cv;
    double lambda = 0.0;
    double t = 0.0;
    FitResult fit;
    MetricsReport metrics;
    RepeatSeeds seeds;
};

/// Smoothing operator of the requested kind at time t.
std::shared_ptr<const SmoothingOperator> make_operator(OperatorKind kind,
                                                       const Graph& g,
                                                       const GroupStructure& groups,
                                                       double t,
                                                       std::size_t walks,
                                                       std::uint64_t seed,
                                                       unsigned threads = 1);

/// The graph a repeat fits with: the design's own graph, one estimated from X, or a file.
Graph resolve_graph(const GraphSource& source, const Dataset& data, const DesignSpec& design);

/// Design sampling, optional CV over the grids, refit at the chosen (lambda, t), metrics.
RepeatOutcome run_repeat(const ExperimentConfig& cfg, std::size_t repeat, unsigned threads = 1);

/// Repeats run in a pool of cfg.threads workers; results are in repeat order.
std::vector<RepeatOutcome> run_experiment(const ExperimentConfig& cfg);

MetricsReport mean_metrics(const std::vector<RepeatOutcome>& outcomes);

/// Entry point of the command-line tool. Exit codes: 0 success, 1 usage or
/// configuration error, 2 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace heatgl
