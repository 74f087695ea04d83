#include <heatgl/commands.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include <heatgl/error.hpp>
#include <heatgl/heat_flow.hpp>
#include <heatgl/io.hpp>
#include <heatgl/levelset.hpp>
#include <heatgl/parallel.hpp>
#include <heatgl/penalty.hpp>
#include <heatgl/random.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace heatgl {

std::string_view to_string(OperatorKind kind) noexcept
{
    switch (kind) {
        case OperatorKind::heat_flow: return "heat_flow";
        case OperatorKind::exact: return "exact";
        case OperatorKind::group_lasso: return "group_lasso";
    }
    return "heat_flow";
}

OperatorKind parse_operator_kind(std::string_view name)
{
    if (name == "heat_flow") return OperatorKind::heat_flow;
    if (name == "exact") return OperatorKind::exact;
    if (name == "group_lasso") return OperatorKind::group_lasso;
    throw Error(Errc::invalid_argument, "unknown operator '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const
{
    design.validate();
    fit.validate(design.p());
    if (repeats == 0) throw Error(Errc::invalid_argument, "repeats must be >= 1");
    if (folds < 2 && (lambda_grid.size() > 1 || t_grid.size() > 1)) throw Error(Errc::invalid_argument, "folds must be >= 2");
    if (graph.kind == GraphSource::Kind::estimate && !(graph.alpha >= 0.0 && graph.alpha <= 1.0)) {
        throw Error(Errc::invalid_quantile, "graph alpha must lie in [0, 1]");
    }
    if (graph.kind == GraphSource::Kind::path && !fs::exists(graph.path)) {
        throw Error(Errc::io_error, "graph file '" + graph.path + "' does not exist");
    }
}

ExperimentConfig experiment_config_from_json(const json& doc)
{
    const json& j = doc.contains("config") && doc.contains("config_hash") ? doc.at("config") : doc;
    if (!j.is_object()) throw Error(Errc::parse_error, "config must be a JSON object");
    ExperimentConfig cfg;
    try {
        if (j.contains("design")) cfg.design = design_spec_from_json(j.at("design"));
        if (j.contains("fit")) {
            const auto& f = j.at("fit");
            cfg.fit = fit_config_from_json(f);
            if (f.contains("method")) cfg.method = parse_optimizer(f.at("method").get<std::string>());
            if (f.contains("operator")) cfg.op = parse_operator_kind(f.at("operator").get<std::string>());
            if (f.contains("lambda_grid")) cfg.lambda_grid = f.at("lambda_grid").get<std::vector<double>>();
            if (f.contains("t_grid")) cfg.t_grid = f.at("t_grid").get<std::vector<double>>();
            if (f.contains("folds")) cfg.folds = f.at("folds").get<std::size_t>();
        }
        if (auto it = j.find("graph"); it != j.end() && !it->is_null()) {
            if (it->is_string()) {
                const auto name = it->get<std::string>();
                if (name == "from-design") {
                    cfg.graph.kind = GraphSource::Kind::from_design;
                } else if (name == "estimate") {
                    cfg.graph.kind = GraphSource::Kind::estimate;
                } else {
                    cfg.graph = {GraphSource::Kind::path, 0.75, name};
                }
            } else if (it->contains("estimate")) {
                cfg.graph = {GraphSource::Kind::estimate, it->at("estimate").get<double>(), {}};
            } else if (it->contains("path")) {
                cfg.graph = {GraphSource::Kind::path, 0.75, it->at("path").get<std::string>()};
            } else {
                throw Error(Errc::parse_error, "graph must be \"from-design\", \"estimate\", {\"estimate\": alpha} or {\"path\": file}");
            }
        }
        if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
        if (j.contains("repeats")) {
            const auto r = j.at("repeats").get<long long>();
            if (r < 1) throw Error(Errc::invalid_argument, "repeats must be >= 1");
            cfg.repeats = static_cast<std::size_t>(r);
        }
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("threads")) cfg.threads = j.at("threads").get<unsigned>();
    } catch (const json::exception& e) {
        throw Error(Errc::parse_error, std::string("config: ") + e.what());
    }
    return cfg;
}

json to_json(const ExperimentConfig& cfg)
{
    json fit = to_json(cfg.fit);
    fit["method"] = to_string(cfg.method);
    fit["operator"] = to_string(cfg.op);
    fit["lambda_grid"] = cfg.lambda_grid;
    fit["t_grid"] = cfg.t_grid;
    fit["folds"] = cfg.folds;
    json graph;
    switch (cfg.graph.kind) {
        case GraphSource::Kind::from_design: graph = "from-design"; break;
        case GraphSource::Kind::estimate: graph = {{"estimate", cfg.graph.alpha}}; break;
        case GraphSource::Kind::path: graph = {{"path", cfg.graph.path}}; break;
    }
    return {
        {"design", to_json(cfg.design)},
        {"fit", fit},
        {"graph", graph},
        {"output", cfg.output},
        {"repeats", cfg.repeats},
        {"seed", cfg.seed},
    };
}

namespace {

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

std::string config_hash(const ExperimentConfig& cfg)
{
    json j = to_json(cfg);
    j.erase("output");
    return hex64(fnv1a64(j.dump()));
}

RepeatSeeds repeat_seeds(std::uint64_t base, std::size_t repeat) noexcept
{
    RepeatSeeds s;
    s.design = derive_seed(base, 0xda7aULL, repeat);
    s.fit = derive_seed(base, 0xf17ULL, repeat);
    return s;
}

std::shared_ptr<const SmoothingOperator> make_operator(OperatorKind kind,
                                                       const Graph& g,
                                                       const GroupStructure& groups,
                                                       double t,
                                                       std::size_t walks,
                                                       std::uint64_t seed,
                                                       unsigned threads)
{
    switch (kind) {
        case OperatorKind::heat_flow: {
            WalkOptions options;
            options.threads = threads;
            return std::make_shared<HeatFlowMatrix>(simulate_heat_flow(g, t, walks, seed, options));
        }
        case OperatorKind::exact: return std::make_shared<DenseKernel>(exact_heat_kernel(g, t));
        case OperatorKind::group_lasso: return std::make_shared<GroupAverager>(groups);
    }
    throw Error(Errc::invalid_argument, "unknown operator kind");
}

Graph resolve_graph(const GraphSource& source, const Dataset& data, const DesignSpec& design)
{
    switch (source.kind) {
        case GraphSource::Kind::estimate: return estimate_graph(sample_correlation(data.X), source.alpha);
        case GraphSource::Kind::path: {
            Graph g = read_edge_list_file(source.path);
            if (g.size() != static_cast<std::size_t>(data.X.cols())) throw Error(Errc::shape_mismatch, "graph size differs from p");
            return g;
        }
        case GraphSource::Kind::from_design: {
            if (data.graph) return *data.graph;
            if (design.kind == DesignKind::sbm_cov) return design_graph(design);
            std::vector<Edge> edges;
            for (std::size_t g = 0; g < data.groups.group_count(); ++g) {
                const auto members = data.groups.members(g);
                for (std::size_t a = 0; a < members.size(); ++a) {
                    for (std::size_t b = a + 1; b < members.size(); ++b) edges.emplace_back(members[a], members[b]);
                }
            }
            return Graph::from_edges(data.groups.size(), edges);
        }
    }
    throw Error(Errc::invalid_argument, "unknown graph source");
}

RepeatOutcome run_repeat(const ExperimentConfig& cfg, std::size_t repeat, unsigned threads)
{
    RepeatOutcome out;
    out.seeds = repeat_seeds(cfg.seed, repeat);
    DesignSpec design = cfg.design;
    design.seed = out.seeds.design;
    out.data = sample_design_and_response(design);
    out.graph = resolve_graph(cfg.graph, out.data, design);

    FitConfig fit_cfg = cfg.fit;
    fit_cfg.seed = out.seeds.fit;
    const std::vector<double> lambdas = cfg.lambda_grid.empty() ? std::vector<double>{cfg.fit.lambda} : cfg.lambda_grid;
    const std::vector<double> ts = cfg.t_grid.empty() ? std::vector<double>{cfg.fit.t} : cfg.t_grid;

    std::vector<std::shared_ptr<const SmoothingOperator>> ops(ts.size());
    auto op_at = [&](std::size_t ti) {
        if (!ops[ti]) {
            ops[ti] = make_operator(cfg.op, out.graph, out.data.groups, ts[ti], fit_cfg.walks, heat_flow_seed(fit_cfg.seed, ti), threads);
        }
        return ops[ti];
    };

    std::size_t best_t = 0;
    out.lambda = lambdas.front();
    if (lambdas.size() > 1 || ts.size() > 1) {
        for (std::size_t ti = 0; ti < ts.size(); ++ti) op_at(ti);
        const OperatorFactory factory = [&](double, std::size_t ti) { return ops[ti]; };
        out.cv = cross_validate(out.data.X, out.data.y, factory, lambdas, ts, cfg.folds, fit_cfg, cfg.method, threads);
        out.lambda = out.cv->best_lambda;
        best_t = static_cast<std::size_t>(std::find(ts.begin(), ts.end(), out.cv->best_t) - ts.begin());
    }
    out.t = ts[best_t];
    out.seeds.heat_flow = heat_flow_seed(fit_cfg.seed, best_t);
    fit_cfg.lambda = out.lambda;
    fit_cfg.t = out.t;
    out.fit = fit(cfg.method, out.data.X, out.data.y, *op_at(best_t), fit_cfg);
    out.metrics = evaluate_fit(out.fit.beta_thresholded, out.data.beta_star, out.data.X);
    return out;
}

std::vector<RepeatOutcome> run_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    std::vector<RepeatOutcome> outcomes(cfg.repeats);
    const unsigned outer = cfg.repeats > 1 ? cfg.threads : 1;
    const unsigned inner = cfg.repeats > 1 ? 1 : cfg.threads;
    parallel_for(cfg.repeats, outer, [&](std::size_t r) { outcomes[r] = run_repeat(cfg, r, inner); });
    return outcomes;
}

MetricsReport mean_metrics(const std::vector<RepeatOutcome>& outcomes)
{
    MetricsReport mean;
    if (outcomes.empty()) return mean;
    for (const auto& o : outcomes) {
        mean.prediction_error += o.metrics.prediction_error;
        mean.estimation_error += o.metrics.estimation_error;
        mean.sensitivity += o.metrics.sensitivity;
        mean.specificity += o.metrics.specificity;
    }
    const double r = static_cast<double>(outcomes.size());
    mean.prediction_error /= r;
    mean.estimation_error /= r;
    mean.sensitivity /= r;
    mean.specificity /= r;
    return mean;
}

// ---------------------------------------------------------------------------
// command line

namespace {

/// Files written by a command; removed again unless commit() is called.
class OutputSet
{
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir))
    {
        if (!fs::exists(dir_)) {
            fs::create_directories(dir_);
            created_dir_ = true;
        }
    }
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;

    ~OutputSet()
    {
        if (committed_) return;
        std::error_code ec;
        for (const auto& f : files_) fs::remove(f, ec);
        if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
    }

    void write(const std::string& name, std::string_view text)
    {
        const auto path = dir_ / name;
        files_.push_back(path);
        write_text_file(path.string(), text);
    }

    fs::path path(const std::string& name) const { return dir_ / name; }
    void commit() { committed_ = true; }

private:
    fs::path dir_;
    std::vector<fs::path> files_;
    bool created_dir_ = false;
    bool committed_ = false;
};

struct FlagValues
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
    std::optional<double> t;
    std::optional<double> lambda;
    std::optional<std::size_t> walks;
    std::optional<std::size_t> block_size;
    std::optional<double> estimate_alpha;
    std::optional<std::string> loss;
    std::optional<std::string> method;
    std::optional<std::string> op;
    std::optional<std::string> graph_path;
};

void add_common_flags(CLI::App* cmd, FlagValues& v)
{
    cmd->add_option("--config", v.config, "JSON config file (flags override its fields)");
    cmd->add_option("--seed", v.seed, "base seed");
    cmd->add_option("--threads", v.threads, "worker threads");
    cmd->add_option("--out", v.out, "output directory");
}

void add_fit_flags(CLI::App* cmd, FlagValues& v)
{
    cmd->add_option("--t", v.t, "heat-flow time");
    cmd->add_option("--lambda", v.lambda, "penalty level");
    cmd->add_option("--walks", v.walks, "random walks per vertex (B)");
    cmd->add_option("--block-size", v.block_size, "coordinates per block-CD iteration");
    cmd->add_option("--estimate-graph", v.estimate_alpha, "estimate the graph from X at this correlation quantile (0.75 when no graph is given)");
    cmd->add_option("--loss", v.loss, "squared or logistic")->check(CLI::IsMember({"squared", "logistic"}));
    cmd->add_option("--method", v.method, "sd (subgradient) or cd (block coordinate descent)")->check(CLI::IsMember({"sd", "cd"}));
    cmd->add_option("--operator", v.op, "heat_flow, exact or group_lasso")
        ->check(CLI::IsMember({"heat_flow", "exact", "group_lasso"}));
    cmd->add_option("--graph", v.graph_path, "edge-list file");
}

ExperimentConfig load_config(const FlagValues& v)
{
    ExperimentConfig cfg;
    if (!v.config.empty()) {
        const auto text = read_text_file(v.config);
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            throw Error(Errc::parse_error, v.config + ": " + e.what());
        }
        cfg = experiment_config_from_json(doc);
    }
    if (v.seed) cfg.seed = *v.seed;
    if (v.threads) cfg.threads = *v.threads;
    if (v.out) cfg.output = *v.out;
    if (v.t) {
        cfg.fit.t = *v.t;
        cfg.t_grid.clear();
    }
    if (v.lambda) {
        cfg.fit.lambda = *v.lambda;
        cfg.lambda_grid.clear();
    }
    if (v.walks) cfg.fit.walks = *v.walks;
    if (v.block_size) cfg.fit.block_size = *v.block_size;
    if (v.loss) {
        cfg.fit.loss = parse_loss(*v.loss);
        cfg.design.response = cfg.fit.loss;
    }
    if (v.method) cfg.method = parse_optimizer(*v.method);
    if (v.op) cfg.op = parse_operator_kind(*v.op);
    if (v.estimate_alpha) cfg.graph = {GraphSource::Kind::estimate, *v.estimate_alpha, {}};
    if (v.graph_path) cfg.graph = {GraphSource::Kind::path, 0.75, *v.graph_path};
    return cfg;
}

json edges_json(const Graph& g)
{
    json edges = json::array();
    for (auto [u, v] : g.edges()) edges.push_back({u, v});
    return edges;
}

std::string graph_text(const Graph& g)
{
    std::ostringstream s;
    write_edge_list(s, g);
    return s.str();
}

std::string beta_csv(const FitResult& result, const std::vector<std::string>& names)
{
    std::ostringstream s;
    s << "variable,beta_hat,beta_thresholded\n";
    for (Eigen::Index j = 0; j < result.beta_hat.size(); ++j) {
        s << names[static_cast<std::size_t>(j)] << ',' << format_double(result.beta_hat[j]) << ','
          << format_double(result.beta_thresholded[j]) << '\n';
    }
    return s.str();
}

json base_manifest(const ExperimentConfig& cfg, std::string_view command)
{
    return {
        {"command", command},
        {"version", HEATGL_VERSION},
        {"config_hash", config_hash(cfg)},
        {"config", to_json(cfg)},
    };
}

int cmd_simulate(const FlagValues& v, std::ostream& out)
{
    const ExperimentConfig cfg = load_config(v);
    cfg.validate();
    const auto outcomes = run_experiment(cfg);

    OutputSet files(cfg.output);
    json manifest = base_manifest(cfg, "simulate");
    json seeds = json::array();
    std::ostringstream metrics;
    metrics << "repeat," << metrics_csv_header << '\n';
    for (std::size_t r = 0; r < outcomes.size(); ++r) {
        const auto& o = outcomes[r];
        std::ostringstream data;
        write_dataset_csv(data, o.data.y, o.data.X);
        const auto tag = "_r" + std::to_string(r);
        files.write("dataset" + tag + ".csv", data.str());
        DesignSpec spec = cfg.design;
        spec.seed = o.seeds.design;
        std::vector<std::uint32_t> labels;
        for (auto l : o.data.groups.labels()) labels.push_back(l + 1);
        const json companion{{"beta_star", std::vector<double>(o.data.beta_star.data(), o.data.beta_star.data() + o.data.beta_star.size())},
                             {"groups", labels},
                             {"seed", o.seeds.design},
                             {"spec", to_json(spec)}};
        files.write("dataset" + tag + ".json", companion.dump(2) + "\n");
        files.write("fit" + tag + ".json", to_json(o.fit).dump(2) + "\n");
        if (o.cv) files.write("cv" + tag + ".json", to_json(*o.cv).dump(2) + "\n");
        metrics << r << ',' << metrics_csv_row(o.metrics) << '\n';
        seeds.push_back({{"repeat", r},
                         {"design", o.seeds.design},
                         {"fit", o.seeds.fit},
                         {"heat_flow", o.seeds.heat_flow},
                         {"lambda", o.lambda},
                         {"t", o.t},
                         {"graph_edges", o.graph.edge_count()}});
    }
    metrics << "mean," << metrics_csv_row(mean_metrics(outcomes)) << '\n';
    files.write("metrics.csv", metrics.str());
    manifest["seeds"] = {{"base", cfg.seed}, {"repeats", seeds}};
    files.write("manifest.json", manifest.dump(2) + "\n");
    files.commit();
    out << "simulate: " << outcomes.size() << " repeat(s); mean " << metrics_csv_header << " = "
        << metrics_csv_row(mean_metrics(outcomes)) << '\n';
    return 0;
}

struct LoadedData
{
    RegressionData data;
    Graph graph;
};

LoadedData load_data_and_graph(const std::string& path, const ExperimentConfig& cfg)
{
    LoadedData loaded{split_response(read_csv_file(path)), {}};
    const auto p = static_cast<std::size_t>(loaded.data.X.cols());
    if (cfg.graph.kind == GraphSource::Kind::path) {
        loaded.graph = read_edge_list_file(cfg.graph.path);
        if (loaded.graph.size() != p) throw Error(Errc::shape_mismatch, "graph size differs from the number of predictors");
    } else {
        // No design graph exists for user data; estimation is the fallback.
        const double alpha = cfg.graph.kind == GraphSource::Kind::estimate ? cfg.graph.alpha : 0.75;
        loaded.graph = estimate_graph(sample_correlation(loaded.data.X), alpha);
    }
    return loaded;
}

int cmd_fit(const FlagValues& v, const std::string& data_path, std::ostream& out)
{
    const ExperimentConfig cfg = load_config(v);
    auto [data, graph] = load_data_and_graph(data_path, cfg);
    const auto p = static_cast<std::size_t>(data.X.cols());
    FitConfig fit_cfg = cfg.fit;
    fit_cfg.seed = derive_seed(cfg.seed, 0xf17ULL);
    fit_cfg.validate(p);
    const auto groups = GroupStructure::from_components(graph);
    const auto op_seed = heat_flow_seed(fit_cfg.seed, 0);
    const auto op = make_operator(cfg.op, graph, groups, fit_cfg.t, fit_cfg.walks, op_seed, cfg.threads);
    const auto result = fit(cfg.method, data.X, data.y, *op, fit_cfg);

    OutputSet files(cfg.output);
    files.write("fit.json", to_json(result).dump(2) + "\n");
    files.write("beta.csv", beta_csv(result, data.names));
    files.write("graph.txt", graph_text(graph));
    json manifest = base_manifest(cfg, "fit");
    manifest["data"] = data_path;
    manifest["seeds"] = {{"base", cfg.seed}, {"fit", fit_cfg.seed}, {"heat_flow", op_seed}};
    manifest["graph"] = {{"vertices", graph.size()}, {"edge_count", graph.edge_count()}, {"edges", edges_json(graph)}};
    files.write("manifest.json", manifest.dump(2) + "\n");
    files.commit();
    out << "fit: " << result.iterations << " iterations, converged=" << (result.converged ? "true" : "false")
        << ", nonzeros=" << (result.beta_thresholded.array() != 0.0).count() << '\n';
    return 0;
}

std::vector<double> parse_list(const std::string& text, const char* what)
{
    std::vector<double> values;
    std::stringstream s(text);
    std::string item;
    while (std::getline(s, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(Errc::parse_error, std::string("bad ") + what + " entry '" + item + "'");
        }
    }
    return values;
}

int cmd_cv(const FlagValues& v,
           const std::string& data_path,
           const std::string& lambda_grid,
           const std::string& t_grid,
           std::optional<std::size_t> folds,
           std::ostream& out)
{
    ExperimentConfig cfg = load_config(v);
    if (!lambda_grid.empty()) cfg.lambda_grid = parse_list(lambda_grid, "lambda grid");
    if (!t_grid.empty()) cfg.t_grid = parse_list(t_grid, "t grid");
    if (folds) cfg.folds = *folds;
    if (cfg.lambda_grid.empty()) cfg.lambda_grid = {cfg.fit.lambda};
    if (cfg.t_grid.empty()) cfg.t_grid = {cfg.fit.t};

    auto [data, graph] = load_data_and_graph(data_path, cfg);
    const auto p = static_cast<std::size_t>(data.X.cols());
    FitConfig fit_cfg = cfg.fit;
    fit_cfg.seed = derive_seed(cfg.seed, 0xf17ULL);
    fit_cfg.validate(p);
    const auto groups = GroupStructure::from_components(graph);

    std::vector<std::shared_ptr<const SmoothingOperator>> ops(cfg.t_grid.size());
    for (std::size_t ti = 0; ti < ops.size(); ++ti) {
        ops[ti] = make_operator(cfg.op, graph, groups, cfg.t_grid[ti], fit_cfg.walks, heat_flow_seed(fit_cfg.seed, ti), cfg.threads);
    }
    const OperatorFactory factory = [&](double, std::size_t ti) { return ops[ti]; };
    const auto cv = cross_validate(data.X, data.y, factory, cfg.lambda_grid, cfg.t_grid, cfg.folds, fit_cfg, cfg.method, cfg.threads);
    const auto best_t = static_cast<std::size_t>(std::find(cfg.t_grid.begin(), cfg.t_grid.end(), cv.best_t) - cfg.t_grid.begin());
    fit_cfg.lambda = cv.best_lambda;
    fit_cfg.t = cv.best_t;
    const auto result = fit(cfg.method, data.X, data.y, *ops[best_t], fit_cfg);

    OutputSet files(cfg.output);
    files.write("cv.json", to_json(cv).dump(2) + "\n");
    files.write("fit.json", to_json(result).dump(2) + "\n");
    files.write("beta.csv", beta_csv(result, data.names));
    json manifest = base_manifest(cfg, "cv");
    manifest["data"] = data_path;
    manifest["seeds"] = {{"base", cfg.seed}, {"fit", fit_cfg.seed}, {"heat_flow", heat_flow_seed(fit_cfg.seed, best_t)}};
    manifest["graph"] = {{"vertices", graph.size()}, {"edge_count", graph.edge_count()}, {"edges", edges_json(graph)}};
    files.write("manifest.json", manifest.dump(2) + "\n");
    files.commit();
    out << "cv: best lambda=" << format_double(cv.best_lambda) << " t=" << format_double(cv.best_t)
        << " loss=" << format_double(cv.best_loss) << '\n';
    return 0;
}

int cmd_estimate_graph(const FlagValues& v, const std::string& data_path, bool has_response, std::ostream& out)
{
    const ExperimentConfig cfg = load_config(v);
    const auto table = read_csv_file(data_path);
    Eigen::MatrixXd X = has_response ? split_response(table).X : table.values;
    if (X.rows() < 2) throw Error(Errc::parse_error, "need at least two data rows");
    const double alpha = v.estimate_alpha ? *v.estimate_alpha : cfg.graph.alpha;
    const Graph g = estimate_graph(sample_correlation(X), alpha);

    OutputSet files(cfg.output);
    files.write("graph.txt", graph_text(g));
    json manifest = base_manifest(cfg, "estimate-graph");
    manifest["data"] = data_path;
    manifest["alpha"] = alpha;
    manifest["graph"] = {{"vertices", g.size()}, {"edge_count", g.edge_count()}, {"edges", edges_json(g)}};
    files.write("manifest.json", manifest.dump(2) + "\n");
    files.commit();
    out << "estimate-graph: " << g.size() << " vertices, " << g.edge_count() << " edges, "
        << connected_components(g).count << " components\n";
    return 0;
}

int cmd_levelset(const FlagValues& v, const std::string& t_list, const std::string& slices, std::ostream& out)
{
    const auto ts = parse_list(t_list, "t list");
    const auto levels = parse_list(slices, "slice list");
    if (ts.empty()) throw Error(Errc::invalid_argument, "need at least one t");
    const auto panels = levelset_panels(ts, levels);
    std::ostringstream svg;
    write_levelset_svg(svg, panels);
    OutputSet files(v.out.value_or("out"));
    files.write("levelset.svg", svg.str());
    files.commit();
    std::size_t paths = 0;
    for (const auto& panel : panels) {
        for (const auto& slice : panel.slices) paths += slice.contours.size();
    }
    out << "levelset: " << panels.size() << " panel(s), " << paths << " contour path(s) -> " << files.path("levelset.svg").string()
        << '\n';
    return 0;
}

json check_json(const BoundCheck& c)
{
    return {{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"slack", c.slack()}, {"enforced", c.applicable}, {"pass", c.pass}};
}

int cmd_verify(const FlagValues& v, std::ostream& out)
{
    std::vector<std::pair<std::string, Graph>> graphs;
    if (v.graph_path) {
        graphs.emplace_back(*v.graph_path, read_edge_list_file(*v.graph_path));
    } else {
        graphs.emplace_back("pair_singleton", pair_singleton_graph());
        std::vector<Edge> k5, p4;
        for (Vertex a = 0; a < 5; ++a) {
            for (Vertex b = a + 1; b < 5; ++b) k5.emplace_back(a, b);
        }
        for (Vertex a = 0; a + 1 < 4; ++a) p4.emplace_back(a, a + 1);
        graphs.emplace_back("complete_5", Graph::from_edges(5, k5));
        graphs.emplace_back("path_4", Graph::from_edges(4, p4));
        const std::vector<std::size_t> sizes{6, 6};
        graphs.emplace_back("block_12", sample_block_graph(sizes, 0.8, 0.1, false, v.seed.value_or(0)));
    }
    bool all_pass = true;
    json report = json::array();
    for (const auto& [name, g] : graphs) {
        const auto bounds = verify_spectral_bounds(g);
        json entry{{"graph", name}, {"vertices", g.size()}, {"edges", g.edge_count()}, {"pass", bounds.all_pass()}};
        json checks = json::array();
        for (const auto& c : bounds.checks) checks.push_back(check_json(c));
        entry["checks"] = checks;
        try {
            const auto flow = flow_time_prescription(g, std::max<std::size_t>(g.size(), 1));
            entry["flow_time"] = {{"t_flow", flow.t_flow}, {"n_step", flow.n_step}, {"spectral_gap", flow.spectral_gap}};
        } catch (const Error&) {
            entry["flow_time"] = nullptr;
        }
        all_pass = all_pass && bounds.all_pass();
        out << name << ": " << (bounds.all_pass() ? "pass" : "FAIL") << '\n';
        report.push_back(entry);
    }
    if (v.out) {
        OutputSet files(*v.out);
        files.write("verify.json", report.dump(2) + "\n");
        files.commit();
    }
    return all_pass ? 0 : 2;
}

int exit_code_for(Errc code)
{
    return code == Errc::non_finite_objective ? 2 : 1;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Heat-flow group-sparse regression toolkit", "heatgl"};
    app.require_subcommand(1);
    app.set_version_flag("--version", HEATGL_VERSION);

    FlagValues v;
    std::string data_path, lambda_grid, t_grid, t_list = "0,0.01,0.1,0.5,1,50", slices = "0,0.25,0.5";
    std::optional<std::size_t> folds;
    bool no_response = false;

    auto* simulate = app.add_subcommand("simulate", "synthetic experiment: design, (CV) fit, metrics");
    add_common_flags(simulate, v);
    add_fit_flags(simulate, v);

    auto* fit_cmd = app.add_subcommand("fit", "fit a CSV data set (first column y)");
    fit_cmd->add_option("data", data_path, "CSV file")->required();
    add_common_flags(fit_cmd, v);
    add_fit_flags(fit_cmd, v);

    auto* cv = app.add_subcommand("cv", "cross-validate lambda and t on a CSV data set");
    cv->add_option("data", data_path, "CSV file")->required();
    cv->add_option("--lambda-grid", lambda_grid, "comma-separated lambda values");
    cv->add_option("--t-grid", t_grid, "comma-separated t values");
    cv->add_option("--folds", folds, "number of folds");
    add_common_flags(cv, v);
    add_fit_flags(cv, v);

    auto* estimate = app.add_subcommand("estimate-graph", "threshold the sample correlation at a quantile");
    estimate->add_option("data", data_path, "CSV file")->required();
    estimate->add_flag("--no-response", no_response, "every column is a predictor");
    estimate->add_option("--alpha,--estimate-graph", v.estimate_alpha, "correlation quantile");
    add_common_flags(estimate, v);

    auto* levelset = app.add_subcommand("levelset", "SVG of {Lambda_t <= 1} on the three-vertex graph");
    levelset->add_option("--t", t_list, "comma-separated t values");
    levelset->add_option("--slices", slices, "comma-separated beta3 slice levels");
    levelset->add_option("--out", v.out, "output directory");

    auto* verify = app.add_subcommand("verify", "spectral-bound and flow-time diagnostics");
    verify->add_option("--graph", v.graph_path, "edge-list file (default: built-in suite)");
    verify->add_option("--seed", v.seed, "seed for the random suite graph");
    verify->add_option("--out", v.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*simulate) return cmd_simulate(v, out);
        if (*fit_cmd) return cmd_fit(v, data_path, out);
        if (*cv) return cmd_cv(v, data_path, lambda_grid, t_grid, folds, out);
        if (*estimate) return cmd_estimate_graph(v, data_path, !no_response, out);
        if (*levelset) return cmd_levelset(v, t_list, slices, out);
        if (*verify) return cmd_verify(v, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

} // namespace heatgl
