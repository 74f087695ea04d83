#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include <heatgl/commands.hpp>
#include <heatgl/designs.hpp>
#include <heatgl/diagnostics.hpp>
#include <heatgl/error.hpp>
#include <heatgl/graph.hpp>
#include <heatgl/heat_flow.hpp>
#include <heatgl/io.hpp>
#include <heatgl/optimize.hpp>
#include <heatgl/penalty.hpp>
#include <heatgl/smoothing.hpp>

namespace py = pybind11;
using namespace heatgl;

namespace {

py::dict metrics_dict(const MetricsReport& m)
{
    py::dict d;
    d["prediction_error"] = m.prediction_error;
    d["estimation_error"] = m.estimation_error;
    d["sensitivity"] = m.sensitivity;
    d["specificity"] = m.specificity;
    return d;
}

FitConfig make_config(double lambda, double t, std::size_t walks, double alpha0, const std::string& rate,
                      double eps_tol, std::size_t max_iters, std::size_t block_size, std::uint64_t seed,
                      const std::string& loss, bool literal_heat_product)
{
    FitConfig cfg;
    cfg.lambda = lambda;
    cfg.t = t;
    cfg.walks = walks;
    cfg.alpha0 = alpha0;
    cfg.rate = parse_rate(rate);
    cfg.eps_tol = eps_tol;
    cfg.max_iters = max_iters;
    cfg.block_size = block_size;
    cfg.seed = seed;
    cfg.loss = parse_loss(loss);
    cfg.literal_heat_product = literal_heat_product;
    return cfg;
}

DesignSpec spec_from_dict(const py::dict& d)
{
    const auto dumps = py::module_::import("json").attr("dumps");
    return design_spec_from_json(nlohmann::json::parse(dumps(d).cast<std::string>()));
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Heat-flow smoothed group-sparse regression";
    m.attr("__version__") = HEATGL_VERSION;

    static py::handle error_type = py::exception<Error>(m, "HeatglError", PyExc_RuntimeError).release();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
            exc.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(error_type.ptr(), exc.ptr());
        }
    });

    py::class_<Graph>(m, "Graph")
        .def(py::init<std::size_t>(), py::arg("p"))
        .def_static(
            "from_edges",
            [](std::size_t p, const std::vector<Edge>& edges, bool self_loops) {
                return Graph::from_edges(p, edges, self_loops);
            },
            py::arg("p"), py::arg("edges"), py::arg("allow_self_loops") = false)
        .def_static("from_adjacency", &Graph::from_adjacency, py::arg("adjacency"), py::arg("allow_self_loops") = false)
        .def("__len__", &Graph::size)
        .def_property_readonly("size", &Graph::size)
        .def("degree", &Graph::degree)
        .def("max_degree", &Graph::max_degree)
        .def("edge_count", &Graph::edge_count)
        .def("has_edge", &Graph::has_edge)
        .def("edges", &Graph::edges)
        .def("__eq__", [](const Graph& a, const Graph& b) { return a == b; });

    m.def("laplacian", &laplacian);
    m.def("estimate_graph", &estimate_graph, py::arg("corr"), py::arg("alpha"));
    m.def("sample_correlation", &sample_correlation);
    m.def(
        "sample_block_graph",
        [](const std::vector<std::size_t>& sizes, double within, double between, bool self_loops, std::uint64_t seed) {
            return sample_block_graph(sizes, within, between, self_loops, seed);
        },
        py::arg("sizes"), py::arg("within"), py::arg("between"), py::arg("self_loops") = false, py::arg("seed") = 0);

    py::class_<SmoothingOperator, std::shared_ptr<SmoothingOperator>>(m, "SmoothingOperator")
        .def_property_readonly("size", &SmoothingOperator::size)
        .def("apply", py::overload_cast<const Eigen::VectorXd&>(&SmoothingOperator::apply, py::const_))
        .def("walk_steps", &SmoothingOperator::walk_steps);

    py::class_<HeatFlowMatrix, SmoothingOperator, std::shared_ptr<HeatFlowMatrix>>(m, "HeatFlowMatrix")
        .def_property_readonly("walks", &HeatFlowMatrix::walks)
        .def_property_readonly("time", &HeatFlowMatrix::time)
        .def("terminals",
             [](const HeatFlowMatrix& H, Vertex i) {
                 const auto t = H.terminals(i);
                 return std::vector<Vertex>(t.begin(), t.end());
             })
        .def("mean_steps_per_walk", &HeatFlowMatrix::mean_steps_per_walk)
        .def("save", &HeatFlowMatrix::save_file)
        .def_static("load", &HeatFlowMatrix::load_file);

    py::class_<DenseKernel, SmoothingOperator, std::shared_ptr<DenseKernel>>(m, "DenseKernel")
        .def(py::init<Eigen::MatrixXd>(), py::arg("kernel"))
        .def_property_readonly("matrix", &DenseKernel::matrix);

    py::class_<GroupStructure>(m, "GroupStructure")
        .def(py::init<std::vector<std::uint32_t>>(), py::arg("labels"))
        .def_static("from_sizes", [](const std::vector<std::size_t>& s) { return GroupStructure::from_sizes(s); })
        .def_static("from_components", &GroupStructure::from_components)
        .def("sizes", &GroupStructure::sizes)
        .def("label", &GroupStructure::label)
        .def_property_readonly("group_count", &GroupStructure::group_count);

    py::class_<GroupAverager, SmoothingOperator, std::shared_ptr<GroupAverager>>(m, "GroupAverager")
        .def(py::init<GroupStructure>(), py::arg("groups"));

    m.def(
        "simulate_heat_flow",
        [](const Graph& g, double t, std::size_t walks, std::uint64_t seed, bool unit_rate_holding, unsigned threads) {
            WalkOptions opt;
            opt.unit_rate_holding = unit_rate_holding;
            opt.threads = threads;
            return std::make_shared<HeatFlowMatrix>(simulate_heat_flow(g, t, walks, seed, opt));
        },
        py::arg("graph"), py::arg("t"), py::arg("walks"), py::arg("seed") = 0, py::arg("unit_rate_holding") = false,
        py::arg("threads") = 1);
    m.def(
        "heatflow_apply",
        [](const HeatFlowMatrix& H, const Eigen::VectorXd& f, const std::vector<Vertex>& S) {
            return heatflow_apply(H, f, S);
        },
        py::arg("H"), py::arg("f"), py::arg("vertices"));
    m.def("exact_heat_kernel", py::overload_cast<const Graph&, double, std::size_t>(&exact_heat_kernel), py::arg("graph"),
          py::arg("t"), py::arg("dense_limit") = default_dense_limit);

    m.def("penalty_value", &penalty_value, py::arg("beta"), py::arg("op"), py::arg("eps_abs") = 0.0);
    m.def("penalty_subgradient", &penalty_subgradient, py::arg("beta"), py::arg("op"),
          py::arg("eps_den") = default_eps_den);
    m.def("group_lasso_penalty", &group_lasso_penalty, py::arg("beta"), py::arg("groups"));

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("beta_hat", &FitResult::beta_hat)
        .def_readonly("beta_thresholded", &FitResult::beta_thresholded)
        .def_readonly("iterations", &FitResult::iterations)
        .def_readonly("objective_trace", &FitResult::objective_trace)
        .def_readonly("converged", &FitResult::converged)
        .def_readonly("total_walk_steps", &FitResult::total_walk_steps);

    m.def(
        "fit",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SmoothingOperator& op, const std::string& method,
           double lambda, double alpha0, const std::string& rate, double eps_tol, std::size_t max_iters,
           std::size_t block_size, std::uint64_t seed, const std::string& loss, bool literal_heat_product) {
            const auto cfg = make_config(lambda, 0.0, 1, alpha0, rate, eps_tol, max_iters, block_size, seed, loss,
                                         literal_heat_product);
            py::gil_scoped_release release;
            return fit(parse_optimizer(method), X, y, op, cfg);
        },
        py::arg("X"), py::arg("y"), py::arg("op"), py::arg("method") = "subgradient", py::arg("lambda_") = 0.1,
        py::arg("alpha0") = 0.1, py::arg("rate") = "inv_sqrt", py::arg("eps_tol") = 1e-6, py::arg("max_iters") = 5000,
        py::arg("block_size") = 0, py::arg("seed") = 0, py::arg("loss") = "squared_error",
        py::arg("literal_heat_product") = false);
    m.def("threshold_kmeans", &threshold_kmeans, py::arg("beta"));
    m.def(
        "loss_and_grad",
        [](const Eigen::VectorXd& beta, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::string& loss) {
            return loss_and_grad(beta, X, y, parse_loss(loss));
        },
        py::arg("beta"), py::arg("X"), py::arg("y"), py::arg("loss") = "squared_error");
    m.def(
        "cross_validate",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Graph& g, const std::vector<double>& lambdas,
           const std::vector<double>& ts, std::size_t folds, const std::string& method, std::size_t walks,
           double alpha0, std::size_t max_iters, std::uint64_t seed, unsigned threads) {
            const auto cfg = make_config(0.0, 0.0, walks, alpha0, "inv_sqrt", 1e-6, max_iters, 0, seed,
                                         "squared_error", false);
            CvResult r;
            {
                py::gil_scoped_release release;
                r = cross_validate(X, y, g, lambdas, ts, folds, cfg, parse_optimizer(method), threads);
            }
            py::list table;
            for (const auto& c : r.table) {
                py::dict row;
                row["lambda"] = c.lambda;
                row["t"] = c.t;
                row["mean_loss"] = c.mean_loss;
                row["fold_losses"] = c.fold_losses;
                table.append(row);
            }
            py::dict d;
            d["best_lambda"] = r.best_lambda;
            d["best_t"] = r.best_t;
            d["best_loss"] = r.best_loss;
            d["table"] = table;
            return d;
        },
        py::arg("X"), py::arg("y"), py::arg("graph"), py::arg("lambda_grid"), py::arg("t_grid"), py::arg("folds") = 5,
        py::arg("method") = "subgradient", py::arg("walks") = 100, py::arg("alpha0") = 0.1, py::arg("max_iters") = 5000,
        py::arg("seed") = 0, py::arg("threads") = 1);

    m.def(
        "sample_design",
        [](const py::dict& spec) {
            const Dataset d = sample_design_and_response(spec_from_dict(spec));
            py::dict out;
            out["X"] = d.X;
            out["y"] = d.y;
            out["beta_star"] = d.beta_star;
            out["groups"] = d.groups;
            out["sigma"] = d.sigma;
            out["graph"] = d.graph ? py::cast(*d.graph) : py::none();
            return out;
        },
        py::arg("spec"));
    m.def(
        "covariance", [](const py::dict& spec) { return make_covariance(spec_from_dict(spec)); }, py::arg("spec"));

    m.def(
        "evaluate_fit",
        [](const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_star, const Eigen::MatrixXd& X) {
            return metrics_dict(evaluate_fit(beta_hat, beta_star, X));
        },
        py::arg("beta_hat"), py::arg("beta_star"), py::arg("X"));
    m.def(
        "flow_time_prescription",
        [](const Graph& g, std::size_t n, std::optional<double> eps) {
            const auto f = flow_time_prescription(g, n, eps);
            py::dict d;
            d["t_flow"] = f.t_flow;
            d["n_step"] = f.n_step;
            d["spectral_gap"] = f.spectral_gap;
            return d;
        },
        py::arg("graph"), py::arg("n"), py::arg("epsilon") = std::nullopt);
    m.def(
        "verify_spectral_bounds",
        [](const Graph& g) {
            const auto report = verify_spectral_bounds(g);
            py::list checks;
            for (const auto& c : report.checks) {
                py::dict d;
                d["name"] = c.name;
                d["lhs"] = c.lhs;
                d["rhs"] = c.rhs;
                d["applicable"] = c.applicable;
                d["pass"] = c.pass;
                checks.append(d);
            }
            return checks;
        },
        py::arg("graph"));

    m.def(
        "run_experiment",
        [](const py::dict& config) {
            const auto dumps = py::module_::import("json").attr("dumps");
            const auto cfg = experiment_config_from_json(nlohmann::json::parse(dumps(config).cast<std::string>()));
            std::vector<RepeatOutcome> outcomes;
            {
                py::gil_scoped_release release;
                outcomes = run_experiment(cfg);
            }
            py::list rows;
            for (const auto& o : outcomes) {
                py::dict d = metrics_dict(o.metrics);
                d["lambda"] = o.lambda;
                d["t"] = o.t;
                d["beta_hat"] = o.fit.beta_hat;
                rows.append(d);
            }
            return rows;
        },
        py::arg("config"));
}
