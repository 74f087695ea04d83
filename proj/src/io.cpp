#include <heatgl/io.hpp>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <heatgl/error.hpp>

namespace heatgl {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

[[noreturn]] void parse_fail(std::string_view source, std::size_t line, std::size_t column, const std::string& what)
{
    std::ostringstream msg;
    msg << source << ": line " << line;
    if (column) msg << ", column " << column;
    msg << ": " << what;
    throw Error(Errc::parse_error, msg.str());
}

} // namespace

CsvTable read_csv(std::istream& in, std::string_view source)
{
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        const auto cells = split_commas(line);
        if (!have_header) {
            for (std::size_t c = 0; c < cells.size(); ++c) {
                if (cells[c].empty()) parse_fail(source, line_no, c + 1, "empty header name");
                table.header.emplace_back(cells[c]);
            }
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            parse_fail(source, line_no, 0,
                       "expected " + std::to_string(table.header.size()) + " fields, found " + std::to_string(cells.size()));
        }
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto cell = cells[c];
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            if (!cell.empty() && *first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, row[c]);
            if (cell.empty() || ec != std::errc{} || ptr != last) {
                parse_fail(source, line_no, c + 1, "not a number: '" + std::string(cell) + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    if (!have_header) parse_fail(source, line_no, 0, "missing header row");
    table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.header.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return table;
}

CsvTable read_csv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open '" + path + "'");
    return read_csv(in, path);
}

RegressionData split_response(const CsvTable& table)
{
    if (table.header.size() < 2) throw Error(Errc::parse_error, "need a response column and at least one predictor");
    if (table.values.rows() < 2) throw Error(Errc::parse_error, "need at least two data rows");
    RegressionData out;
    out.y = table.values.col(0);
    out.X = table.values.rightCols(table.values.cols() - 1);
    out.names.assign(table.header.begin() + 1, table.header.end());
    return out;
}

std::string format_double(double x)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::MatrixXd& values)
{
    if (static_cast<Eigen::Index>(header.size()) != values.cols()) throw Error(Errc::shape_mismatch, "header width differs from values");
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values(r, c));
        out << '\n';
    }
}

void write_dataset_csv(std::ostream& out, const Eigen::VectorXd& y, const Eigen::MatrixXd& X)
{
    if (y.size() != X.rows()) throw Error(Errc::shape_mismatch, "y length differs from X rows");
    std::vector<std::string> header{"y"};
    for (Eigen::Index j = 0; j < X.cols(); ++j) header.push_back("x" + std::to_string(j + 1));
    Eigen::MatrixXd values(X.rows(), X.cols() + 1);
    values << y, X;
    write_csv(out, header, values);
}

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v)
{
    return {v.data(), v.data() + v.size()};
}

} // namespace

nlohmann::json to_json(const FitResult& result)
{
    return {
        {"beta_hat", to_vector(result.beta_hat)},
        {"beta_thresholded", to_vector(result.beta_thresholded)},
        {"iterations", result.iterations},
        {"converged", result.converged},
        {"objective_trace", result.objective_trace},
        {"total_walk_steps", result.total_walk_steps},
    };
}

nlohmann::json to_json(const MetricsReport& report)
{
    return {
        {"prediction_error", report.prediction_error},
        {"estimation_error", report.estimation_error},
        {"sensitivity", report.sensitivity},
        {"specificity", report.specificity},
    };
}

nlohmann::json to_json(const CvResult& result)
{
    nlohmann::json table = nlohmann::json::array();
    for (const auto& cell : result.table) {
        table.push_back({{"lambda", cell.lambda}, {"t", cell.t}, {"mean_loss", cell.mean_loss}, {"fold_losses", cell.fold_losses}});
    }
    return {{"best_lambda", result.best_lambda}, {"best_t", result.best_t}, {"best_loss", result.best_loss}, {"table", table}};
}

nlohmann::json to_json(const FitConfig& cfg)
{
    return {
        {"lambda", cfg.lambda},
        {"t", cfg.t},
        {"walks", cfg.walks},
        {"alpha0", cfg.alpha0},
        {"rate", to_string(cfg.rate)},
        {"eps_tol", cfg.eps_tol},
        {"max_iters", cfg.max_iters},
        {"block_size", cfg.block_size},
        {"eps_den", cfg.eps_den},
        {"seed", cfg.seed},
        {"loss", to_string(cfg.loss)},
        {"literal_heat_product", cfg.literal_heat_product},
    };
}

nlohmann::json to_json(const DesignSpec& spec)
{
    nlohmann::json beta = nlohmann::json::array();
    for (const auto& scheme : spec.beta) {
        if (scheme.kind == BetaScheme::Kind::zero) {
            beta.push_back("zero");
        } else {
            beta.push_back({scheme.lo, scheme.hi});
        }
    }
    nlohmann::json j{
        {"kind", to_string(spec.kind)},
        {"sizes", spec.sizes},
        {"rho", spec.rho},
        {"a", spec.a},
        {"b", spec.b},
        {"n", spec.n},
        {"noise_sigma", spec.noise_sigma},
        {"beta", beta},
        {"response", to_string(spec.response)},
        {"seed", spec.seed},
    };
    j["mass"] = spec.mass ? nlohmann::json(*spec.mass) : nlohmann::json(nullptr);
    return j;
}

namespace {

template <class T>
void take(const nlohmann::json& j, const char* key, T& field)
{
    if (auto it = j.find(key); it != j.end() && !it->is_null()) field = it->get<T>();
}

} // namespace

FitConfig fit_config_from_json(const nlohmann::json& j, FitConfig cfg)
{
    if (!j.is_object()) throw Error(Errc::parse_error, "fit section must be an object");
    try {
        take(j, "lambda", cfg.lambda);
        take(j, "t", cfg.t);
        take(j, "walks", cfg.walks);
        take(j, "alpha0", cfg.alpha0);
        take(j, "eps_tol", cfg.eps_tol);
        take(j, "max_iters", cfg.max_iters);
        take(j, "block_size", cfg.block_size);
        take(j, "eps_den", cfg.eps_den);
        take(j, "seed", cfg.seed);
        take(j, "literal_heat_product", cfg.literal_heat_product);
        if (j.contains("rate")) cfg.rate = parse_rate(j.at("rate").get<std::string>());
        if (j.contains("loss")) cfg.loss = parse_loss(j.at("loss").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, std::string("fit section: ") + e.what());
    }
    return cfg;
}

DesignSpec design_spec_from_json(const nlohmann::json& j, DesignSpec spec)
{
    if (!j.is_object()) throw Error(Errc::parse_error, "design section must be an object");
    try {
        if (j.contains("kind")) spec.kind = parse_design_kind(j.at("kind").get<std::string>());
        take(j, "sizes", spec.sizes);
        take(j, "rho", spec.rho);
        take(j, "a", spec.a);
        take(j, "b", spec.b);
        take(j, "n", spec.n);
        take(j, "noise_sigma", spec.noise_sigma);
        take(j, "seed", spec.seed);
        if (auto it = j.find("mass"); it != j.end()) {
            spec.mass = it->is_null() ? std::nullopt : std::optional<double>(it->get<double>());
        }
        if (j.contains("response")) spec.response = parse_loss(j.at("response").get<std::string>());
        if (auto it = j.find("beta"); it != j.end() && !it->is_null()) {
            spec.beta.clear();
            for (const auto& entry : *it) {
                if (entry.is_string() && entry.get<std::string>() == "zero") {
                    spec.beta.push_back(BetaScheme::zero());
                } else if (entry.is_array() && entry.size() == 2) {
                    spec.beta.push_back(BetaScheme::uniform(entry[0].get<double>(), entry[1].get<double>()));
                } else {
                    throw Error(Errc::parse_error, "beta entries are \"zero\" or [lo, hi]");
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, std::string("design section: ") + e.what());
    }
    return spec;
}

std::string metrics_csv_row(const MetricsReport& report)
{
    return format_double(report.prediction_error) + "," + format_double(report.estimation_error) + "," +
           format_double(report.sensitivity) + "," + format_double(report.specificity);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, std::string_view text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write '" + path + "'");
    out << text;
    if (!out) throw Error(Errc::io_error, "write failed for '" + path + "'");
}

} // namespace heatgl
