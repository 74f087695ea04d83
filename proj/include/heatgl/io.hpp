#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include <heatgl/designs.hpp>
#include <heatgl/diagnostics.hpp>
#include <heatgl/optimize.hpp>

namespace heatgl {

struct CsvTable
{
    std::vector<std::string> header;
    Eigen::MatrixXd values; // rows x header.size()
};

/// Comma-separated, header row required, '.' decimal. Errors carry the
/// 1-based line and column of the offending cell.
CsvTable read_csv(std::istream& in, std::string_view source = "<stream>");
CsvTable read_csv_file(const std::string& path);

struct RegressionData
{
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    std::vector<std::string> names; // predictor column names
};

/// First column y, remaining columns X; requires n >= 2 and p >= 1.
RegressionData split_response(const CsvTable& table);

/// Shortest round-trip decimal form.
std::string format_double(double x);

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::MatrixXd& values);
void write_dataset_csv(std::ostream& out, const Eigen::VectorXd& y, const Eigen::MatrixXd& X);

nlohmann::json to_json(const FitResult& result);
nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const CvResult& result);
nlohmann::json to_json(const FitConfig& cfg);
nlohmann::json to_json(const DesignSpec& spec);

/// Missing keys keep the defaults of the passed-in value.
FitConfig fit_config_from_json(const nlohmann::json& j, FitConfig base = {});
DesignSpec design_spec_from_json(const nlohmann::json& j, DesignSpec base = {});

inline constexpr std::string_view metrics_csv_header = "prediction_error,estimation_error,sensitivity,specificity";

/// One row in column order prediction, estimation, sensitivity, specificity.
std::string metrics_csv_row(const MetricsReport& report);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

} // namespace heatgl
