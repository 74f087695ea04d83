#include <heatgl/error.hpp>

namespace heatgl {

std::string_view to_string(Errc code) noexcept
{
    switch (code) {
        case Errc::dimension_too_large: return "DimensionTooLarge";
        case Errc::invalid_quantile: return "InvalidQuantile";
        case Errc::not_a_correlation: return "NotACorrelation";
        case Errc::invalid_probability: return "InvalidProbability";
        case Errc::index_out_of_range: return "IndexOutOfRange";
        case Errc::length_mismatch: return "LengthMismatch";
        case Errc::shape_mismatch: return "ShapeMismatch";
        case Errc::label_domain: return "LabelDomain";
        case Errc::non_finite_objective: return "NonFiniteObjective";
        case Errc::grid_empty: return "GridEmpty";
        case Errc::fold_too_small: return "FoldTooSmall";
        case Errc::not_positive_definite: return "NotPositiveDefinite";
        case Errc::invalid_argument: return "InvalidArgument";
        case Errc::parse_error: return "ParseError";
        case Errc::io_error: return "IoError";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{}

} // namespace heatgl
