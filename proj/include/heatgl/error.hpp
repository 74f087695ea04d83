#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace heatgl {

enum class Errc {
    dimension_too_large,
    invalid_quantile,
    not_a_correlation,
    invalid_probability,
    index_out_of_range,
    length_mismatch,
    shape_mismatch,
    label_domain,
    non_finite_objective,
    grid_empty,
    fold_too_small,
    not_positive_definite,
    invalid_argument,
    parse_error,
    io_error,
};

std::string_view to_string(Errc code) noexcept;

/// Library exception; `code()` identifies the failure class.
class Error : public std::runtime_error
{
public:
    Error(Errc code, const std::string& what);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace heatgl
