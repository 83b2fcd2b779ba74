#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nonsimplify {

/// Invalid user input: bad parameter values, unknown names, malformed config.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Malformed data file (CSV parse failures carry row/column diagnostics).
struct CsvError : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};

/// No observation carries positive kernel weight near the requested point,
/// or the window is too thin to define a conditional distribution.
struct DegenerateNeighborhood : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The CKT denominator 1 - sum(w_i^2) fell below the guard threshold.
struct EffectiveSampleTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionTooLarge : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};

/// A measure estimate could not be completed; lists the design points that
/// failed and whether every underlying failure was of the degenerate kind.
struct EstimationError : std::runtime_error {
    std::vector<std::size_t> failed_design_points;
    bool degenerate = true;
    EstimationError(const std::string& msg, std::vector<std::size_t> failed,
                    bool degenerate_kind = true)
        : std::runtime_error(msg),
          failed_design_points(std::move(failed)),
          degenerate(degenerate_kind) {}
};

/// Non-finite intermediate or result.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace nonsimplify
