#include "smacal/error.hpp"

namespace smacal {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::not_positive_definite: return "NotPositiveDefinite";
    case ErrorCode::invalid_dof: return "InvalidDof";
    case ErrorCode::invalid_hyperparameter: return "InvalidHyperparameter";
    case ErrorCode::degenerate_sample: return "DegenerateSample";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::out_of_range: return "OutOfRange";
    case ErrorCode::undefined_direction: return "UndefinedDirection";
    case ErrorCode::infeasible_parameters: return "InfeasibleParameters";
    case ErrorCode::incomplete_transformation: return "IncompleteTransformation";
    case ErrorCode::root_bracket_failure: return "RootBracketFailure";
    case ErrorCode::grid_mismatch: return "GridMismatch";
    case ErrorCode::too_many_factors: return "TooManyFactors";
    case ErrorCode::degenerate_response: return "DegenerateResponse";
    case ErrorCode::no_plateau: return "NoPlateau";
    case ErrorCode::too_few_samples: return "TooFewSamples";
    case ErrorCode::gradient_failure: return "GradientFailure";
    case ErrorCode::feasibility_exhausted: return "FeasibilityExhausted";
    case ErrorCode::chain_aborted: return "ChainAborted";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::validation_error: return "ValidationError";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

}  // namespace smacal
