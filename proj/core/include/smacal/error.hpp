#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smacal {

enum class ErrorCode {
  not_positive_definite,
  invalid_dof,
  invalid_hyperparameter,
  degenerate_sample,
  dimension_mismatch,
  out_of_range,
  undefined_direction,
  infeasible_parameters,
  incomplete_transformation,
  root_bracket_failure,
  grid_mismatch,
  too_many_factors,
  degenerate_response,
  no_plateau,
  too_few_samples,
  gradient_failure,
  feasibility_exhausted,
  chain_aborted,
  parse_error,
  validation_error,
  io_error,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so that
// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace smacal
