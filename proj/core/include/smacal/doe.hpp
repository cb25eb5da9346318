#pragma once

// Two-level full factorial screening with a main-effects ANOVA.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "smacal/material.hpp"
#include "smacal/numerics.hpp"
#include "smacal/sma_model.hpp"

namespace smacal::doe {

/// One factor with its two levels in engineering units.
struct FactorSpec {
  sma::ParameterId id;
  double low = 0.0;
  double high = 0.0;

  double midpoint() const noexcept { return 0.5 * (low + high); }
};

/// initial * (1 -/+ fraction).
FactorSpec relative_levels(sma::ParameterId id, double initial, double fraction);

/// initial -/+ fraction * (upper - lower).
FactorSpec range_levels(sma::ParameterId id, double initial, double lower, double upper, double fraction);

inline constexpr std::size_t max_factors = 20;

/// Rows hold level bitmasks; bit (N - 1 - j) is the level of factor j, so a
/// freshly generated design is in lexicographic order with factor 0 slowest.
struct DesignMatrix {
  std::vector<FactorSpec> factors;
  std::vector<std::uint32_t> rows;

  std::size_t factor_count() const noexcept { return factors.size(); }
  std::size_t row_count() const noexcept { return rows.size(); }
  bool high(std::size_t row, std::size_t factor) const noexcept {
    return (rows[row] >> (factors.size() - 1 - factor)) & 1u;
  }
  double value(std::size_t row, std::size_t factor) const noexcept {
    return high(row, factor) ? factors[factor].high : factors[factor].low;
  }
  sma::MaterialParameters row_parameters(std::size_t row, const sma::MaterialParameters& base) const;
  /// Base parameters with every factor at the mean of its levels.
  sma::MaterialParameters midpoint_parameters(const sma::MaterialParameters& base) const;
};

/// Throws TooManyFactors outside 1..max_factors and OutOfRange when a factor
/// has low >= high.
DesignMatrix generate_full_factorial(std::vector<FactorSpec> factors);

struct EvaluationOptions {
  double stress = 150e6;  // Pa
  std::size_t grid_points = sma::default_grid_points;
  double margin = 5.0;  // K beyond the widest loop in the design
  unsigned jobs = 0;
};

struct DesignResponses {
  std::vector<double> values;            // NaN where a row failed
  std::vector<std::string> diagnostics;  // one entry per failed row
  std::vector<double> grid_range;        // {T_min, T_max}
};

/// Response of each row is the loop distance to the midpoint-reference loop,
/// both simulated on one uniform grid covering every loop in the design.
/// Throws InfeasibleParameters, listing offending rows, if any row or the
/// reference violates the material invariants.
DesignResponses evaluate_design(const DesignMatrix& d, const sma::MaterialParameters& base,
                                const EvaluationOptions& options = {});

/// Responses from an arbitrary per-row function, evaluated in parallel.
std::vector<double> evaluate_responses(const DesignMatrix& d, const std::function<double(std::size_t)>& response,
                                       unsigned jobs = 0);

struct AnovaRow {
  std::string source;
  double sum_sq = 0.0;
  double dof = 0.0;
  double mean_sq = 0.0;
  double f = 0.0;       // NaN for Error and Total
  double p = 1.0;       // NaN for Error and Total
  double log10_p = 0.0; // NaN for Error and Total
};

struct AnovaTable {
  std::vector<AnovaRow> factors;
  AnovaRow error;
  AnovaRow total;
};

/// Main-effects ANOVA with one observation per cell; interactions are pooled
/// into Error. Throws DegenerateResponse when all responses are equal and
/// OutOfRange when a response is not finite.
AnovaTable anova_main_effects(const DesignMatrix& d, std::span<const double> responses);

struct Selection {
  std::vector<std::string> ranked;    // ascending p
  std::vector<std::string> selected;  // p < alpha
};

/// Selects factors with p < alpha; alpha >= 1 selects every factor.
Selection rank_and_select(const AnovaTable& t, double alpha);

}  // namespace smacal::doe
