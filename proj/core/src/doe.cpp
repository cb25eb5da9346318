#include "smacal/doe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "smacal/error.hpp"
#include "smacal/parallel.hpp"
#include "smacal/sma_model.hpp"

namespace smacal::doe {

FactorSpec relative_levels(sma::ParameterId id, double initial, double fraction) {
  const double delta = std::abs(initial) * fraction;
  return {id, initial - delta, initial + delta};
}

FactorSpec range_levels(sma::ParameterId id, double initial, double lower, double upper, double fraction) {
  const double delta = (upper - lower) * fraction;
  return {id, initial - delta, initial + delta};
}

sma::MaterialParameters DesignMatrix::row_parameters(std::size_t row, const sma::MaterialParameters& base) const {
  sma::MaterialParameters p = base;
  for (std::size_t j = 0; j < factors.size(); ++j) sma::set_parameter(p, factors[j].id, value(row, j));
  return p;
}

sma::MaterialParameters DesignMatrix::midpoint_parameters(const sma::MaterialParameters& base) const {
  sma::MaterialParameters p = base;
  for (const auto& f : factors) sma::set_parameter(p, f.id, f.midpoint());
  return p;
}

DesignMatrix generate_full_factorial(std::vector<FactorSpec> factors) {
  if (factors.empty() || factors.size() > max_factors) {
    throw Error(ErrorCode::too_many_factors,
                "a full factorial needs 1.." + std::to_string(max_factors) + " factors, got " +
                    std::to_string(factors.size()));
  }
  for (const auto& f : factors) {
    if (!(f.low < f.high)) {
      throw Error(ErrorCode::out_of_range,
                  "factor " + std::string(sma::parameter_name(f.id)) + " needs low < high");
    }
  }
  DesignMatrix d;
  d.factors = std::move(factors);
  d.rows.resize(std::size_t{1} << d.factors.size());
  std::iota(d.rows.begin(), d.rows.end(), std::uint32_t{0});
  return d;
}

std::vector<double> evaluate_responses(const DesignMatrix& d, const std::function<double(std::size_t)>& response,
                                       unsigned jobs) {
  std::vector<double> out(d.row_count());
  parallel_for(d.row_count(), jobs, [&](std::size_t i) { out[i] = response(i); });
  return out;
}

DesignResponses evaluate_design(const DesignMatrix& d, const sma::MaterialParameters& base,
                                const EvaluationOptions& options) {
  const sma::MaterialParameters reference = d.midpoint_parameters(base);
  if (auto why = sma::feasibility_violation(reference)) {
    throw Error(ErrorCode::infeasible_parameters, "reference midpoint: " + *why);
  }

  // Feasibility and the common grid in one pass; the covering range is closed form.
  const std::size_t n = d.row_count();
  std::vector<std::string> problems(n);
  std::vector<double> lows(n), highs(n);
  parallel_for(n, options.jobs, [&](std::size_t i) {
    const auto p = d.row_parameters(i, base);
    if (auto why = sma::feasibility_violation(p)) {
      problems[i] = *why;
      return;
    }
    std::tie(lows[i], highs[i]) = sma::covering_range(options.stress, p, options.margin);
  });
  std::ostringstream bad;
  std::size_t bad_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (problems[i].empty()) continue;
    if (bad_count < 10) bad << "\n  row " << i << ": " << problems[i];
    ++bad_count;
  }
  if (bad_count > 0) {
    if (bad_count > 10) bad << "\n  ... " << (bad_count - 10) << " more";
    throw Error(ErrorCode::infeasible_parameters,
                std::to_string(bad_count) + " of " + std::to_string(n) + " design rows are infeasible:" + bad.str());
  }
  auto [ref_lo, ref_hi] = sma::covering_range(options.stress, reference, options.margin);
  const double t_min = std::min(ref_lo, *std::min_element(lows.begin(), lows.end()));
  const double t_max = std::max(ref_hi, *std::max_element(highs.begin(), highs.end()));
  const sma::LoopGrid grid = sma::uniform_grid(t_max, t_min, options.grid_points);
  const sma::HysteresisLoop ref_loop = sma::simulate_on_grid(options.stress, grid, reference);

  DesignResponses out;
  out.values.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.grid_range = {t_min, t_max};
  parallel_for(n, options.jobs, [&](std::size_t i) {
    try {
      const auto loop = sma::simulate_on_grid(options.stress, grid, d.row_parameters(i, base));
      out.values[i] = sma::loop_distance(loop, ref_loop);
    } catch (const Error& e) {
      problems[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!problems[i].empty()) out.diagnostics.push_back("row " + std::to_string(i) + ": " + problems[i]);
  }
  return out;
}

AnovaTable anova_main_effects(const DesignMatrix& d, std::span<const double> responses) {
  const std::size_t n = d.row_count();
  const std::size_t k = d.factor_count();
  if (responses.size() != n) {
    throw Error(ErrorCode::dimension_mismatch, "expected one response per design row");
  }
  if (n < 2 || n <= k + 1) {
    throw Error(ErrorCode::dimension_mismatch, "too few rows for a main-effects model with an error term");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(responses[i])) {
      throw Error(ErrorCode::out_of_range, "response of row " + std::to_string(i) + " is not finite");
    }
  }
  const double grand = std::accumulate(responses.begin(), responses.end(), 0.0) / static_cast<double>(n);
  double ss_total = 0.0;
  for (double y : responses) ss_total += (y - grand) * (y - grand);
  if (ss_total == 0.0) throw Error(ErrorCode::degenerate_response, "all responses are identical");

  AnovaTable t;
  std::vector<std::array<double, 2>> effects(k);
  for (std::size_t j = 0; j < k; ++j) {
    double sum[2] = {0.0, 0.0};
    double count[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      const int level = d.high(i, j) ? 1 : 0;
      sum[level] += responses[i] - grand;
      count[level] += 1.0;
    }
    double ss = 0.0;
    for (int l = 0; l < 2; ++l) {
      if (count[l] > 0.0) {
        ss += sum[l] * sum[l] / count[l];
        effects[j][l] = sum[l] / count[l];
      }
    }
    AnovaRow row;
    row.source = std::string(sma::parameter_name(d.factors[j].id));
    row.sum_sq = ss;
    row.dof = 1.0;
    row.mean_sq = ss;
    t.factors.push_back(row);
  }

  // Error from the residuals of the additive fit rather than by subtraction,
  // which loses digits when the main effects explain nearly everything.
  double ss_error = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = responses[i] - grand;
    for (std::size_t j = 0; j < k; ++j) r -= effects[j][d.high(i, j) ? 1 : 0];
    ss_error += r * r;
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double df_total = static_cast<double>(n - 1);
  const double df_error = df_total - static_cast<double>(k);
  t.error = {"Error", ss_error, df_error, 0.0, nan, nan, nan};
  t.error.mean_sq = t.error.sum_sq / df_error;
  t.total = {"Total", ss_total, df_total, nan, nan, nan, nan};

  for (auto& row : t.factors) {
    if (t.error.mean_sq > 0.0) {
      row.f = row.mean_sq / t.error.mean_sq;
      const auto tail = numerics::f_tail(row.f, 1, static_cast<int>(df_error));
      row.p = tail.p;
      row.log10_p = tail.log10_p;
    } else if (row.sum_sq > 0.0) {
      row.f = std::numeric_limits<double>::infinity();
      row.p = 0.0;
      row.log10_p = -std::numeric_limits<double>::infinity();
    } else {
      row.f = 0.0;
      row.p = 1.0;
      row.log10_p = 0.0;
    }
  }
  return t;
}

Selection rank_and_select(const AnovaTable& t, double alpha) {
  std::vector<const AnovaRow*> rows;
  for (const auto& r : t.factors) rows.push_back(&r);
  // log10_p keeps the order meaningful below double underflow.
  std::stable_sort(rows.begin(), rows.end(), [](const AnovaRow* a, const AnovaRow* b) {
    if (a->log10_p != b->log10_p) return a->log10_p < b->log10_p;
    return a->f > b->f;
  });
  Selection s;
  for (const AnovaRow* r : rows) {
    s.ranked.push_back(r->source);
    if (r->p < alpha || alpha >= 1.0) s.selected.push_back(r->source);
  }
  return s;
}

}  // namespace smacal::doe
