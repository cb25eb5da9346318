#include "smacal/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smacal/error.hpp"
#include "smacal/parallel.hpp"

namespace smacal::prop {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

// Means taken relative to the first row, so identical columns come out exact
// and the mean stays inside [min, max].
Vector column_means(const Matrix& m) {
  const Vector first = m.row(0).transpose();
  Vector mean = first + (m.rowwise() - first.transpose()).colwise().mean().transpose();
  return mean.cwiseMax(m.colwise().minCoeff().transpose()).cwiseMin(m.colwise().maxCoeff().transpose());
}

ConfidenceBand split_band(const PointwiseBand& b, const sma::LoopGrid& grid, double stress, BandMethod method,
                          double coverage) {
  ConfidenceBand out;
  out.stress = stress;
  out.method = method;
  out.coverage = coverage;
  const std::size_t nc = grid.cooling.size();
  for (std::size_t i = 0; i < nc; ++i) {
    out.cooling.push_back({grid.cooling[i], b.mean[idx(i)], b.lower[idx(i)], b.upper[idx(i)]});
  }
  for (std::size_t i = 0; i < grid.heating.size(); ++i) {
    const auto k = idx(nc + i);
    out.heating.push_back({grid.heating[i], b.mean[k], b.lower[k], b.upper[k]});
  }
  return out;
}

}  // namespace

Jacobian finite_difference_jacobian(const VectorModel& f, const Vector& theta, const GradientOptions& options) {
  const auto d = static_cast<std::size_t>(theta.size());
  Jacobian j;
  j.value = f(theta);
  j.g.resize(j.value.size(), idx(d));
  std::vector<std::string> failures(d);
  parallel_for(d, options.jobs, [&](std::size_t i) {
    const auto ii = idx(i);
    const double scale = options.scale.size() > 0 ? options.scale[ii] : 1.0;
    const double h = options.relative_step * std::max(std::abs(theta[ii]), scale);
    auto try_eval = [&](double x, std::optional<Vector>& out) {
      if (options.lower.size() > 0 && x < options.lower[ii]) return;
      if (options.upper.size() > 0 && x > options.upper[ii]) return;
      Vector t = theta;
      t[ii] = x;
      try {
        out = f(t);
      } catch (const Error&) {
      }
    };
    std::optional<Vector> plus, minus;
    try_eval(theta[ii] + h, plus);
    try_eval(theta[ii] - h, minus);
    if (plus && minus) {
      j.g.col(ii) = (*plus - *minus) / (2.0 * h);
    } else if (plus) {
      j.g.col(ii) = (*plus - j.value) / h;
    } else if (minus) {
      j.g.col(ii) = (j.value - *minus) / h;
    } else {
      failures[i] = "perturbed solves failed on both sides of parameter " + std::to_string(i);
    }
  });
  for (const auto& msg : failures) {
    if (!msg.empty()) throw Error(ErrorCode::gradient_failure, msg);
  }
  return j;
}

Vector fosm_variance(const Matrix& jacobian, const Matrix& covariance) {
  if (jacobian.cols() != covariance.rows() || covariance.rows() != covariance.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "Jacobian and covariance shapes disagree");
  }
  return (jacobian * covariance).cwiseProduct(jacobian).rowwise().sum().cwiseMax(0.0);
}

double quadratic_form_double_sum(const Vector& g, const Matrix& v) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    for (Eigen::Index j = 0; j < g.size(); ++j) s += g[i] * g[j] * v(i, j);
  }
  return s;
}

PointwiseBand fosm_pointwise(const VectorModel& f, const numerics::GaussianSummary& posterior,
                             const GradientOptions& options) {
  posterior.validate();
  const Jacobian j = finite_difference_jacobian(f, posterior.mean, options);
  const Vector sd = fosm_variance(j.g, posterior.covariance).cwiseSqrt();
  return {j.value, j.value - 2.0 * sd, j.value + 2.0 * sd};
}

PointwiseBand direct_pointwise(const Matrix& outputs, double coverage) {
  if (!(coverage > 0.0 && coverage < 1.0)) throw Error(ErrorCode::out_of_range, "coverage must lie in (0, 1)");
  if (outputs.rows() < 1) throw Error(ErrorCode::too_few_samples, "no samples to reduce");
  const double tail = 0.5 * (1.0 - coverage);
  PointwiseBand b;
  b.mean = column_means(outputs);
  b.lower.resize(outputs.cols());
  b.upper.resize(outputs.cols());
  std::vector<double> column(static_cast<std::size_t>(outputs.rows()));
  for (Eigen::Index k = 0; k < outputs.cols(); ++k) {
    for (Eigen::Index i = 0; i < outputs.rows(); ++i) column[static_cast<std::size_t>(i)] = outputs(i, k);
    std::sort(column.begin(), column.end());
    b.lower[k] = std::min(numerics::sorted_quantile(column, tail), b.mean[k]);
    b.upper[k] = std::max(numerics::sorted_quantile(column, 1.0 - tail), b.mean[k]);
  }
  return b;
}

PointwiseBand direct_curvewise(const Matrix& outputs, std::span<const double> rank_key, double coverage) {
  if (!(coverage > 0.0 && coverage < 1.0)) throw Error(ErrorCode::out_of_range, "coverage must lie in (0, 1)");
  const auto n = static_cast<std::size_t>(outputs.rows());
  if (rank_key.size() != n) throw Error(ErrorCode::dimension_mismatch, "one rank key per curve is required");
  if (n == 0) throw Error(ErrorCode::too_few_samples, "no samples to reduce");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rank_key[a] < rank_key[b]; });
  const auto drop = static_cast<std::size_t>(std::floor(0.5 * (1.0 - coverage) * static_cast<double>(n)));
  const std::size_t kept = n - 2 * drop;
  Matrix rows(idx(kept), outputs.cols());
  for (std::size_t r = 0; r < kept; ++r) rows.row(idx(r)) = outputs.row(idx(order[drop + r]));
  PointwiseBand b;
  b.mean = column_means(rows);
  b.lower = rows.colwise().minCoeff().transpose();
  b.upper = rows.colwise().maxCoeff().transpose();
  return b;
}

std::string_view to_string(BandMethod m) noexcept { return m == BandMethod::fosm ? "fosm" : "direct"; }

std::string_view to_string(BandMode m) noexcept { return m == BandMode::pointwise ? "pointwise" : "curvewise"; }

Vector loop_strains(const ParameterSpace& space, const Vector& theta, double stress, const sma::LoopGrid& grid) {
  const auto p = sma::apply_parameters(space.base, space.ids,
                                       std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())));
  const auto loop = sma::simulate_at(stress, grid, p);
  Vector out(idx(loop.cooling.size() + loop.heating.size()));
  Eigen::Index k = 0;
  for (const auto& pt : loop.cooling) out[k++] = pt.eps_t;
  for (const auto& pt : loop.heating) out[k++] = pt.eps_t;
  return out;
}

ConfidenceBand fosm_band(const numerics::GaussianSummary& posterior, const ParameterSpace& space, double stress,
                         const sma::LoopGrid& grid, const FosmOptions& options) {
  if (posterior.dimension() != space.ids.size()) {
    throw Error(ErrorCode::dimension_mismatch, "posterior dimension differs from the parameter list");
  }
  const auto p = sma::apply_parameters(space.base, space.ids,
                                       std::span<const double>(posterior.mean.data(), posterior.dimension()));
  if (auto why = sma::feasibility_violation(p)) {
    throw Error(ErrorCode::infeasible_parameters, "posterior mean: " + *why);
  }
  GradientOptions g;
  g.relative_step = options.relative_step;
  g.lower = space.lower;
  g.upper = space.upper;
  g.jobs = options.jobs;
  g.scale = posterior.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  // Feasibility of the perturbed point is checked by the solver itself.
  const auto f = [&](const Vector& theta) { return loop_strains(space, theta, stress, grid); };
  return split_band(fosm_pointwise(f, posterior, g), grid, stress, BandMethod::fosm, 0.95);
}

ConfidenceBand direct_band(const Matrix& samples, const ParameterSpace& space, double stress,
                           const sma::LoopGrid& grid, const DirectOptions& options) {
  const auto n = static_cast<std::size_t>(samples.rows());
  if (n < min_direct_samples) {
    throw Error(ErrorCode::too_few_samples, "direct propagation needs at least " +
                                                std::to_string(min_direct_samples) + " samples, got " +
                                                std::to_string(n));
  }
  if (static_cast<std::size_t>(samples.cols()) != space.ids.size()) {
    throw Error(ErrorCode::dimension_mismatch, "sample width differs from the parameter list");
  }
  const std::size_t m = std::min(n, std::max(options.max_samples, min_direct_samples));
  std::vector<std::size_t> rows(m);
  for (std::size_t i = 0; i < m; ++i) rows[i] = i * n / m;

  const auto points = idx(grid.cooling.size() + grid.heating.size());
  Matrix outputs(idx(m), points);
  parallel_for(m, options.jobs, [&](std::size_t i) {
    outputs.row(idx(i)) = loop_strains(space, samples.row(idx(rows[i])).transpose(), stress, grid).transpose();
  });

  PointwiseBand b;
  if (options.mode == BandMode::pointwise) {
    b = direct_pointwise(outputs, options.coverage);
  } else {
    // Plateau strain: the coldest cooling point.
    std::vector<double> key(m);
    const auto coldest = idx(grid.cooling.size() - 1);
    for (std::size_t i = 0; i < m; ++i) key[i] = outputs(idx(i), coldest);
    b = direct_curvewise(outputs, key, options.coverage);
  }
  return split_band(b, grid, stress, BandMethod::direct, options.coverage);
}

std::vector<double> band_sigma(const std::vector<BandPoint>& branch) {
  std::vector<double> s;
  s.reserve(branch.size());
  for (const auto& p : branch) s.push_back(0.5 * (p.upper - p.mean));
  return s;
}

}  // namespace smacal::prop
