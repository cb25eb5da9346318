#pragma once

// Statistical and dense linear-algebra kernels shared by the pipeline.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smacal/error.hpp"
#include "smacal/rng.hpp"

namespace smacal::numerics {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Mean vector and variance-covariance matrix of a (fitted) multivariate
/// normal. The covariance must be symmetric with a nonnegative diagonal.
struct GaussianSummary {
  Vector mean;
  Matrix covariance;

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(mean.size()); }

  /// Throws DimensionMismatch / OutOfRange if the invariants do not hold.
  void validate() const;
};

/// Lower Cholesky factor L with L * L^T = m. Throws NotPositiveDefinite when a
/// pivot is not strictly positive and DimensionMismatch for non-square input.
Matrix cholesky(const Matrix& m);

/// log |m| for an SPD matrix, via its Cholesky factor.
double log_determinant_spd(const Matrix& m);

/// Draw mean + L z with z ~ N(0, I).
Vector mvn_sample(const GaussianSummary& g, Rng& rng);
Vector mvn_sample_factored(const Vector& mean, const Matrix& lower, Rng& rng);

/// Upper tail of an F(d1, d2) distribution. p-values below the double range
/// are still reported through log10_p.
struct TailProbability {
  double p = 1.0;
  double log10_p = 0.0;
};

TailProbability f_tail(double f_ratio, int d1, int d2);

inline double f_survival(double f_ratio, int d1, int d2) { return f_tail(f_ratio, d1, d2).p; }

/// Natural log of the regularized incomplete beta I_x(a, b). Takes x and
/// y = 1 - x separately so callers can avoid cancellation near x = 1.
double log_incomplete_beta(double a, double b, double x, double y);

/// Draw from the inverse-gamma density proportional to x^-(a+1) exp(-b/x).
double inverse_gamma_sample(double shape, double scale, Rng& rng);

/// Pearson correlation coefficient. Throws DegenerateSample if either input is
/// constant and DimensionMismatch on size mismatch or fewer than two samples.
double pearson(std::span<const double> x, std::span<const double> y);

/// D_KL(n1 || n2) for multivariate normals.
double kl_mvn(const GaussianSummary& n1, const GaussianSummary& n2);

/// Sample mean and unbiased covariance of the rows of `samples`.
GaussianSummary sample_moments(const Matrix& samples);

/// Quantile q of ascending-sorted data, linearly interpolating between order
/// statistics at position (n - 1) q.
double sorted_quantile(std::span<const double> sorted, double q);

struct BisectionOptions {
  double f_tol = 1.0;
  double x_tol = 1e-12;
  int max_iterations = 80;
};

/// Bracketed bisection on [lo, hi]. Stops when |f| < f_tol, the bracket is
/// narrower than x_tol, or after max_iterations halvings.
template <class F>
double bisect(F&& f, double lo, double hi, const BisectionOptions& opt = {}) {
  double f_lo = f(lo);
  if (f_lo == 0.0) return lo;
  const double f_hi = f(hi);
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0) || std::isnan(f_lo) || std::isnan(f_hi)) {
    throw Error(ErrorCode::root_bracket_failure,
                "no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  for (int i = 0; i < opt.max_iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    if (std::abs(f_mid) < opt.f_tol || (hi - lo) < opt.x_tol) return mid;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace smacal::numerics
