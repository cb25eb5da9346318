#include "smacal/numerics.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace smacal::numerics {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::dimension_mismatch, std::string(what) + " is not square");
  }
}

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  constexpr int max_iterations = 100000;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) return h;
  }
  return h;
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// log I_x(a, b) by the direct continued fraction; valid for x < (a+1)/(a+b+2).
double log_incomplete_beta_direct(double a, double b, double x, double y) {
  const double front = a * std::log(x) + b * std::log(y) - log_beta(a, b) - std::log(a);
  return front + std::log(beta_continued_fraction(a, b, x));
}

}  // namespace

void GaussianSummary::validate() const {
  const auto d = mean.size();
  if (covariance.rows() != d || covariance.cols() != d) {
    throw Error(ErrorCode::dimension_mismatch, "covariance does not match mean dimension");
  }
  const double scale = std::max(covariance.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(covariance(i, i) >= 0.0)) {
      throw Error(ErrorCode::out_of_range, "covariance has a negative diagonal entry");
    }
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(covariance(i, j) - covariance(j, i)) > 1e-10 * scale) {
        throw Error(ErrorCode::out_of_range, "covariance is not symmetric");
      }
    }
  }
}

Matrix cholesky(const Matrix& m) {
  require_square(m, "matrix");
  const Eigen::Index n = m.rows();
  Matrix lower = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= lower(j, k) * lower(j, k);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      throw Error(ErrorCode::not_positive_definite,
                  "pivot " + std::to_string(j) + " is " + std::to_string(pivot));
    }
    const double diag = std::sqrt(pivot);
    lower(j, j) = diag;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / diag;
    }
  }
  return lower;
}

double log_determinant_spd(const Matrix& m) {
  const Matrix lower = cholesky(m);
  return 2.0 * lower.diagonal().array().log().sum();
}

Vector mvn_sample_factored(const Vector& mean, const Matrix& lower, Rng& rng) {
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + lower.triangularView<Eigen::Lower>() * z;
}

Vector mvn_sample(const GaussianSummary& g, Rng& rng) {
  g.validate();
  return mvn_sample_factored(g.mean, cholesky(g.covariance), rng);
}

double log_incomplete_beta(double a, double b, double x, double y) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw Error(ErrorCode::out_of_range, "incomplete beta requires a, b > 0");
  }
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  if (y <= 0.0) return 0.0;
  if (x < (a + 1.0) / (a + b + 2.0)) return log_incomplete_beta_direct(a, b, x, y);
  // Symmetry I_x(a, b) = 1 - I_y(b, a).
  const double log_complement = log_incomplete_beta_direct(b, a, y, x);
  return std::log1p(-std::exp(log_complement));
}

TailProbability f_tail(double f_ratio, int d1, int d2) {
  if (d1 < 1 || d2 < 1) {
    throw Error(ErrorCode::invalid_dof, "F distribution degrees of freedom must be >= 1");
  }
  if (std::isnan(f_ratio) || f_ratio < 0.0) {
    throw Error(ErrorCode::out_of_range, "F ratio must be >= 0");
  }
  if (f_ratio == 0.0) return {1.0, 0.0};
  if (std::isinf(f_ratio)) return {0.0, -std::numeric_limits<double>::infinity()};

  // P(F > f) = I_x(d2/2, d1/2) with x = d2 / (d2 + d1 f).
  const double n1 = d1;
  const double n2 = d2;
  const double denom = n2 + n1 * f_ratio;
  const double x = n2 / denom;
  const double y = n1 * f_ratio / denom;
  const double log_p = log_incomplete_beta(0.5 * n2, 0.5 * n1, x, y);
  return {std::exp(log_p), log_p / std::numbers::ln10};
}

double inverse_gamma_sample(double shape, double scale, Rng& rng) {
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale)) {
    throw Error(ErrorCode::invalid_hyperparameter, "inverse-gamma needs shape > 0 and scale > 0");
  }
  double g = rng.gamma(shape);
  // Extremely small shapes can underflow the gamma draw to zero.
  while (g <= 0.0) g = rng.gamma(shape);
  return scale / g;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::dimension_mismatch, "pearson needs two equal-length samples of size >= 2");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::degenerate_sample, "pearson of a constant sample");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double kl_mvn(const GaussianSummary& n1, const GaussianSummary& n2) {
  if (n1.dimension() != n2.dimension()) {
    throw Error(ErrorCode::dimension_mismatch, "kl_mvn needs equal dimensions");
  }
  n1.validate();
  n2.validate();
  const Matrix l1 = cholesky(n1.covariance);
  const Matrix l2 = cholesky(n2.covariance);
  const auto l2_view = l2.triangularView<Eigen::Lower>();

  const double log_det1 = 2.0 * l1.diagonal().array().log().sum();
  const double log_det2 = 2.0 * l2.diagonal().array().log().sum();
  // tr(S2^-1 S1) = ||L2^-1 L1||_F^2
  const Matrix whitened = l2_view.solve(l1);
  const double trace = whitened.squaredNorm();
  const Vector diff = n2.mean - n1.mean;
  const double mahalanobis = l2_view.solve(diff).squaredNorm();
  const double d = static_cast<double>(n1.dimension());
  const double kl = 0.5 * (log_det2 - log_det1 - d + trace + mahalanobis);
  return std::max(0.0, kl);
}

GaussianSummary sample_moments(const Matrix& samples) {
  if (samples.rows() < 2) {
    throw Error(ErrorCode::degenerate_sample, "need at least two samples for a covariance");
  }
  GaussianSummary g;
  g.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - g.mean.transpose();
  g.covariance = (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);
  g.covariance = 0.5 * (g.covariance + g.covariance.transpose()).eval();
  return g;
}

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::too_few_samples, "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::out_of_range, "quantile level outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace smacal::numerics
