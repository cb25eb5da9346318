#pragma once

// Adaptive Metropolis-within-Gibbs calibration.
//
// The chain alternates a random-walk Metropolis step on the parameter vector
// (sigma2 held fixed) with an exact inverse-gamma draw of sigma2 (parameters
// held fixed). The likelihood treats each residual as N(0, sigma2).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smacal/dataset.hpp"
#include "smacal/material.hpp"
#include "smacal/numerics.hpp"
#include "smacal/rng.hpp"

namespace smacal::calib {

using numerics::Matrix;
using numerics::Vector;

struct ParameterPrior {
  sma::ParameterId id;
  double lower = 0.0;  // engineering units
  double upper = 0.0;
  double initial = 0.0;
};

/// Box prior over the calibrated parameters, optionally multiplied by a
/// Gaussian density (truncated to the box), plus the inverse-gamma
/// hyper-prior of the noise variance.
class PriorSpec {
 public:
  PriorSpec() = default;
  explicit PriorSpec(std::vector<ParameterPrior> parameters, double a0 = 1e-3, double b0 = 1e-3);

  std::size_t dimension() const noexcept { return parameters_.size(); }
  const std::vector<ParameterPrior>& parameters() const noexcept { return parameters_; }
  std::vector<sma::ParameterId> ids() const;
  std::vector<std::string> names() const;
  Vector lower() const;
  Vector upper() const;
  Vector initial() const;
  double a0() const noexcept { return a0_; }
  double b0() const noexcept { return b0_; }

  /// Replaces the flat density inside the box by N(mean, covariance).
  void set_gaussian(const numerics::GaussianSummary& g);
  const std::optional<numerics::GaussianSummary>& gaussian() const noexcept { return gaussian_; }

  bool in_bounds(const Vector& theta) const;
  /// Unnormalized log density; -inf outside the box.
  double log_density(const Vector& theta) const;

  /// Throws ValidationError / InvalidHyperparameter.
  void validate() const;

 private:
  std::vector<ParameterPrior> parameters_;
  double a0_ = 1e-3;
  double b0_ = 1e-3;
  std::optional<numerics::GaussianSummary> gaussian_;
  Matrix gaussian_lower_;
};

/// Result of evaluating a model at one parameter vector.
struct Evaluation {
  double log_prior = 0.0;  // -inf marks an infeasible point
  std::vector<double> residuals;
  std::string diagnostic;  // why log_prior is -inf, if it is
  bool solver_failure = false;

  bool feasible() const noexcept { return log_prior != -std::numeric_limits<double>::infinity(); }
};

/// Anything the sampler can calibrate.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::size_t dimension() const = 0;
  virtual Evaluation evaluate(const Vector& theta) const = 0;
};

/// sum_i [-r_i^2 / (2 sigma2) - ln(2 pi sigma2) / 2]; throws
/// InvalidHyperparameter unless sigma2 > 0.
double log_likelihood(std::span<const double> residuals, double sigma2);

enum class ResidualMode {
  per_dataset,  // one loop distance per dataset
  per_point,    // one strain difference per measured point
};

struct SmaModelOptions {
  ResidualMode residuals = ResidualMode::per_dataset;
  unsigned jobs = 1;  // concurrent dataset solves inside one evaluation
};

/// Calibrates a subset of MaterialParameters against isobaric datasets.
class SmaCalibrationModel : public Model {
 public:
  SmaCalibrationModel(PriorSpec prior, sma::MaterialParameters base, std::vector<ExperimentalDataset> datasets,
                      SmaModelOptions options = {});

  std::size_t dimension() const override { return prior_.dimension(); }
  Evaluation evaluate(const Vector& theta) const override;

  const PriorSpec& prior() const noexcept { return prior_; }
  sma::MaterialParameters parameters_at(const Vector& theta) const;

 private:
  PriorSpec prior_;
  std::vector<sma::ParameterId> ids_;
  sma::MaterialParameters base_;
  std::vector<ExperimentalDataset> datasets_;
  SmaModelOptions options_;
};

/// Metropolis-Hastings accept test on log densities. A non-finite candidate
/// is always rejected.
bool mh_accept(double log_current, double log_candidate, double log_hastings, Rng& rng);

/// Draw from IG(a0 + n/2, b0 + sum r^2 / 2).
double gibbs_update_sigma2(std::span<const double> residuals, double a0, double b0, Rng& rng);

/// Welford accumulator for the adaptive proposal.
class RunningMoments {
 public:
  explicit RunningMoments(std::size_t d) : mean_(Vector::Zero(static_cast<Eigen::Index>(d))),
                                           m2_(Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))) {}
  void add(const Vector& x);
  std::size_t count() const noexcept { return n_; }
  const Vector& mean() const noexcept { return mean_; }
  /// Unbiased covariance; zero with fewer than two samples.
  Matrix covariance() const;

 private:
  std::size_t n_ = 0;
  Vector mean_;
  Matrix m2_;
};

inline constexpr double adaptive_epsilon = 1e-10;

inline double adaptive_scale(std::size_t d) { return 2.4 * 2.4 / static_cast<double>(d); }

/// s_d Cov + s_d eps I, or v0 when the history has no spread or the result
/// is not positive definite.
Matrix adapt_proposal(const RunningMoments& history, const Matrix& v0);
Matrix adapt_proposal(const Matrix& samples, const Matrix& v0);

/// diag((0.01 (upper - lower))^2).
Matrix default_initial_proposal(const PriorSpec& prior);

struct ChainConfig {
  std::size_t n_steps = 200000;
  std::uint64_t seed = 1;
  std::size_t adapt_interval = 100;
  std::size_t adapt_start = 1000;
  std::optional<double> fixed_sigma2;
  std::optional<Matrix> initial_proposal;  // defaults to default_initial_proposal
  std::optional<Vector> initial_theta;     // defaults to the prior initial values
  std::filesystem::path checkpoint_path;   // empty disables checkpoints
  std::size_t checkpoint_interval = 10000;
  /// Also tune a global factor on the proposal covariance by a vanishing
  /// stochastic-approximation step toward target_acceptance. Off by default.
  bool scale_adaptation = false;
  double target_acceptance = 0.234;
};

struct Chain {
  std::vector<std::string> names;
  Matrix samples;              // (n_steps + 1) x d
  std::vector<double> sigma2;  // n_steps + 1
  std::vector<std::uint8_t> accepted;  // n_steps + 1, entry 0 is 1
  std::uint64_t seed = 0;
  std::vector<std::size_t> adaptation_steps;
  std::size_t failed_evaluations = 0;
  std::string last_failure;
  double proposal_scale = 1.0;  // final global factor; 1 without scale adaptation

  std::size_t size() const noexcept { return static_cast<std::size_t>(samples.rows()); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(samples.cols()); }
  double acceptance_rate(std::size_t from = 1) const;
};

/// State carried between steps. Residuals are cached so a sigma2 update never
/// re-solves the model.
struct ChainState {
  Vector theta;
  Evaluation evaluation;
  double sigma2 = 1.0;
};

/// One random-walk step with proposal N(theta, L L^T). Returns true if the
/// candidate was accepted.
bool mh_step(ChainState& state, const Matrix& proposal_lower, const Model& model, Rng& rng,
             std::string* failure = nullptr);

/// Throws ValidationError when the initial point is infeasible and
/// ChainAborted when a checkpoint cannot be written.
Chain run_chain(const Model& model, const PriorSpec& prior, const ChainConfig& config);

struct BurnInOptions {
  double window_fraction = 0.1;
  double tolerance = 0.1;
  double settle_fraction = 0.25;  // leading part of the window left untracked
  std::size_t stride = 0;         // 0 = length / 1000
};

/// Smallest index after which every running mean settles: for candidate i
/// the running mean restarted at i, tracked over [i + settle W, i + W],
/// stays within tolerance * SD, with SD taken from the last half of the
/// chain. Throws TooFewSamples below 1000 rows and NoPlateau when no
/// candidate qualifies.
std::size_t detect_burn_in(const Matrix& samples, const BurnInOptions& options = {});

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
};

struct JointHistogram {
  std::size_t first = 0;
  std::size_t second = 0;
  std::vector<double> x_edges;
  std::vector<double> y_edges;
  std::vector<std::size_t> counts;  // row-major, x outer
};

struct SummaryOptions {
  std::size_t bins = 30;
  std::vector<std::pair<std::size_t, std::size_t>> joint_pairs;
};

struct PosteriorSummary {
  std::vector<std::string> names;
  numerics::GaussianSummary gaussian;
  Matrix pearson;  // NaN off-diagonal where a parameter has zero spread
  std::vector<std::pair<std::size_t, std::size_t>> degenerate_pairs;
  std::size_t burn_in = 0;
  std::size_t samples = 0;
  std::vector<Histogram> marginals;
  std::vector<JointHistogram> joints;

  Vector standard_deviations() const;
};

PosteriorSummary summarize(const Matrix& samples, std::vector<std::string> names, std::size_t burn_in,
                           const SummaryOptions& options = {});
PosteriorSummary summarize(const Chain& chain, std::size_t burn_in, const SummaryOptions& options = {});

}  // namespace smacal::calib
