#include "smacal/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "smacal/error.hpp"
#include "smacal/io.hpp"
#include "smacal/parallel.hpp"
#include "smacal/sma_model.hpp"

namespace smacal::calib {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

double log_posterior(const Evaluation& e, double sigma2) {
  if (!e.feasible()) return neg_inf;
  return e.log_prior + log_likelihood(e.residuals, sigma2);
}

Histogram make_histogram(const Vector& x, std::size_t bins) {
  double lo = x.minCoeff();
  double hi = x.maxCoeff();
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const auto b = static_cast<std::size_t>((x[i] - lo) / (hi - lo) * static_cast<double>(bins));
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

}  // namespace

PriorSpec::PriorSpec(std::vector<ParameterPrior> parameters, double a0, double b0)
    : parameters_(std::move(parameters)), a0_(a0), b0_(b0) {}

std::vector<sma::ParameterId> PriorSpec::ids() const {
  std::vector<sma::ParameterId> out;
  for (const auto& p : parameters_) out.push_back(p.id);
  return out;
}

std::vector<std::string> PriorSpec::names() const {
  std::vector<std::string> out;
  for (const auto& p : parameters_) out.emplace_back(sma::parameter_name(p.id));
  return out;
}

Vector PriorSpec::lower() const {
  Vector v(idx(dimension()));
  for (std::size_t i = 0; i < dimension(); ++i) v[idx(i)] = parameters_[i].lower;
  return v;
}

Vector PriorSpec::upper() const {
  Vector v(idx(dimension()));
  for (std::size_t i = 0; i < dimension(); ++i) v[idx(i)] = parameters_[i].upper;
  return v;
}

Vector PriorSpec::initial() const {
  Vector v(idx(dimension()));
  for (std::size_t i = 0; i < dimension(); ++i) v[idx(i)] = parameters_[i].initial;
  return v;
}

void PriorSpec::set_gaussian(const numerics::GaussianSummary& g) {
  g.validate();
  if (g.dimension() != dimension()) {
    throw Error(ErrorCode::dimension_mismatch, "Gaussian prior dimension differs from the parameter list");
  }
  gaussian_lower_ = numerics::cholesky(g.covariance);
  gaussian_ = g;
}

bool PriorSpec::in_bounds(const Vector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dimension()) return false;
  for (std::size_t i = 0; i < dimension(); ++i) {
    const double v = theta[idx(i)];
    if (!(v >= parameters_[i].lower && v <= parameters_[i].upper)) return false;
  }
  return true;
}

double PriorSpec::log_density(const Vector& theta) const {
  if (!in_bounds(theta)) return neg_inf;
  if (!gaussian_) return 0.0;
  const Vector z = gaussian_lower_.triangularView<Eigen::Lower>().solve(theta - gaussian_->mean);
  return -0.5 * z.squaredNorm();
}

void PriorSpec::validate() const {
  if (parameters_.empty()) throw Error(ErrorCode::validation_error, "no parameters to calibrate");
  std::set<sma::ParameterId> seen;
  for (const auto& p : parameters_) {
    const std::string name(sma::parameter_name(p.id));
    if (!seen.insert(p.id).second) throw Error(ErrorCode::validation_error, name + " listed twice");
    if (!std::isfinite(p.lower) || !std::isfinite(p.upper) || !std::isfinite(p.initial)) {
      throw Error(ErrorCode::validation_error, name + " bounds and initial value must be finite");
    }
    if (!(p.lower < p.initial && p.initial < p.upper)) {
      throw Error(ErrorCode::validation_error, name + " needs lower < initial < upper");
    }
  }
  if (!(a0_ > 0.0) || !(b0_ > 0.0)) {
    throw Error(ErrorCode::invalid_hyperparameter, "noise hyper-prior needs a0 > 0 and b0 > 0");
  }
}

double log_likelihood(std::span<const double> residuals, double sigma2) {
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::invalid_hyperparameter, "sigma2 must be positive");
  double ss = 0.0;
  for (double r : residuals) ss += r * r;
  const auto n = static_cast<double>(residuals.size());
  return -0.5 * ss / sigma2 - 0.5 * n * std::log(2.0 * std::numbers::pi * sigma2);
}

SmaCalibrationModel::SmaCalibrationModel(PriorSpec prior, sma::MaterialParameters base,
                                         std::vector<ExperimentalDataset> datasets, SmaModelOptions options)
    : prior_(std::move(prior)), ids_(prior_.ids()), base_(base), datasets_(std::move(datasets)), options_(options) {
  prior_.validate();
  if (datasets_.empty()) throw Error(ErrorCode::validation_error, "calibration needs at least one dataset");
  for (const auto& d : datasets_) smacal::validate(d);
}

sma::MaterialParameters SmaCalibrationModel::parameters_at(const Vector& theta) const {
  return sma::apply_parameters(base_, ids_, std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())));
}

Evaluation SmaCalibrationModel::evaluate(const Vector& theta) const {
  Evaluation e;
  e.log_prior = prior_.log_density(theta);
  if (!e.feasible()) {
    e.diagnostic = "outside prior bounds";
    return e;
  }
  const sma::MaterialParameters p = parameters_at(theta);
  if (auto why = sma::feasibility_violation(p)) {
    e.log_prior = neg_inf;
    e.diagnostic = *why;
    return e;
  }

  std::vector<std::vector<double>> per(datasets_.size());
  std::vector<std::string> errors(datasets_.size());
  parallel_for(datasets_.size(), options_.jobs, [&](std::size_t k) {
    const auto& d = datasets_[k];
    try {
      const auto loop = sma::simulate_at(d.stress, dataset_grid(d), p);
      auto& out = per[k];
      auto push = [&](const std::vector<sma::LoopPoint>& model, const BranchSamples& data) {
        for (std::size_t i = 0; i < data.size(); ++i) out.push_back(model[i].eps_t - data.eps_t[i]);
      };
      push(loop.cooling, d.cooling);
      push(loop.heating, d.heating);
      if (options_.residuals == ResidualMode::per_dataset) {
        double d_se = 0.0;
        for (double r : out) d_se += r * r;
        out.assign(1, d_se);
      }
    } catch (const Error& err) {
      errors[k] = err.what();
    }
  });
  for (std::size_t k = 0; k < datasets_.size(); ++k) {
    if (!errors[k].empty()) {
      e.log_prior = neg_inf;
      e.solver_failure = true;
      e.diagnostic = "dataset " + std::to_string(k) + ": " + errors[k];
      e.residuals.clear();
      return e;
    }
    e.residuals.insert(e.residuals.end(), per[k].begin(), per[k].end());
  }
  return e;
}

bool mh_accept(double log_current, double log_candidate, double log_hastings, Rng& rng) {
  if (std::isnan(log_candidate) || log_candidate == neg_inf) return false;
  const double log_ratio = log_candidate - log_current + log_hastings;
  if (log_ratio >= 0.0) return true;
  return std::log(rng.uniform()) < log_ratio;
}

double gibbs_update_sigma2(std::span<const double> residuals, double a0, double b0, Rng& rng) {
  if (!(a0 > 0.0) || !(b0 > 0.0)) {
    throw Error(ErrorCode::invalid_hyperparameter, "noise hyper-prior needs a0 > 0 and b0 > 0");
  }
  double ss = 0.0;
  for (double r : residuals) {
    if (!std::isfinite(r)) throw Error(ErrorCode::out_of_range, "residuals must be finite");
    ss += r * r;
  }
  return numerics::inverse_gamma_sample(a0 + 0.5 * static_cast<double>(residuals.size()), b0 + 0.5 * ss, rng);
}

void RunningMoments::add(const Vector& x) {
  ++n_;
  const Vector delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_.noalias() += delta * (x - mean_).transpose();
}

Matrix RunningMoments::covariance() const {
  if (n_ < 2) return Matrix::Zero(m2_.rows(), m2_.cols());
  Matrix c = m2_ / static_cast<double>(n_ - 1);
  return 0.5 * (c + c.transpose());
}

Matrix adapt_proposal(const RunningMoments& history, const Matrix& v0) {
  const Matrix cov = history.covariance();
  if (history.count() < 2 || !(cov.diagonal().maxCoeff() > 0.0)) return v0;
  const auto d = static_cast<std::size_t>(cov.rows());
  const double s_d = adaptive_scale(d);
  Matrix v = s_d * cov;
  v.diagonal().array() += s_d * adaptive_epsilon;
  try {
    numerics::cholesky(v);
  } catch (const Error&) {
    return v0;
  }
  return v;
}

Matrix adapt_proposal(const Matrix& samples, const Matrix& v0) {
  RunningMoments m(static_cast<std::size_t>(samples.cols()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) m.add(samples.row(i).transpose());
  return adapt_proposal(m, v0);
}

Matrix default_initial_proposal(const PriorSpec& prior) {
  const Vector width = 0.01 * (prior.upper() - prior.lower());
  return width.array().square().matrix().asDiagonal();
}

double Chain::acceptance_rate(std::size_t from) const {
  if (from >= accepted.size()) return 0.0;
  std::size_t n = 0;
  for (std::size_t i = from; i < accepted.size(); ++i) n += accepted[i];
  return static_cast<double>(n) / static_cast<double>(accepted.size() - from);
}

bool mh_step(ChainState& state, const Matrix& proposal_lower, const Model& model, Rng& rng, std::string* failure) {
  Vector z(state.theta.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  const Vector candidate = state.theta + proposal_lower * z;
  Evaluation e = model.evaluate(candidate);
  if (failure != nullptr && e.solver_failure) *failure = e.diagnostic;
  const double current = log_posterior(state.evaluation, state.sigma2);
  const double proposed = log_posterior(e, state.sigma2);
  // Gaussian random walk: the Hastings correction is identically zero.
  if (!mh_accept(current, proposed, 0.0, rng)) return false;
  state.theta = candidate;
  state.evaluation = std::move(e);
  return true;
}

Chain run_chain(const Model& model, const PriorSpec& prior, const ChainConfig& config) {
  prior.validate();
  const std::size_t d = model.dimension();
  if (d != prior.dimension()) {
    throw Error(ErrorCode::dimension_mismatch, "model and prior dimensions differ");
  }
  if (config.adapt_interval == 0) throw Error(ErrorCode::validation_error, "adapt_interval must be positive");
  if (config.fixed_sigma2 && !(*config.fixed_sigma2 > 0.0)) {
    throw Error(ErrorCode::invalid_hyperparameter, "fixed sigma2 must be positive");
  }

  Rng rng(config.seed);
  ChainState state;
  state.theta = config.initial_theta.value_or(prior.initial());
  if (static_cast<std::size_t>(state.theta.size()) != d) {
    throw Error(ErrorCode::dimension_mismatch, "initial parameter vector has the wrong length");
  }
  state.evaluation = model.evaluate(state.theta);
  if (!state.evaluation.feasible()) {
    throw Error(ErrorCode::validation_error, "initial parameters are infeasible: " + state.evaluation.diagnostic);
  }
  state.sigma2 = config.fixed_sigma2 ? *config.fixed_sigma2
                                     : gibbs_update_sigma2(state.evaluation.residuals, prior.a0(), prior.b0(), rng);

  const Matrix v0 = config.initial_proposal.value_or(default_initial_proposal(prior));
  if (static_cast<std::size_t>(v0.rows()) != d || static_cast<std::size_t>(v0.cols()) != d) {
    throw Error(ErrorCode::dimension_mismatch, "initial proposal covariance has the wrong shape");
  }
  Matrix lower = numerics::cholesky(v0);

  Chain chain;
  chain.names = prior.names();
  chain.seed = config.seed;
  chain.samples.resize(idx(config.n_steps + 1), idx(d));
  chain.sigma2.resize(config.n_steps + 1);
  chain.accepted.resize(config.n_steps + 1);
  chain.samples.row(0) = state.theta.transpose();
  chain.sigma2[0] = state.sigma2;
  chain.accepted[0] = 1;

  if (config.scale_adaptation && !(config.target_acceptance > 0.0 && config.target_acceptance < 1.0)) {
    throw Error(ErrorCode::validation_error, "target acceptance must lie in (0, 1)");
  }
  double log_scale = 0.0;

  RunningMoments history(d);
  history.add(state.theta);
  for (std::size_t step = 1; step <= config.n_steps; ++step) {
    std::string failure;
    const bool accepted = config.scale_adaptation ? mh_step(state, std::exp(0.5 * log_scale) * lower, model, rng, &failure)
                                                  : mh_step(state, lower, model, rng, &failure);
    if (config.scale_adaptation) {
      const double gain = std::pow(1.0 + static_cast<double>(step) / 100.0, -0.6);
      log_scale += gain * ((accepted ? 1.0 : 0.0) - config.target_acceptance);
      chain.proposal_scale = std::exp(log_scale);
    }
    if (!failure.empty()) {
      ++chain.failed_evaluations;
      chain.last_failure = std::move(failure);
    }
    if (!config.fixed_sigma2) {
      state.sigma2 = gibbs_update_sigma2(state.evaluation.residuals, prior.a0(), prior.b0(), rng);
    }
    chain.samples.row(idx(step)) = state.theta.transpose();
    chain.sigma2[step] = state.sigma2;
    chain.accepted[step] = accepted ? 1 : 0;
    history.add(state.theta);

    if (step >= config.adapt_start && step % config.adapt_interval == 0) {
      lower = numerics::cholesky(adapt_proposal(history, v0));
      chain.adaptation_steps.push_back(step);
    }
    if (!config.checkpoint_path.empty() && config.checkpoint_interval > 0 &&
        (step % config.checkpoint_interval == 0 || step == config.n_steps)) {
      Chain partial = chain;
      partial.samples.conservativeResize(idx(step + 1), idx(d));
      partial.sigma2.resize(step + 1);
      partial.accepted.resize(step + 1);
      try {
        io::write_chain_csv(config.checkpoint_path, partial);
      } catch (const Error& e) {
        throw Error(ErrorCode::chain_aborted, "checkpoint at step " + std::to_string(step) + " failed: " + e.what());
      }
    }
  }
  return chain;
}

std::size_t detect_burn_in(const Matrix& samples, const BurnInOptions& options) {
  const auto n = static_cast<std::size_t>(samples.rows());
  const auto d = static_cast<std::size_t>(samples.cols());
  if (n < 1000) throw Error(ErrorCode::too_few_samples, "burn-in detection needs at least 1000 samples");
  const std::size_t window = std::max<std::size_t>(2, static_cast<std::size_t>(options.window_fraction * static_cast<double>(n)));
  if (window >= n) throw Error(ErrorCode::out_of_range, "burn-in window covers the whole chain");
  const std::size_t settle = std::min(window - 1, static_cast<std::size_t>(options.settle_fraction * static_cast<double>(window)));
  const std::size_t stride = options.stride > 0 ? options.stride : std::max<std::size_t>(1, n / 1000);

  // Centered prefix sums keep the running means accurate on long chains.
  std::vector<std::vector<double>> prefix(d, std::vector<double>(n + 1, 0.0));
  std::vector<double> threshold(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto col = samples.col(idx(j));
    const auto tail = col.tail(idx(n - n / 2));
    const double center = tail.mean();
    const double sd = tail.size() > 1 ? std::sqrt((tail.array() - center).square().sum() / static_cast<double>(tail.size() - 1)) : 0.0;
    threshold[j] = options.tolerance * sd + 1e-12 * (1.0 + std::abs(center));
    for (std::size_t k = 0; k < n; ++k) prefix[j][k + 1] = prefix[j][k] + (col[idx(k)] - center);
  }

  for (std::size_t i = 0; i + window < n; i += stride) {
    bool settled = true;
    for (std::size_t j = 0; j < d && settled; ++j) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t k = i + settle; k <= i + window; ++k) {
        const double m = (prefix[j][k + 1] - prefix[j][i]) / static_cast<double>(k - i + 1);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
      }
      settled = (hi - lo) <= threshold[j];
    }
    if (settled) return i;
  }
  throw Error(ErrorCode::no_plateau, "running means never settle; pass an explicit burn-in index");
}

Vector PosteriorSummary::standard_deviations() const { return gaussian.covariance.diagonal().cwiseSqrt(); }

PosteriorSummary summarize(const Matrix& samples, std::vector<std::string> names, std::size_t burn_in,
                           const SummaryOptions& options) {
  const auto n = static_cast<std::size_t>(samples.rows());
  const auto d = static_cast<std::size_t>(samples.cols());
  if (burn_in >= n) throw Error(ErrorCode::out_of_range, "burn-in index must be below the chain length");
  if (names.size() != d) throw Error(ErrorCode::dimension_mismatch, "one name per parameter column is required");
  if (options.bins == 0) throw Error(ErrorCode::out_of_range, "histograms need at least one bin");

  const Matrix kept = samples.bottomRows(idx(n - burn_in));
  PosteriorSummary s;
  s.names = std::move(names);
  s.burn_in = burn_in;
  s.samples = n - burn_in;
  if (kept.rows() >= 2) {
    s.gaussian = numerics::sample_moments(kept);
  } else {
    s.gaussian.mean = kept.row(0).transpose();
    s.gaussian.covariance = Matrix::Zero(idx(d), idx(d));
  }

  s.pearson = Matrix::Identity(idx(d), idx(d));
  const Vector sd = s.standard_deviations();
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      double r = std::numeric_limits<double>::quiet_NaN();
      if (sd[idx(i)] > 0.0 && sd[idx(j)] > 0.0) {
        r = std::clamp(s.gaussian.covariance(idx(i), idx(j)) / (sd[idx(i)] * sd[idx(j)]), -1.0, 1.0);
      } else {
        s.degenerate_pairs.emplace_back(i, j);
      }
      s.pearson(idx(i), idx(j)) = r;
      s.pearson(idx(j), idx(i)) = r;
    }
  }

  for (std::size_t j = 0; j < d; ++j) s.marginals.push_back(make_histogram(kept.col(idx(j)), options.bins));
  for (const auto& [a, b] : options.joint_pairs) {
    if (a >= d || b >= d) throw Error(ErrorCode::out_of_range, "joint histogram pair out of range");
    JointHistogram jh;
    jh.first = a;
    jh.second = b;
    const Histogram hx = make_histogram(kept.col(idx(a)), options.bins);
    const Histogram hy = make_histogram(kept.col(idx(b)), options.bins);
    jh.x_edges = hx.edges;
    jh.y_edges = hy.edges;
    jh.counts.assign(options.bins * options.bins, 0);
    const double xl = hx.edges.front(), xw = hx.edges.back() - xl;
    const double yl = hy.edges.front(), yw = hy.edges.back() - yl;
    const auto bins = static_cast<double>(options.bins);
    for (Eigen::Index i = 0; i < kept.rows(); ++i) {
      const auto bx = std::min(options.bins - 1, static_cast<std::size_t>((kept(i, idx(a)) - xl) / xw * bins));
      const auto by = std::min(options.bins - 1, static_cast<std::size_t>((kept(i, idx(b)) - yl) / yw * bins));
      ++jh.counts[bx * options.bins + by];
    }
    s.joints.push_back(std::move(jh));
  }
  return s;
}

PosteriorSummary summarize(const Chain& chain, std::size_t burn_in, const SummaryOptions& options) {
  return summarize(chain.samples, chain.names, burn_in, options);
}

}  // namespace smacal::calib
