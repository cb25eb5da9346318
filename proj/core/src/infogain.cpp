#include "smacal/infogain.hpp"

#include <algorithm>
#include <numeric>
#include <optional>

#include "smacal/error.hpp"
#include "smacal/parallel.hpp"
#include "smacal/sma_model.hpp"

namespace smacal::info {

namespace {

sma::MaterialParameters at(const calib::PriorSpec& bounds, const sma::MaterialParameters& base,
                           const numerics::Vector& theta) {
  const auto ids = bounds.ids();
  return sma::apply_parameters(base, ids, std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())));
}

bool admissible(const calib::PriorSpec& bounds, const sma::MaterialParameters& base, const numerics::Vector& theta) {
  return bounds.in_bounds(theta) && !sma::feasibility_violation(at(bounds, base, theta));
}

}  // namespace

namespace {

void check_synthetic_inputs(const numerics::GaussianSummary& posterior, const calib::PriorSpec& bounds,
                            const SyntheticOptions& options) {
  posterior.validate();
  if (posterior.dimension() != bounds.dimension()) {
    throw Error(ErrorCode::dimension_mismatch, "posterior dimension differs from the parameter list");
  }
  if (options.points_per_branch < min_branch_points) {
    throw Error(ErrorCode::out_of_range, "synthetic branches need at least " + std::to_string(min_branch_points) +
                                             " points");
  }
}

}  // namespace

numerics::Vector draw_admissible(const numerics::GaussianSummary& posterior, const calib::PriorSpec& bounds,
                                 const sma::MaterialParameters& base, std::size_t max_attempts, Rng& rng) {
  if (posterior.covariance.isZero(0.0)) {
    if (!admissible(bounds, base, posterior.mean)) {
      throw Error(ErrorCode::feasibility_exhausted, "posterior mean is infeasible and the covariance is zero");
    }
    return posterior.mean;
  }
  const numerics::Matrix lower = numerics::cholesky(posterior.covariance);
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    numerics::Vector draw = numerics::mvn_sample_factored(posterior.mean, lower, rng);
    if (admissible(bounds, base, draw)) return draw;
  }
  throw Error(ErrorCode::feasibility_exhausted, "no feasible draw in " + std::to_string(max_attempts) + " attempts");
}

ExperimentalDataset synthetic_dataset_at(const numerics::Vector& theta, const numerics::GaussianSummary& posterior,
                                         const calib::PriorSpec& bounds, const sma::MaterialParameters& base,
                                         double stress, const SyntheticOptions& options, Rng& rng) {
  check_synthetic_inputs(posterior, bounds, options);
  if (static_cast<std::size_t>(theta.size()) != bounds.dimension()) {
    throw Error(ErrorCode::dimension_mismatch, "parameter vector differs from the parameter list");
  }
  // The grid follows the mean loop so replicas share temperatures.
  const auto center = admissible(bounds, base, posterior.mean) ? at(bounds, base, posterior.mean)
                                                               : at(bounds, base, theta);
  const auto [t_min, t_max] = sma::covering_range(stress, center, options.margin);
  const auto grid = sma::uniform_grid(t_max, t_min, options.points_per_branch);
  ExperimentalDataset d = dataset_from_loop(sma::simulate_at(stress, grid, at(bounds, base, theta)), "synthetic");
  if (options.noise_sd > 0.0) {
    for (double& e : d.cooling.eps_t) e += options.noise_sd * rng.normal();
    for (double& e : d.heating.eps_t) e += options.noise_sd * rng.normal();
  }
  return d;
}

ExperimentalDataset generate_synthetic_dataset(const numerics::GaussianSummary& posterior,
                                               const calib::PriorSpec& bounds, const sma::MaterialParameters& base,
                                               double stress, const SyntheticOptions& options, Rng& rng) {
  check_synthetic_inputs(posterior, bounds, options);
  const numerics::Vector theta = draw_admissible(posterior, bounds, base, options.max_attempts, rng);
  return synthetic_dataset_at(theta, posterior, bounds, base, stress, options, rng);
}

SequentialResult sequential_calibrate(const numerics::GaussianSummary& prior, const calib::PriorSpec& bounds,
                                      const sma::MaterialParameters& base,
                                      const std::vector<ExperimentalDataset>& datasets,
                                      const SequentialConfig& config) {
  prior.validate();
  bounds.validate();
  if (prior.dimension() != bounds.dimension()) {
    throw Error(ErrorCode::dimension_mismatch, "prior dimension differs from the parameter list");
  }
  const std::size_t d = bounds.dimension();
  const numerics::Vector lo = bounds.lower();
  const numerics::Vector hi = bounds.upper();

  SequentialResult result;
  numerics::GaussianSummary current = prior;
  for (std::size_t stage = 0; stage < datasets.size(); ++stage) {
    std::vector<calib::ParameterPrior> params = bounds.parameters();
    for (std::size_t i = 0; i < d; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double pad = 1e-6 * (hi[ii] - lo[ii]);
      params[i].initial = std::clamp(current.mean[ii], lo[ii] + pad, hi[ii] - pad);
    }
    calib::PriorSpec stage_prior(params, bounds.a0(), bounds.b0());
    stage_prior.set_gaussian(current);
    calib::SmaCalibrationModel model(stage_prior, base, {datasets[stage]}, config.model);

    calib::ChainConfig chain_config = config.chain;
    chain_config.seed = derive_seed(config.chain.seed, stage);
    chain_config.checkpoint_path.clear();
    chain_config.initial_proposal = config.proposal_scale * calib::adaptive_scale(d) * current.covariance;
    const calib::Chain chain = calib::run_chain(model, stage_prior, chain_config);

    std::size_t burn_in = 0;
    try {
      burn_in = calib::detect_burn_in(chain.samples, config.burn_in);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_plateau && e.code() != ErrorCode::too_few_samples) throw;
      burn_in = static_cast<std::size_t>(config.fallback_burn_in_fraction * static_cast<double>(chain.size()));
    }
    current = numerics::sample_moments(chain.samples.bottomRows(static_cast<Eigen::Index>(chain.size() - burn_in)));
    try {
      numerics::cholesky(current.covariance);
    } catch (const Error&) {
      throw Error(ErrorCode::chain_aborted, "stage " + std::to_string(stage) +
                                                " posterior covariance is singular (acceptance rate " +
                                                std::to_string(chain.acceptance_rate()) + ")");
    }

    result.stages.push_back(current);
    result.burn_ins.push_back(burn_in);
    result.seeds.push_back(chain_config.seed);
    result.chain_lengths.push_back(chain.size());
    result.acceptance_rates.push_back(chain.acceptance_rate());
  }
  result.final_posterior = current;
  return result;
}

double information_gain(const numerics::GaussianSummary& prior, const numerics::GaussianSummary& posterior,
                        KlDirection direction) {
  return direction == KlDirection::posterior_to_prior ? numerics::kl_mvn(posterior, prior)
                                                      : numerics::kl_mvn(prior, posterior);
}

InfoGainReport compare_designs(const numerics::GaussianSummary& prior, const calib::PriorSpec& bounds,
                               const sma::MaterialParameters& base, const std::vector<DesignCandidate>& candidates,
                               const InfoGainConfig& config) {
  for (const auto& c : candidates) {
    for (double s : c.stresses) {
      if (!(s > 0.0)) throw Error(ErrorCode::validation_error, "candidate " + c.name + " has a nonpositive stress");
    }
  }
  InfoGainReport report;
  report.seed = config.seed;
  report.direction = config.direction;
  report.candidates.resize(candidates.size());

  // One parameter vector for every dataset of every candidate, drawn from a
  // stream of its own.
  std::optional<numerics::Vector> truth;
  if (config.truth == TruthMode::shared) {
    Rng truth_rng(derive_seed(config.seed, 2 * candidates.size()));
    truth = draw_admissible(prior, bounds, base, config.synthetic.max_attempts, truth_rng);
    report.truth = *truth;
  }

  parallel_for(candidates.size(), config.jobs, [&](std::size_t c) {
    const DesignCandidate& cand = candidates[c];
    Rng data_rng(derive_seed(config.seed, 2 * c));
    std::vector<ExperimentalDataset> datasets;
    for (double stress : cand.stresses) {
      for (std::size_t r = 0; r < cand.samples_per_condition; ++r) {
        datasets.push_back(truth ? synthetic_dataset_at(*truth, prior, bounds, base, stress, config.synthetic, data_rng)
                                 : generate_synthetic_dataset(prior, bounds, base, stress, config.synthetic, data_rng));
      }
    }
    SequentialConfig seq = config.sequential;
    seq.chain.seed = derive_seed(config.seed, 2 * c + 1);
    const SequentialResult r = sequential_calibrate(prior, bounds, base, datasets, seq);

    CandidateResult& out = report.candidates[c];
    out.candidate = cand;
    out.final_posterior = r.final_posterior;
    out.kl = information_gain(prior, r.final_posterior, config.direction);
    for (const auto& stage : r.stages) out.stage_kls.push_back(information_gain(prior, stage, config.direction));
    out.chain_lengths = r.chain_lengths;
    out.seeds = r.seeds;
    out.burn_ins = r.burn_ins;
  });

  report.ranking.resize(candidates.size());
  std::iota(report.ranking.begin(), report.ranking.end(), std::size_t{0});
  std::stable_sort(report.ranking.begin(), report.ranking.end(), [&](std::size_t a, std::size_t b) {
    return report.candidates[a].kl > report.candidates[b].kl;
  });
  return report;
}

}  // namespace smacal::info
