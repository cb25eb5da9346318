#pragma once

// Ranking candidate experiment sets by the information they add to a
// Gaussian prior, measured as the KL divergence between the final sequential
// posterior and the prior.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smacal/calibrate.hpp"
#include "smacal/dataset.hpp"
#include "smacal/numerics.hpp"
#include "smacal/rng.hpp"

namespace smacal::info {

struct DesignCandidate {
  std::string name;
  std::vector<double> stresses;  // Pa, one condition each
  std::size_t samples_per_condition = 1;

  std::size_t dataset_count() const noexcept { return stresses.size() * samples_per_condition; }
};

struct SyntheticOptions {
  std::size_t points_per_branch = 60;
  double margin = 10.0;        // K beyond the mean-parameter loop
  double noise_sd = 0.0;       // additive strain noise, off by default
  std::size_t max_attempts = 1000;
};

/// Draw from `posterior` that lies inside the bounds and satisfies the
/// material invariants; the mean itself for a zero covariance. Throws
/// FeasibilityExhausted.
numerics::Vector draw_admissible(const numerics::GaussianSummary& posterior, const calib::PriorSpec& bounds,
                                 const sma::MaterialParameters& base, std::size_t max_attempts, Rng& rng);
/// Loop of `theta` at `stress` on the grid generate_synthetic_dataset uses,
/// plus the configured noise.
ExperimentalDataset synthetic_dataset_at(const numerics::Vector& theta, const numerics::GaussianSummary& posterior,
                                         const calib::PriorSpec& bounds, const sma::MaterialParameters& base,
                                         double stress, const SyntheticOptions& options, Rng& rng);
/// Draws theta from `posterior` (rejecting draws outside the bounds of
/// `bounds` or violating the material invariants) and simulates its loop at
/// `stress` on a uniform grid around the mean-parameter loop. A zero
/// covariance uses the mean. Throws FeasibilityExhausted.
ExperimentalDataset generate_synthetic_dataset(const numerics::GaussianSummary& posterior,
                                               const calib::PriorSpec& bounds, const sma::MaterialParameters& base,
                                               double stress, const SyntheticOptions& options, Rng& rng);

struct SequentialConfig {
  calib::ChainConfig chain;              // seed is re-derived per stage
  calib::SmaModelOptions model;
  calib::BurnInOptions burn_in;
  double fallback_burn_in_fraction = 0.2;  // used on NoPlateau
  /// Initial proposal of each stage is proposal_scale * s_d * (stage prior
  /// covariance). Values below one suit data that are much more informative
  /// than the prior.
  double proposal_scale = 1.0;
};

struct SequentialResult {
  std::vector<numerics::GaussianSummary> stages;  // posterior after each dataset
  std::vector<std::size_t> burn_ins;
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> chain_lengths;
  std::vector<double> acceptance_rates;

  /// Prior when there were no datasets.
  numerics::GaussianSummary final_posterior;
};

/// Each stage runs a chain against one dataset with the current Gaussian
/// (truncated to `bounds`) as prior and refits a Gaussian to the kept samples.
SequentialResult sequential_calibrate(const numerics::GaussianSummary& prior, const calib::PriorSpec& bounds,
                                      const sma::MaterialParameters& base,
                                      const std::vector<ExperimentalDataset>& datasets,
                                      const SequentialConfig& config);

enum class KlDirection {
  posterior_to_prior,  // D(posterior || prior)
  prior_to_posterior,  // D(prior || posterior)
};

enum class TruthMode {
  per_dataset,  // every synthetic dataset draws its own parameters
  shared,       // one draw generates every dataset of every candidate
};
struct InfoGainConfig {
  SequentialConfig sequential;
  SyntheticOptions synthetic;
  TruthMode truth = TruthMode::per_dataset;
  KlDirection direction = KlDirection::posterior_to_prior;
  std::uint64_t seed = 1;
  unsigned jobs = 0;  // candidates evaluated concurrently
};

struct CandidateResult {
  DesignCandidate candidate;
  double kl = 0.0;                // nats, prior vs final posterior
  std::vector<double> stage_kls;  // prior vs each intermediate posterior
  std::vector<std::size_t> chain_lengths;
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> burn_ins;
  numerics::GaussianSummary final_posterior;
};

struct InfoGainReport {
  std::vector<CandidateResult> candidates;  // input order
  std::vector<std::size_t> ranking;         // indices, descending KL
  std::uint64_t seed = 0;
  KlDirection direction = KlDirection::posterior_to_prior;
  std::optional<numerics::Vector> truth;  // set in TruthMode::shared
};

double information_gain(const numerics::GaussianSummary& prior, const numerics::GaussianSummary& posterior,
                        KlDirection direction);

InfoGainReport compare_designs(const numerics::GaussianSummary& prior, const calib::PriorSpec& bounds,
                               const sma::MaterialParameters& base, const std::vector<DesignCandidate>& candidates,
                               const InfoGainConfig& config);

}  // namespace smacal::info
