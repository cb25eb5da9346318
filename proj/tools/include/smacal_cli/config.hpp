#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "smacal/calibrate.hpp"
#include "smacal/doe.hpp"
#include "smacal/infogain.hpp"
#include "smacal/material.hpp"
#include "smacal/propagate.hpp"

namespace smacal::cli {

struct GridConfig {
  std::size_t points = sma::default_grid_points;
  double margin = 10.0;  // K
};

struct DoeConfig {
  double stress = 150e6;
  double alpha = 0.05;
  std::size_t grid_points = sma::default_grid_points;
  std::vector<doe::FactorSpec> factors;
};

struct McmcConfig {
  std::size_t steps = 200000;
  std::uint64_t seed = 1;
  std::size_t adapt_interval = 100;
  std::size_t adapt_start = 1000;
  double a0 = 1e-3;
  double b0 = 1e-3;
  std::optional<double> fixed_sigma2;
  calib::ResidualMode residuals = calib::ResidualMode::per_dataset;
  bool scale_adaptation = false;
  std::optional<std::size_t> burn_in;  // nullopt = detect
  std::size_t checkpoint_interval = 10000;
  std::size_t histogram_bins = 30;
};

struct PropagateConfig {
  double coverage = 0.95;
  prop::BandMode band_mode = prop::BandMode::pointwise;
  std::size_t max_samples = 2000;
  std::size_t grid_points = 200;
  double margin = 15.0;  // K
};

struct InfoGainSection {
  std::vector<info::DesignCandidate> candidates;
  std::size_t steps = 5000;
  std::size_t points_per_branch = 60;
  double margin = 20.0;
  double noise_sd = 0.0;
  info::KlDirection direction = info::KlDirection::posterior_to_prior;
  info::TruthMode truth = info::TruthMode::per_dataset;
  // Stage chains fall back to the mcmc section where these are unset.
  std::optional<calib::ResidualMode> residuals;
  std::optional<double> a0;
  std::optional<double> b0;
  std::optional<double> fixed_sigma2;  // unset: Gibbs-sampled, never inherited
  bool scale_adaptation = false;
};

struct PipelineConfig {
  sma::MaterialParameters material;
  std::vector<calib::ParameterPrior> parameters;
  std::vector<double> stresses{100e6, 150e6, 200e6};  // Pa
  GridConfig grid;
  DoeConfig doe;
  McmcConfig mcmc;
  PropagateConfig propagate;
  InfoGainSection infogain;
  std::filesystem::path output_dir = "out";
  unsigned jobs = 0;
  std::string source_text;  // verbatim config text

  calib::PriorSpec prior() const { return calib::PriorSpec(parameters, mcmc.a0, mcmc.b0); }
};

/// Parses and validates a YAML configuration. Unknown keys, wrong types and
/// invalid values throw ValidationError / ParseError naming the line and
/// field.
PipelineConfig parse_config(const std::string& text, const std::string& origin = "<config>");
PipelineConfig load_config(const std::filesystem::path& file);

}  // namespace smacal::cli
