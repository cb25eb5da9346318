#pragma once

// Posterior uncertainty on the transformation strain, by linearization
// (first-order second-moment) and by forwarding posterior samples.

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "smacal/material.hpp"
#include "smacal/numerics.hpp"
#include "smacal/sma_model.hpp"

namespace smacal::prop {

using numerics::Matrix;
using numerics::Vector;

/// Maps a parameter vector to a vector of outputs.
using VectorModel = std::function<Vector(const Vector&)>;

struct Jacobian {
  Vector value;  // f(theta)
  Matrix g;      // outputs x parameters
};

struct GradientOptions {
  double relative_step = 1e-4;
  Vector scale;  // floor for |theta_i| in the step; empty = ones
  Vector lower;  // optional bounds; empty = unbounded
  Vector upper;
  unsigned jobs = 1;
};

/// Central differences with h_i = relative_step * max(|theta_i|, scale_i);
/// one-sided where the other side leaves the bounds or throws. Throws
/// GradientFailure if both sides fail.
Jacobian finite_difference_jacobian(const VectorModel& f, const Vector& theta, const GradientOptions& options = {});

/// diag(J V J^T).
Vector fosm_variance(const Matrix& jacobian, const Matrix& covariance);

/// sum_i sum_j g_i g_j V_ij, written out as a double loop.
double quadratic_form_double_sum(const Vector& g, const Matrix& v);

struct PointwiseBand {
  Vector mean;
  Vector lower;
  Vector upper;
};

/// mean = f(mean theta), bounds = mean -/+ 2 sqrt(g^T V g).
PointwiseBand fosm_pointwise(const VectorModel& f, const numerics::GaussianSummary& posterior,
                             const GradientOptions& options = {});

/// Pointwise sample mean and central `coverage` percentiles of the rows of
/// `outputs` (samples x points).
PointwiseBand direct_pointwise(const Matrix& outputs, double coverage);

/// Curves are ranked by `rank_key`; the (1 - coverage)/2 fraction at each end
/// is dropped and the band is the envelope and mean of the rest.
PointwiseBand direct_curvewise(const Matrix& outputs, std::span<const double> rank_key, double coverage);

enum class BandMethod { fosm, direct };
enum class BandMode { pointwise, curvewise };

std::string_view to_string(BandMethod m) noexcept;
std::string_view to_string(BandMode m) noexcept;

struct BandPoint {
  double T = 0.0;
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct ConfidenceBand {
  double stress = 0.0;  // Pa
  BandMethod method = BandMethod::fosm;
  double coverage = 0.95;
  std::vector<BandPoint> cooling;
  std::vector<BandPoint> heating;
};

/// Calibrated subset of the material parameters.
struct ParameterSpace {
  std::vector<sma::ParameterId> ids;
  sma::MaterialParameters base;
  Vector lower;  // optional bounds used for one-sided differences
  Vector upper;
};

/// Strain on both branches, cooling then heating, at the grid temperatures.
Vector loop_strains(const ParameterSpace& space, const Vector& theta, double stress, const sma::LoopGrid& grid);

struct FosmOptions {
  double relative_step = 1e-4;
  unsigned jobs = 1;
};

ConfidenceBand fosm_band(const numerics::GaussianSummary& posterior, const ParameterSpace& space, double stress,
                         const sma::LoopGrid& grid, const FosmOptions& options = {});

inline constexpr std::size_t min_direct_samples = 200;

struct DirectOptions {
  double coverage = 0.95;
  BandMode mode = BandMode::pointwise;
  std::size_t max_samples = 2000;  // evenly thinned above this
  unsigned jobs = 0;
};

/// Throws TooFewSamples below min_direct_samples rows.
ConfidenceBand direct_band(const Matrix& samples, const ParameterSpace& space, double stress,
                           const sma::LoopGrid& grid, const DirectOptions& options = {});

/// Per-branch sigma of a FOSM band, (upper - mean) / 2.
std::vector<double> band_sigma(const std::vector<BandPoint>& branch);

}  // namespace smacal::prop
