#pragma once

#include <string>
#include <vector>

#include "smacal/sma_model.hpp"

namespace smacal {

/// Measured (or synthetic) transformation strain along one branch.
struct BranchSamples {
  std::vector<double> T;      // K
  std::vector<double> eps_t;  // strain

  std::size_t size() const noexcept { return T.size(); }
  bool operator==(const BranchSamples&) const = default;
};

/// One isobaric actuation test: cooling temperatures strictly decrease,
/// heating temperatures strictly increase.
struct ExperimentalDataset {
  double stress = 0.0;  // Pa
  BranchSamples cooling;
  BranchSamples heating;
  std::string label;

  bool operator==(const ExperimentalDataset&) const = default;
};

inline constexpr std::size_t min_branch_points = 10;

/// Throws ValidationError when a branch is short, unsorted or non-finite.
void validate(const ExperimentalDataset& d);

/// Temperatures of both branches as a loop grid.
sma::LoopGrid dataset_grid(const ExperimentalDataset& d);

/// Strain samples of a simulated loop.
ExperimentalDataset dataset_from_loop(const sma::HysteresisLoop& loop, std::string label = {});

}  // namespace smacal
