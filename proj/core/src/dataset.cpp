#include "smacal/dataset.hpp"

#include <cmath>

#include "smacal/error.hpp"

namespace smacal {

namespace {

void check_branch(const BranchSamples& b, const char* name, bool increasing) {
  if (b.T.size() != b.eps_t.size()) {
    throw Error(ErrorCode::validation_error, std::string(name) + " branch has mismatched column lengths");
  }
  if (b.size() < min_branch_points) {
    throw Error(ErrorCode::validation_error, std::string(name) + " branch has " + std::to_string(b.size()) +
                                                 " points; at least " + std::to_string(min_branch_points) +
                                                 " are required");
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!std::isfinite(b.T[i]) || !std::isfinite(b.eps_t[i])) {
      throw Error(ErrorCode::validation_error,
                  std::string(name) + " branch has a non-finite value at point " + std::to_string(i));
    }
    if (i > 0 && (increasing ? !(b.T[i] > b.T[i - 1]) : !(b.T[i] < b.T[i - 1]))) {
      throw Error(ErrorCode::validation_error, std::string(name) + " temperatures must be strictly " +
                                                   (increasing ? "increasing" : "decreasing"));
    }
  }
}

}  // namespace

void validate(const ExperimentalDataset& d) {
  if (!(d.stress >= 0.0) || !std::isfinite(d.stress)) {
    throw Error(ErrorCode::validation_error, "dataset stress must be finite and nonnegative");
  }
  check_branch(d.cooling, "cooling", false);
  check_branch(d.heating, "heating", true);
}

sma::LoopGrid dataset_grid(const ExperimentalDataset& d) { return {d.cooling.T, d.heating.T}; }

ExperimentalDataset dataset_from_loop(const sma::HysteresisLoop& loop, std::string label) {
  ExperimentalDataset d;
  d.stress = loop.stress;
  d.label = std::move(label);
  for (const auto& pt : loop.cooling) {
    d.cooling.T.push_back(pt.T);
    d.cooling.eps_t.push_back(pt.eps_t);
  }
  for (const auto& pt : loop.heating) {
    d.heating.T.push_back(pt.T);
    d.heating.eps_t.push_back(pt.eps_t);
  }
  return d;
}

}  // namespace smacal
