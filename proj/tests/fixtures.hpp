#pragma once
// Shared inputs of the unit and acceptance tests.

#include <vector>

#include "smacal/calibrate.hpp"
#include "smacal/dataset.hpp"
#include "smacal/doe.hpp"
#include "smacal/numerics.hpp"
#include "smacal/sma_model.hpp"

namespace smacal::testing {

// Two levels per screenable parameter, inside the calibration box and
// feasible in every combination at 150 MPa.
inline std::vector<doe::FactorSpec> screening_factors() {
  using sma::ParameterId;
  return {
      {ParameterId::E_A, 54.0, 66.0},    {ParameterId::E_M, 32.0, 39.2},   {ParameterId::M_s, 277.0, 284.0},
      {ParameterId::M_f, 256.5, 263.5},  {ParameterId::A_s, 293.0, 300.0}, {ParameterId::A_f, 319.0, 326.0},
      {ParameterId::C_A, 10.3, 13.3},    {ParameterId::C_M, 7.0, 9.0},     {ParameterId::H_sat, 0.0477, 0.0557},
      {ParameterId::k, 0.0495, 0.0695},  {ParameterId::n1, 0.9, 1.0},      {ParameterId::n2, 0.5, 0.7},
      {ParameterId::n3, 0.5, 0.7},       {ParameterId::n4, 0.9, 1.0},
  };
}

// Calibration box of the eight calibrated parameters, initial values at the
// published means.
inline calib::PriorSpec published_box(double a0 = 1e-3, double b0 = 1e-3) {
  using sma::ParameterId;
  return calib::PriorSpec({{ParameterId::A_s, 280.0, 315.0, 296.6},
                           {ParameterId::A_f, 300.0, 345.0, 322.6},
                           {ParameterId::M_s, 265.0, 300.0, 280.4},
                           {ParameterId::M_f, 240.0, 275.0, 259.9},
                           {ParameterId::C_A, 5.0, 20.0, 11.8},
                           {ParameterId::E_M, 20.0, 60.0, 35.6},
                           {ParameterId::H_sat, 0.03, 0.07, 0.0517},
                           {ParameterId::k, 0.01, 0.12, 0.0595}},
                          a0, b0);
}

// Published posterior means, standard deviations and pairwise correlations,
// in the order of published_box().
inline numerics::GaussianSummary published_posterior() {
  numerics::Vector mean(8), sd(8);
  mean << 296.6, 322.6, 280.4, 259.9, 11.8, 35.6, 0.0517, 0.0595;
  sd << 8.5, 11.3, 6.6, 8.5, 4.1, 8.6, 0.0044, 0.0237;
  const double r[8][8] = {{1, -0.0721, 0.2948, -0.1080, 0.3813, -0.0167, -0.1330, -0.0378},
                          {-0.0721, 1, -0.0150, -0.0822, 0.5836, -0.0553, 0.0249, -0.0672},
                          {0.2948, -0.0150, 1, -0.4628, 0.1156, -0.0547, -0.0465, -0.0415},
                          {-0.1080, -0.0822, -0.4628, 1, -0.1280, -0.0289, -0.1355, 0.0160},
                          {0.3813, 0.5836, 0.1156, -0.1280, 1, -0.0015, 0.0476, -0.0405},
                          {-0.0167, -0.0553, -0.0547, -0.0289, -0.0015, 1, 0.2771, 0.0091},
                          {-0.1330, 0.0249, -0.0465, -0.1355, 0.0476, 0.2771, 1, -0.2103},
                          {-0.0378, -0.0672, -0.0415, 0.0160, -0.0405, 0.0091, -0.2103, 1}};
  numerics::Matrix cov(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) cov(i, j) = r[i][j] * sd[i] * sd[j];
  return {mean, cov};
}

// Material with every calibrated parameter at its published mean.
inline sma::MaterialParameters published_means() {
  const auto box = published_box();
  const auto g = published_posterior();
  return sma::apply_parameters(sma::MaterialParameters{}, box.ids(),
                               std::span<const double>(g.mean.data(), static_cast<std::size_t>(g.mean.size())));
}

inline calib::PriorSpec three_parameter_prior(double a0 = 1e-3, double b0 = 1e-3) {
  using sma::ParameterId;
  return calib::PriorSpec({{ParameterId::A_f, 300.0, 345.0, 318.0},
                           {ParameterId::M_s, 265.0, 300.0, 285.0},
                           {ParameterId::H_sat, 0.03, 0.07, 0.045}},
                          a0, b0);
}

// Loops of `truth` at 100, 150 and 200 MPa with `points` per branch and
// optional additive strain noise.
inline std::vector<ExperimentalDataset> synthetic_datasets(const sma::MaterialParameters& truth,
                                                          std::size_t points = 60, double noise_sd = 0.0,
                                                          Rng* rng = nullptr) {
  std::vector<ExperimentalDataset> out;
  for (double s : {100e6, 150e6, 200e6}) {
    const auto [lo, hi] = sma::covering_range(s, truth, 10.0);
    auto d = dataset_from_loop(sma::simulate_isobaric_loop(s, hi, lo, points, truth));
    if (rng != nullptr && noise_sd > 0.0) {
      for (auto& e : d.cooling.eps_t) e += noise_sd * rng->normal();
      for (auto& e : d.heating.eps_t) e += noise_sd * rng->normal();
    }
    out.push_back(std::move(d));
  }
  return out;
}

// Residuals equal to theta: with sigma2 = 1 the target is N(0, I).
class StandardNormalModel : public calib::Model {
 public:
  explicit StandardNormalModel(calib::PriorSpec prior) : prior_(std::move(prior)) {}
  std::size_t dimension() const override { return prior_.dimension(); }
  calib::Evaluation evaluate(const numerics::Vector& theta) const override {
    calib::Evaluation e;
    e.log_prior = prior_.log_density(theta);
    if (e.feasible()) e.residuals.assign(theta.data(), theta.data() + theta.size());
    return e;
  }

 private:
  calib::PriorSpec prior_;
};

// Box [-half_width, half_width]^d centred on the origin.
inline calib::PriorSpec box_prior(std::size_t d, double half_width) {
  std::vector<calib::ParameterPrior> p;
  const auto ids = sma::all_parameters();
  for (std::size_t i = 0; i < d; ++i) p.push_back({ids[i], -half_width, half_width, 0.0});
  return calib::PriorSpec(p);
}

}  // namespace smacal::testing
