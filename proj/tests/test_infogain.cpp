#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "smacal/error.hpp"
#include "smacal/infogain.hpp"
#include "smacal/propagate.hpp"

using namespace smacal;
using namespace smacal::info;
using numerics::Matrix;
using numerics::Vector;
using sma::ParameterId;

namespace {

calib::PriorSpec bounds() {
  return calib::PriorSpec({{ParameterId::A_f, 300.0, 345.0, 322.6},
                           {ParameterId::M_s, 265.0, 300.0, 280.4},
                           {ParameterId::H_sat, 0.03, 0.07, 0.0517}});
}

numerics::GaussianSummary prior_gaussian() {
  Vector mean(3);
  mean << 322.6, 280.4, 0.0517;
  Vector sd(3);
  sd << 3.0, 2.0, 0.002;
  return {mean, Matrix(sd.cwiseAbs2().asDiagonal())};
}

SequentialConfig quick_sequential(std::size_t steps) {
  SequentialConfig c;
  c.chain.n_steps = steps;
  c.chain.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("zero covariance reproduces the mean-parameter loop") {
  auto g = prior_gaussian();
  g.covariance.setZero();
  Rng rng(1);
  const sma::MaterialParameters base{};
  const auto d = generate_synthetic_dataset(g, bounds(), base, 150e6, {}, rng);
  const auto p = sma::apply_parameters(base, bounds().ids(), std::span<const double>(g.mean.data(), 3));
  const auto loop = sma::simulate_at(150e6, dataset_grid(d), p);
  REQUIRE(d.cooling.size() == 60);
  for (std::size_t i = 0; i < d.cooling.size(); ++i) CHECK(d.cooling.eps_t[i] == loop.cooling[i].eps_t);
  for (std::size_t i = 0; i < d.heating.size(); ++i) CHECK(d.heating.eps_t[i] == loop.heating[i].eps_t);
}

TEST_CASE("synthetic datasets are deterministic per seed") {
  const sma::MaterialParameters base{};
  Rng a(5), b(5), c(6);
  const auto da = generate_synthetic_dataset(prior_gaussian(), bounds(), base, 200e6, {}, a);
  const auto db = generate_synthetic_dataset(prior_gaussian(), bounds(), base, 200e6, {}, b);
  const auto dc = generate_synthetic_dataset(prior_gaussian(), bounds(), base, 200e6, {}, c);
  CHECK(da == db);
  CHECK_FALSE(da == dc);
}

TEST_CASE("an unreachable feasibility region is reported") {
  auto g = prior_gaussian();
  g.mean[1] = 340.0;  // M_s far above A_s, and outside its bounds
  g.covariance *= 1e-6;
  Rng rng(2);
  SyntheticOptions opt;
  opt.max_attempts = 50;
  try {
    generate_synthetic_dataset(g, bounds(), sma::MaterialParameters{}, 150e6, opt, rng);
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::feasibility_exhausted);
  }
}

TEST_CASE("synthetic curves mostly fall inside the direct band of the same posterior") {
  const sma::MaterialParameters base{};
  const auto g = prior_gaussian();
  Rng rng(11);
  Matrix draws(1000, 3);
  for (Eigen::Index i = 0; i < draws.rows(); ++i) draws.row(i) = numerics::mvn_sample(g, rng).transpose();
  prop::ParameterSpace space;
  space.ids = bounds().ids();
  space.base = base;
  double inside = 0.0, total = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto d = generate_synthetic_dataset(g, bounds(), base, 150e6, {}, rng);
    const auto band = prop::direct_band(draws, space, 150e6, dataset_grid(d));
    for (std::size_t i = 0; i < d.cooling.size(); ++i) {
      inside += (d.cooling.eps_t[i] >= band.cooling[i].lower && d.cooling.eps_t[i] <= band.cooling[i].upper) ? 1 : 0;
      total += 1;
    }
    for (std::size_t i = 0; i < d.heating.size(); ++i) {
      inside += (d.heating.eps_t[i] >= band.heating[i].lower && d.heating.eps_t[i] <= band.heating[i].upper) ? 1 : 0;
      total += 1;
    }
  }
  CHECK(inside / total >= 0.9);
}

TEST_CASE("no datasets leaves the prior unchanged") {
  const auto g = prior_gaussian();
  const auto r = sequential_calibrate(g, bounds(), sma::MaterialParameters{}, {}, quick_sequential(100));
  CHECK(r.stages.empty());
  CHECK(r.final_posterior.mean == g.mean);
  CHECK(information_gain(g, r.final_posterior, KlDirection::posterior_to_prior) == 0.0);

  InfoGainConfig cfg;
  cfg.sequential = quick_sequential(100);
  const auto report = compare_designs(g, bounds(), sma::MaterialParameters{}, {{"empty", {}, 1}}, cfg);
  CHECK(report.candidates[0].kl == 0.0);
}

TEST_CASE("noise-free data at the prior mean keeps the posterior near the prior mean") {
  const auto g = prior_gaussian();
  auto zero = g;
  zero.covariance.setZero();
  Rng rng(1);
  const sma::MaterialParameters base{};
  const auto d = generate_synthetic_dataset(zero, bounds(), base, 150e6, {}, rng);
  auto cfg = quick_sequential(6000);
  cfg.chain.fixed_sigma2 = 1e-8;
  const auto r = sequential_calibrate(g, bounds(), base, {d}, cfg);
  const Vector sd = g.covariance.diagonal().cwiseSqrt();
  for (int j = 0; j < 3; ++j) CHECK(std::abs(r.final_posterior.mean[j] - g.mean[j]) < 0.5 * sd[j]);
}

TEST_CASE("replicated noisy data shrinks the posterior") {
  const auto g = prior_gaussian();
  const sma::MaterialParameters base{};
  const calib::PriorSpec vague(bounds().parameters(), 1e-3, 1e-10);
  SyntheticOptions noisy;
  noisy.noise_sd = 1e-3;
  Rng rng(21);
  const Vector truth = draw_admissible(g, vague, base, 1000, rng);
  std::vector<ExperimentalDataset> data;
  for (int i = 0; i < 3; ++i) data.push_back(synthetic_dataset_at(truth, g, vague, base, 150e6, noisy, rng));
  auto cfg = quick_sequential(6000);
  cfg.model.residuals = calib::ResidualMode::per_point;
  cfg.chain.scale_adaptation = true;
  const auto one = sequential_calibrate(g, vague, base, {data[0]}, cfg);
  const auto three = sequential_calibrate(g, vague, base, data, cfg);
  const Vector s1 = one.final_posterior.covariance.diagonal().cwiseSqrt();
  const Vector s3 = three.final_posterior.covariance.diagonal().cwiseSqrt();
  MESSAGE("single " << s1.transpose() << " | three " << s3.transpose());
  for (int j = 0; j < 3; ++j) CHECK(s3[j] <= s1[j]);
}

TEST_CASE("reports are nonnegative, ranked and deterministic") {
  const auto g = prior_gaussian();
  InfoGainConfig cfg;
  cfg.sequential = quick_sequential(3000);
  cfg.seed = 77;
  const std::vector<DesignCandidate> cands{{"replica", {150e6}, 2}, {"varied", {175e6, 250e6}, 1}};
  const auto a = compare_designs(g, bounds(), sma::MaterialParameters{}, cands, cfg);
  const auto b = compare_designs(g, bounds(), sma::MaterialParameters{}, cands, cfg);
  REQUIRE(a.candidates.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.candidates[i].kl >= 0.0);
    CHECK(std::isfinite(a.candidates[i].kl));
    CHECK(a.candidates[i].kl == b.candidates[i].kl);
    CHECK(a.candidates[i].stage_kls.size() == 2);
    CHECK(a.candidates[i].seeds == b.candidates[i].seeds);
  }
  CHECK(a.ranking == b.ranking);
  CHECK(a.candidates[a.ranking[0]].kl >= a.candidates[a.ranking[1]].kl);

  cfg.direction = KlDirection::prior_to_posterior;
  const auto r = compare_designs(g, bounds(), sma::MaterialParameters{}, cands, cfg);
  CHECK(r.candidates[0].kl >= 0.0);
}
