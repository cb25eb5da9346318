#include <benchmark/benchmark.h>

#include <vector>

#include "smacal/calibrate.hpp"
#include "smacal/numerics.hpp"
#include "smacal/sma_model.hpp"

using namespace smacal;

namespace {

std::vector<ExperimentalDataset> datasets(const sma::MaterialParameters& p, std::size_t points) {
  std::vector<ExperimentalDataset> out;
  for (double s : {100e6, 150e6, 200e6}) {
    const auto [lo, hi] = sma::covering_range(s, p, 10.0);
    out.push_back(dataset_from_loop(sma::simulate_isobaric_loop(s, hi, lo, points, p)));
  }
  return out;
}

}  // namespace

// One full major loop; the argument is the number of points per branch.
static void BM_SimulateLoop(benchmark::State& state) {
  const sma::MaterialParameters p{};
  const auto [lo, hi] = sma::covering_range(150e6, p, 10.0);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sma::simulate_isobaric_loop(150e6, hi, lo, n, p));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 2);
}
BENCHMARK(BM_SimulateLoop)->Arg(60)->Arg(200)->Arg(500)->Arg(2000);

static void BM_LoopDistance(benchmark::State& state) {
  sma::MaterialParameters a{}, b{};
  b.A_f += 2.0;
  const auto [lo, hi] = sma::covering_range(150e6, a, 10.0);
  const auto la = sma::simulate_isobaric_loop(150e6, hi, lo, 500, a);
  const auto lb = sma::simulate_isobaric_loop(150e6, hi, lo, 500, b);
  for (auto _ : state) benchmark::DoNotOptimize(sma::loop_distance(la, lb));
}
BENCHMARK(BM_LoopDistance);

// Likelihood evaluation of one MCMC candidate against three datasets.
static void BM_ModelEvaluate(benchmark::State& state) {
  const sma::MaterialParameters truth{};
  const calib::PriorSpec prior({{sma::ParameterId::A_f, 300.0, 345.0, 318.0},
                                {sma::ParameterId::M_s, 265.0, 300.0, 285.0},
                                {sma::ParameterId::H_sat, 0.03, 0.07, 0.045}});
  calib::SmaModelOptions opt;
  opt.jobs = 1;
  const calib::SmaCalibrationModel model(prior, truth, datasets(truth, static_cast<std::size_t>(state.range(0))), opt);
  const numerics::Vector theta = prior.initial();
  for (auto _ : state) benchmark::DoNotOptimize(model.evaluate(theta));
}
BENCHMARK(BM_ModelEvaluate)->Arg(60)->Arg(500);

static void BM_FTail(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(numerics::f_tail(800.62, 1, 16369));
}
BENCHMARK(BM_FTail);

static void BM_KlMvn(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  const numerics::Matrix m = numerics::Matrix::Random(d, d);
  const numerics::GaussianSummary p{numerics::Vector::Random(d), m * m.transpose() + numerics::Matrix::Identity(d, d)};
  const numerics::GaussianSummary q{numerics::Vector::Zero(d), numerics::Matrix::Identity(d, d)};
  for (auto _ : state) benchmark::DoNotOptimize(numerics::kl_mvn(p, q));
}
BENCHMARK(BM_KlMvn)->Arg(3)->Arg(8)->Arg(14);

BENCHMARK_MAIN();
