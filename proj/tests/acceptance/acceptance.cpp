// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "smacal/calibrate.hpp"
#include "smacal/doe.hpp"
#include "smacal/error.hpp"
#include "smacal/infogain.hpp"
#include "smacal/numerics.hpp"
#include "smacal/propagate.hpp"
#include "smacal/sma_model.hpp"
#include "smacal_cli/commands.hpp"

using namespace smacal;
using numerics::Matrix;
using numerics::Vector;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

template <typename... Args>
std::string format(const char* fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

std::size_t burn_in_or_fifth(const Matrix& samples) {
  try {
    return calib::detect_burn_in(samples);
  } catch (const Error&) {
    return static_cast<std::size_t>(samples.rows()) / 5;
  }
}

// 1. Factorial scale.
Verdict factorial_scale() {
  const auto t0 = Clock::now();
  const auto d = doe::generate_full_factorial(testing::screening_factors());
  doe::EvaluationOptions eval;
  eval.stress = 150e6;
  const auto responses = doe::evaluate_design(d, sma::MaterialParameters{}, eval);
  const auto t = doe::anova_main_effects(d, responses.values);
  const double elapsed = seconds_since(t0);
  const bool unit_dof = std::all_of(t.factors.begin(), t.factors.end(), [](const auto& r) { return r.dof == 1.0; });
  const bool pass = d.row_count() == 16384 && t.factors.size() == 14 && unit_dof && t.error.dof == 16369.0 &&
                    t.total.dof == 16383.0 && elapsed <= 600.0;
  return {pass, format("%zu rows, factor d.f. %s, error d.f. %.0f, total d.f. %.0f, %.1f s", d.row_count(),
                       unit_dof ? "1" : "not 1", t.error.dof, t.total.dof, elapsed)};
}

// 2. F-tail fidelity.
Verdict f_tail_fidelity() {
  const auto big = numerics::f_tail(800.62, 1, 16369);
  const double log10_err = std::abs(big.log10_p - std::log10(5.30e-172)) / std::abs(std::log10(5.30e-172));
  const double small = numerics::f_survival(3.93, 1, 16369);
  bool zero_ok = true;
  for (int d1 : {1, 3, 14}) {
    for (int d2 : {1, 10, 16369}) zero_ok = zero_ok && numerics::f_survival(0.0, d1, d2) == 1.0;
  }
  const bool pass = log10_err <= 0.01 && std::abs(small - 0.0476) <= 0.0005 && zero_ok;
  return {pass, format("log10 p(800.62) = %.3f (rel. err %.2e), p(3.93) = %.5f, p(0) = 1 %s", big.log10_p, log10_err,
                       small, zero_ok ? "exactly" : "violated")};
}

// 3. ANOVA against the term-by-term oracle.
Verdict anova_oracle() {
  Rng rng(20240);
  std::vector<doe::FactorSpec> two{{sma::ParameterId::M_s, 0.0, 1.0}, {sma::ParameterId::A_f, 0.0, 1.0}};
  const auto d = doe::generate_full_factorial(two);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> y(4);
    for (auto& v : y) v = std::exp(2.0 * rng.normal()) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    const auto ref = testing::two_factor_anova(y);
    const auto tab = doe::anova_main_effects(d, y);
    const double scale = std::max(1e-300, ref.ss_t);
    worst = std::max({worst, std::abs(tab.factors[0].sum_sq - ref.ss_a) / scale,
                      std::abs(tab.factors[1].sum_sq - ref.ss_b) / scale, std::abs(tab.error.sum_sq - ref.ss_e) / scale,
                      std::abs(tab.total.sum_sq - ref.ss_t) / scale, rel(tab.factors[0].mean_sq, ref.ms_a),
                      rel(tab.error.mean_sq, ref.ms_e), rel(tab.factors[0].f, ref.f_a), rel(tab.factors[1].f, ref.f_b),
                      rel(tab.factors[0].p, boost::math::ibeta(0.5, 0.5, 1.0 / (1.0 + ref.f_a))),
                      rel(tab.factors[1].p, boost::math::ibeta(0.5, 0.5, 1.0 / (1.0 + ref.f_b)))});
    if (tab.error.dof != 1.0 || tab.total.dof != 3.0) worst = 1.0;
  }
  double worst_identity = 0.0;
  for (std::size_t n : {2u, 3u, 5u, 8u, 11u}) {
    std::vector<doe::FactorSpec> f;
    const auto ids = sma::all_parameters();
    for (std::size_t i = 0; i < n; ++i) f.push_back({ids[i], 0.0, 1.0});
    const auto dn = doe::generate_full_factorial(f);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> y(dn.row_count());
      for (auto& v : y) v = 1e3 + rng.normal() * std::exp(rng.normal());
      const auto tab = doe::anova_main_effects(dn, y);
      double sum = tab.error.sum_sq;
      for (const auto& r : tab.factors) sum += r.sum_sq;
      worst_identity = std::max(worst_identity, rel(sum, tab.total.sum_sq));
    }
  }
  return {worst <= 1e-10 && worst_identity <= 1e-8,
          format("100 two-factor tables, worst rel. dev. %.2e; SS identity worst %.2e over 100 designs", worst,
                 worst_identity)};
}

// 4. Forward-model plateau, closure and second law.
Verdict forward_plateau() {
  const auto p = testing::published_means();
  double plateau = 0.0, closure = 0.0;
  std::size_t violations = 0;
  for (double s : {100e6, 150e6, 200e6}) {
    const auto [lo, hi] = sma::covering_range(s, p, 10.0);
    const auto loop = sma::simulate_isobaric_loop(s, hi, lo, sma::default_grid_points, p);
    const double h = sma::h_cur(s, p);
    plateau = std::max({plateau, std::abs(loop.cooling.back().eps_t - h), std::abs(loop.heating.front().eps_t - h)});
    closure = std::max(closure, std::abs(loop.heating.back().eps_t - loop.cooling.front().eps_t));
    violations += sma::count_second_law_violations(loop, p);
  }
  return {plateau <= 1e-9 && closure <= 1e-8 && violations == 0,
          format("plateau dev. %.1e, closure %.1e, second-law violations %zu", plateau, closure, violations)};
}

// 5. MCMC correctness.
Verdict mcmc_correctness() {
  std::size_t violations = 0;
  double slowest = 0.0;

  // (a) analytic target.
  const auto box = testing::box_prior(2, 20.0);
  testing::StandardNormalModel normal(box);
  calib::ChainConfig cfg;
  cfg.n_steps = 110000;
  cfg.seed = 5;
  cfg.fixed_sigma2 = 1.0;
  auto t0 = Clock::now();
  const auto chain = calib::run_chain(normal, box, cfg);
  slowest = seconds_since(t0);
  const std::size_t burn = std::min<std::size_t>(burn_in_or_fifth(chain.samples), chain.size() - 100001);
  const Matrix kept = chain.samples.bottomRows(static_cast<Eigen::Index>(chain.size() - burn));
  for (Eigen::Index i = 0; i < chain.samples.rows(); ++i) violations += !box.in_bounds(chain.samples.row(i).transpose());
  const auto g = numerics::sample_moments(kept);
  // Batch-means standard error, 100 batches.
  const Eigen::Index batch = kept.rows() / 100;
  double worst_z = 0.0;
  for (Eigen::Index j = 0; j < 2; ++j) {
    double ss = 0.0;
    for (Eigen::Index b = 0; b < 100; ++b) {
      const double m = kept.col(j).segment(b * batch, batch).mean();
      ss += (m - g.mean[j]) * (m - g.mean[j]);
    }
    const double se = std::sqrt(ss / 99.0 / 100.0);
    worst_z = std::max(worst_z, std::abs(g.mean[j]) / se);
  }
  const double cov_err = (g.covariance - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff();
  const bool a_ok = kept.rows() >= 100000 && worst_z <= 3.0 && cov_err <= 0.1;

  // (b) three-parameter synthetic truth, 20 seeded runs.
  const sma::MaterialParameters truth = testing::published_means();
  const double tv[3] = {truth.A_f, truth.M_s, truth.H_sat};
  const auto prior = testing::three_parameter_prior(1e-3, 1e-10);
  int covered[3] = {0, 0, 0};
  int joint = 0;
  for (int run = 0; run < 20; ++run) {
    Rng noise(derive_seed(100, static_cast<std::uint64_t>(run)));
    const auto data = testing::synthetic_datasets(truth, 60, 2e-4, &noise);
    calib::SmaModelOptions mo;
    mo.residuals = calib::ResidualMode::per_point;
    const calib::SmaCalibrationModel model(prior, truth, data, mo);
    calib::ChainConfig c;
    c.n_steps = 30000;
    c.seed = derive_seed(200, static_cast<std::uint64_t>(run));
    c.scale_adaptation = true;
    t0 = Clock::now();
    const auto ch = calib::run_chain(model, prior, c);
    slowest = std::max(slowest, seconds_since(t0));
    for (Eigen::Index i = 0; i < ch.samples.rows(); ++i) {
      const Vector th = ch.samples.row(i).transpose();
      violations += !prior.in_bounds(th) || sma::feasibility_violation(model.parameters_at(th)).has_value();
    }
    const std::size_t b = burn_in_or_fifth(ch.samples);
    bool all = true;
    for (Eigen::Index j = 0; j < 3; ++j) {
      std::vector<double> v(ch.samples.col(j).data() + b, ch.samples.col(j).data() + ch.samples.rows());
      std::sort(v.begin(), v.end());
      const bool in = numerics::sorted_quantile(v, 0.025) <= tv[j] && tv[j] <= numerics::sorted_quantile(v, 0.975);
      covered[j] += in;
      all = all && in;
    }
    joint += all;
  }
  const bool b_ok = std::min({covered[0], covered[1], covered[2]}) >= 18;
  const bool pass = a_ok && b_ok && violations == 0 && slowest <= 900.0;
  return {pass, format("(a) %lld kept, max |mean|/SE %.2f, max cov. dev. %.3f; (b) coverage A_f %d, M_s %d, H_sat "
                       "%d of 20 (all three %d); (c) %zu violations; slowest chain %.1f s",
                       static_cast<long long>(kept.rows()), worst_z, cov_err, covered[0], covered[1], covered[2],
                       joint, violations, slowest)};
}

// 6. Conjugate Gibbs moments.
Verdict conjugacy() {
  Rng rng(66);
  std::vector<double> residuals(40);
  for (auto& r : residuals) r = 1e-3 * rng.normal();
  const double a0 = 2.0, b0 = 1e-5;
  double ss = 0.0;
  for (double r : residuals) ss += r * r;
  const double a = a0 + 0.5 * static_cast<double>(residuals.size());
  const double b = b0 + 0.5 * ss;
  const double mean = b / (a - 1.0);
  const double var = b * b / ((a - 1.0) * (a - 1.0) * (a - 2.0));
  const int n = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s = calib::gibbs_update_sigma2(residuals, a0, b0, rng);
    sum += s;
    sum_sq += s * s;
  }
  const double m = sum / n;
  const double v = (sum_sq - n * m * m) / (n - 1);
  const double em = rel(m, mean), ev = rel(v, var);
  return {em <= 0.01 && ev <= 0.01, format("10^6 draws: mean rel. err %.4f, variance rel. err %.4f", em, ev)};
}

// 7. Uncertainty propagation consistency.
Verdict propagation_consistency() {
  Vector c(3);
  c << 2.0, -1.0, 0.5;
  Matrix a(4, 3);
  a << 1, 0, 0, 0, 1, 0, 1, 1, 1, 2, -1, 3;
  const prop::VectorModel f = [&](const Vector& th) { return Vector(a * th); };
  Matrix cov(3, 3);
  cov << 1.0, 0.2, 0.0, 0.2, 0.5, 0.1, 0.0, 0.1, 2.0;
  const numerics::GaussianSummary post{c, cov};
  const auto fosm = prop::fosm_pointwise(f, post);
  Rng rng(99);
  Matrix outputs(200000, 4);
  for (Eigen::Index i = 0; i < outputs.rows(); ++i) outputs.row(i) = (a * numerics::mvn_sample(post, rng)).transpose();
  const auto direct = prop::direct_pointwise(outputs, 0.9545);
  double linear_dev = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double width = fosm.upper[i] - fosm.lower[i];
    linear_dev = std::max({linear_dev, std::abs(direct.lower[i] - fosm.lower[i]) / width,
                           std::abs(direct.upper[i] - fosm.upper[i]) / width});
  }

  // Hump near the forward onset on a synthetic-truth posterior.
  const sma::MaterialParameters truth{};
  const auto prior = testing::three_parameter_prior();
  const calib::SmaCalibrationModel model(prior, truth, testing::synthetic_datasets(truth));
  calib::ChainConfig cfg;
  cfg.n_steps = 40000;
  cfg.seed = 4;
  const auto chain = calib::run_chain(model, prior, cfg);
  const auto summary = calib::summarize(chain, 8000);
  const Matrix kept = chain.samples.bottomRows(chain.samples.rows() - 8000);
  prop::ParameterSpace space{prior.ids(), truth, prior.lower(), prior.upper()};
  const double stress = 150e6;
  const auto centre = sma::apply_parameters(truth, space.ids,
                                            std::span<const double>(summary.gaussian.mean.data(), 3));
  const double onset =
      sma::transformation_temperatures(stress, sma::derive_coefficients(centre), centre).forward_start;
  const auto [lo, hi] = sma::covering_range(stress, truth, 30.0);
  const auto grid = sma::uniform_grid(hi, lo, 400);
  const auto band_f = prop::fosm_band(summary.gaussian, space, stress, grid);
  const auto band_d = prop::direct_band(kept, space, stress, grid);
  const auto sigma = prop::band_sigma(band_f.cooling);
  std::size_t peak = 0;
  bool found = false;
  for (std::size_t i = 0; i < grid.cooling.size(); ++i) {
    if (std::abs(grid.cooling[i] - onset) <= 5.0 && (!found || sigma[i] > sigma[peak])) {
      peak = i;
      found = true;
    }
  }
  const bool local_max = found && peak > 0 && peak + 1 < sigma.size() && sigma[peak] >= sigma[peak - 1] &&
                         sigma[peak] >= sigma[peak + 1] && sigma[peak] > 0.0;
  const double wf = band_f.cooling[peak].upper - band_f.cooling[peak].lower;
  const double wd = band_d.cooling[peak].upper - band_d.cooling[peak].lower;
  const bool pass = linear_dev <= 0.05 && local_max && wf > wd;
  return {pass, format("linear: max edge dev. %.3f of width; SMA: sigma peak %.2f K from onset %s, FOSM width %.4f vs "
                       "direct %.4f",
                       linear_dev, grid.cooling[peak] - onset, local_max ? "(local max)" : "(no local max)", wf, wd)};
}

// 8. KL suite.
Verdict kl_suite() {
  Rng rng(8);
  Matrix m = Matrix::Random(5, 5);
  const numerics::GaussianSummary g{Vector::Random(5), m * m.transpose() + Matrix::Identity(5, 5)};
  const double same = numerics::kl_mvn(g, g);
  const numerics::GaussianSummary p{Vector::Constant(1, 1.0), Matrix::Identity(1, 1)};
  const numerics::GaussianSummary q{Vector::Constant(1, 0.0), Matrix::Identity(1, 1)};
  const double shifted = numerics::kl_mvn(p, q);

  const auto prior = testing::published_posterior();
  const auto bounds = testing::published_box(1e-3, 1e-10);
  info::InfoGainConfig cfg;
  cfg.truth = info::TruthMode::shared;
  cfg.synthetic.noise_sd = 1e-3;
  cfg.sequential.model.residuals = calib::ResidualMode::per_point;
  cfg.sequential.chain.n_steps = 8000;
  cfg.sequential.chain.scale_adaptation = true;
  const std::vector<info::DesignCandidate> candidates{{"replica", {150e6}, 3}, {"varied", {175e6, 250e6, 300e6}, 1}};
  int wins = 0;
  double kl_r = 0.0, kl_v = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    cfg.seed = 1000 + static_cast<std::uint64_t>(rep);
    cfg.sequential.chain.seed = 5000 + static_cast<std::uint64_t>(rep);
    const auto report = info::compare_designs(prior, bounds, sma::MaterialParameters{}, candidates, cfg);
    wins += report.candidates[1].kl > report.candidates[0].kl;
    kl_r += report.candidates[0].kl / 20.0;
    kl_v += report.candidates[1].kl / 20.0;
  }
  const bool pass = std::abs(same) <= 1e-12 && std::abs(shifted - 0.5) <= 1e-15 && wins >= 16;
  return {pass, format("KL(identical) = %.1e, KL(shifted) = %.17g, varied > replica in %d of 20 (mean KL %.2f vs %.2f)",
                       same, shifted, wins, kl_v, kl_r)};
}

// 9. Byte-identical pipeline.
const char* const pipeline_config = R"(parameters:
  A_f: {lower: 300, upper: 345, initial: 318}
  M_s: {lower: 265, upper: 300, initial: 285}
  H_sat: {lower: 0.03, upper: 0.07, initial: 0.045}
stresses_MPa: [100, 150, 200]
grid: {points: 120}
doe:
  stress_MPa: 150
  grid_points: 200
  factors:
    E_A: {low: 54, high: 66}
    E_M: {low: 32, high: 39.2}
    M_s: {low: 277, high: 284}
    M_f: {low: 256.5, high: 263.5}
    A_s: {low: 293, high: 300}
    A_f: {low: 319, high: 326}
    C_A: {low: 10.3, high: 13.3}
    C_M: {low: 7, high: 9}
    H_sat: {low: 0.0477, high: 0.0557}
    k: {low: 0.0495, high: 0.0695}
mcmc:
  steps: 20000
  seed: 11
  b0: 1.0e-10
  residuals: per_point
  scale_adaptation: true
propagate: {max_samples: 500, grid_points: 100}
infogain:
  steps: 3000
  noise_sd: 1.0e-3
  truth: shared
  residuals: per_point
  b0: 1.0e-10
  scale_adaptation: true
  candidates:
    - {name: replica, stresses_MPa: [150], samples: 3}
    - {name: varied, stresses_MPa: [175, 250, 300]}
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool run_pipeline(const fs::path& root, const fs::path& out) {
  std::ostringstream sink;
  const std::string config = (root / "config.yaml").string();
  const auto call = [&](std::vector<std::string> args) { return cli::run(args, sink, sink) == cli::exit_ok; };
  std::vector<std::string> data;
  for (const char* s : {"100", "150", "200"}) {
    if (!call({"simulate", "-c", config, "-s", s, "-o", out.string()})) return false;
    data.push_back((out / (std::string("loop_") + s + "MPa.csv")).string());
  }
  std::vector<std::string> cal{"calibrate", "-c", config, "-o", out.string(), "-d"};
  cal.insert(cal.end(), data.begin(), data.end());
  const std::string chain = (out / "chain.csv").string();
  return call({"doe", "-c", config, "-o", out.string()}) && call(cal) &&
         call({"propagate", "-c", config, "-o", out.string(), "--chain", chain, "-m", "fosm"}) &&
         call({"propagate", "-c", config, "-o", out.string(), "--chain", chain, "-m", "direct"}) &&
         call({"infogain", "-c", config, "-o", out.string(), "--chain", chain});
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "smacal_acceptance_pipeline";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "config.yaml") << pipeline_config;
  if (!run_pipeline(root, root / "a") || !run_pipeline(root, root / "b")) return {false, "a pipeline stage failed"};
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    ++files;
    const auto twin = root / "b" / entry.path().filename();
    differing += !fs::exists(twin) || slurp(entry.path()) != slurp(twin);
  }
  std::size_t files_b = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(root / "b")) ++files_b;
  fs::remove_all(root);
  return {differing == 0 && files == files_b && files > 0,
          format("%zu output files, %zu differ between two runs", files, differing)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"factorial scale", factorial_scale},
      {"F-tail fidelity", f_tail_fidelity},
      {"ANOVA oracle", anova_oracle},
      {"forward-model plateau", forward_plateau},
      {"MCMC correctness", mcmc_correctness},
      {"conjugacy", conjugacy},
      {"propagation consistency", propagation_consistency},
      {"KL suite", kl_suite},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
