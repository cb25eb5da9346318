#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <string>

#include "smacal/error.hpp"
#include "smacal/io.hpp"

using namespace smacal;
using numerics::Matrix;
using numerics::Vector;
using sma::ParameterId;

namespace {

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

bool same(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (!same(a(i, j), b(i, j))) return false;
  return true;
}

bool same(const doe::AnovaRow& a, const doe::AnovaRow& b) {
  return a.source == b.source && same(a.sum_sq, b.sum_sq) && same(a.dof, b.dof) && same(a.mean_sq, b.mean_sq) &&
         same(a.f, b.f) && same(a.p, b.p) && same(a.log10_p, b.log10_p);
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("smacal_test_io_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::io_error;
}

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

std::string two_branch_csv(int n) {
  std::string s = "# stress_MPa=150\nbranch,T_K,eps_t\n";
  for (int i = 0; i < n; ++i) s += "cooling," + std::to_string(360 - i) + "," + std::to_string(0.001 * i) + "\n";
  for (int i = 0; i < n; ++i) s += "heating," + std::to_string(300 + i) + "," + std::to_string(0.05 - 0.001 * i) + "\n";
  return s;
}

}  // namespace

TEST_CASE("simulated loop exported as CSV ingests to an equal dataset") {
  const sma::MaterialParameters p{};
  const auto [t_min, t_max] = sma::covering_range(150e6, p, 10.0);
  const auto loop = sma::simulate_isobaric_loop(150e6, t_max, t_min, 200, p);
  const auto text = io::loop_csv(loop, "sim");
  const auto d = io::parse_dataset_csv(text);
  CHECK(d == dataset_from_loop(loop, "sim"));
  CHECK(io::parse_dataset_csv(io::dataset_csv(d)) == d);
}

TEST_CASE("dataset round-trips through a file") {
  const auto dir = scratch_dir("dataset");
  auto d = io::parse_dataset_csv(two_branch_csv(12));
  d.stress = 123.456789e6;
  d.label = "run 3";
  io::write_dataset_csv(dir / "d.csv", d);
  CHECK(io::read_dataset_csv(dir / "d.csv") == d);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset parsing") {
  SUBCASE("two branches, sorted") {
    const auto d = io::parse_dataset_csv(two_branch_csv(10));
    CHECK(d.stress == 150e6);
    CHECK(d.cooling.size() == 10);
    CHECK(d.heating.size() == 10);
    CHECK(d.cooling.T.front() > d.cooling.T.back());
    CHECK(d.heating.T.front() < d.heating.T.back());
  }
  SUBCASE("missing eps_t column names the column") {
    const std::string text = "# stress_MPa=150\nbranch,T_K,strain\ncooling,300,0.01\n";
    const auto f = [&] { io::parse_dataset_csv(text); };
    CHECK(code_of(f) == ErrorCode::parse_error);
    CHECK(message_of(f).find("eps_t") != std::string::npos);
  }
  SUBCASE("bad value reports the row") {
    std::string text = two_branch_csv(10);
    text += "heating,abc,0.01\n";
    const auto f = [&] { io::parse_dataset_csv(text, "x.csv"); };
    CHECK(code_of(f) == ErrorCode::parse_error);
    CHECK(message_of(f).find("line 23") != std::string::npos);
  }
  SUBCASE("unknown branch") {
    std::string text = two_branch_csv(10) + "sideways,1,1\n";
    CHECK(code_of([&] { io::parse_dataset_csv(text); }) == ErrorCode::parse_error);
  }
  SUBCASE("missing stress") {
    CHECK(code_of([] { io::parse_dataset_csv("branch,T_K,eps_t\ncooling,1,1\n"); }) == ErrorCode::parse_error);
  }
  SUBCASE("short branch fails validation") {
    CHECK(code_of([] { io::parse_dataset_csv(two_branch_csv(5)); }) == ErrorCode::validation_error);
  }
  SUBCASE("repeated temperatures are averaged") {
    std::string text = two_branch_csv(10) + "heating,300,0.07\n";
    const auto d = io::parse_dataset_csv(text);
    CHECK(d.heating.size() == 10);
    CHECK(d.heating.T.front() == 300.0);
    CHECK(d.heating.eps_t.front() == doctest::Approx(0.06).epsilon(1e-15));
  }
}

TEST_CASE("design and ANOVA tables round-trip") {
  const doe::DesignMatrix d = doe::generate_full_factorial(
      {{ParameterId::H_sat, 0.0477, 0.0557}, {ParameterId::k, 0.0495, 0.0695}, {ParameterId::M_s, 277, 284}});
  std::vector<double> y;
  for (std::size_t i = 0; i < d.row_count(); ++i) y.push_back(0.1 * static_cast<double>(i * i) + 1.0 / 3.0);
  const auto t = io::parse_design_csv(io::design_csv(d, y));
  CHECK(t.design.rows == d.rows);
  REQUIRE(t.design.factors.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(t.design.factors[j].id == d.factors[j].id);
    CHECK(t.design.factors[j].low == d.factors[j].low);
    CHECK(t.design.factors[j].high == d.factors[j].high);
  }
  CHECK(t.responses == y);

  const auto a = doe::anova_main_effects(d, y);
  const auto b = io::parse_anova_csv(io::anova_csv(a));
  REQUIRE(b.factors.size() == a.factors.size());
  for (const auto& row : a.factors) {
    bool found = false;
    for (const auto& other : b.factors) found = found || same(row, other);
    CHECK(found);
  }
  CHECK(same(a.error, b.error));
  CHECK(same(a.total, b.total));
}

TEST_CASE("chain CSV and sidecar round-trip") {
  calib::Chain c;
  c.names = {"A_f", "H_sat"};
  c.samples.resize(4, 2);
  c.samples << 318.0, 0.045, 318.1234567890123, 0.04500000000000001, 318.1234567890123, 0.04500000000000001, 1.0 / 3.0,
      2.0 / 3.0;
  c.sigma2 = {1.0, 1e-7, 1.2345678901234567e-8, 3e-300};
  c.accepted = {1, 1, 0, 1};
  const auto r = io::parse_chain_csv(io::chain_csv(c));
  CHECK(r.names == c.names);
  CHECK(same(r.samples, c.samples));
  CHECK(r.sigma2 == c.sigma2);
  CHECK(r.accepted == c.accepted);

  const auto dir = scratch_dir("sidecar");
  io::ChainSidecar s{42, 3, 1, c.names, 2.0 / 3.0, 5, "mcmc:\n  steps: 3\n"};
  io::write_chain_sidecar(dir / "chain.json", s);
  const auto t = io::read_chain_sidecar(dir / "chain.json");
  CHECK(t.seed == s.seed);
  CHECK(t.n_steps == s.n_steps);
  CHECK(t.burn_in == s.burn_in);
  CHECK(t.names == s.names);
  CHECK(t.acceptance_rate == s.acceptance_rate);
  CHECK(t.failed_evaluations == s.failed_evaluations);
  CHECK(t.config == s.config);
  s.burn_in.reset();
  io::write_chain_sidecar(dir / "chain.json", s);
  CHECK_FALSE(io::read_chain_sidecar(dir / "chain.json").burn_in.has_value());
  std::filesystem::remove_all(dir);
}

TEST_CASE("published posterior summary round-trips") {
  // Means and standard deviations of the eight calibrated parameters.
  calib::PosteriorSummary s;
  s.names = {"A_s", "A_f", "M_s", "M_f", "C_A", "E_M", "H_sat", "k"};
  Vector mean(8), sd(8);
  mean << 296.6, 322.6, 280.4, 259.9, 11.8, 35.6, 0.0517, 0.0595;
  sd << 8.5, 11.3, 6.6, 8.5, 4.1, 8.6, 0.0044, 0.0237;
  s.gaussian.mean = mean;
  s.gaussian.covariance = Matrix(sd.cwiseAbs2().asDiagonal());
  s.pearson = Matrix::Identity(8, 8);
  s.pearson(0, 1) = s.pearson(1, 0) = -0.0721;
  s.burn_in = 2000;
  s.samples = 18000;
  s.marginals.push_back({{0.0, 0.5, 1.0}, {3, 7}});
  s.joints.push_back({0, 1, {0.0, 1.0}, {2.0, 3.0}, {10}});

  const auto r = io::parse_summary_json(io::summary_json(s));
  CHECK(r.names == s.names);
  CHECK(same(r.gaussian.mean, s.gaussian.mean));
  CHECK(same(r.gaussian.covariance, s.gaussian.covariance));
  CHECK(same(r.pearson, s.pearson));
  CHECK(r.burn_in == s.burn_in);
  CHECK(r.samples == s.samples);
  REQUIRE(r.marginals.size() == 1);
  CHECK(r.marginals[0].edges == s.marginals[0].edges);
  CHECK(r.marginals[0].counts == s.marginals[0].counts);
  REQUIRE(r.joints.size() == 1);
  CHECK(r.joints[0].y_edges == s.joints[0].y_edges);
  CHECK(r.joints[0].counts == s.joints[0].counts);
  const Vector back = r.standard_deviations();
  for (int i = 0; i < 8; ++i) CHECK(back[i] == doctest::Approx(sd[i]).epsilon(1e-15));
}

TEST_CASE("degenerate Pearson entries survive as NaN") {
  Matrix samples(5, 2);
  samples << 1, 2, 1, 3, 1, 4, 1, 5, 1, 6;
  const auto s = calib::summarize(samples, {"a", "b"}, 0);
  const auto r = io::parse_summary_json(io::summary_json(s));
  CHECK(std::isnan(r.pearson(0, 1)));
  CHECK(r.degenerate_pairs == s.degenerate_pairs);
}

TEST_CASE("band CSV round-trips") {
  prop::ConfidenceBand b;
  b.stress = 200e6;
  b.method = prop::BandMethod::direct;
  b.coverage = 0.9545;
  b.cooling = {{350.0, 0.0, -1e-3, 1e-3}, {349.5, 1.0 / 7.0, 0.1, 0.2}};
  b.heating = {{300.0, 0.05, 0.049, 0.051}};
  const auto r = io::parse_band_csv(io::band_csv(b));
  CHECK(r.stress == b.stress);
  CHECK(r.method == b.method);
  CHECK(r.coverage == b.coverage);
  REQUIRE(r.cooling.size() == 2);
  REQUIRE(r.heating.size() == 1);
  CHECK(r.cooling[1].mean == b.cooling[1].mean);
  CHECK(r.cooling[0].lower == b.cooling[0].lower);
  CHECK(r.heating[0].upper == b.heating[0].upper);
}

TEST_CASE("information gain report is valid JSON") {
  info::InfoGainReport r;
  r.seed = 9;
  Vector truth(2);
  truth << 320.0, 0.05;
  r.truth = truth;
  info::CandidateResult a;
  a.candidate = {"replica", {150e6}, 3};
  a.kl = 1.25;
  a.final_posterior.mean = truth;
  a.final_posterior.covariance = Matrix::Identity(2, 2);
  r.candidates = {a};
  r.ranking = {0};
  const auto j = nlohmann::json::parse(io::infogain_json(r));
  CHECK(j.at("seed") == 9);
  CHECK(j.at("truth").at(1).get<double>() == 0.05);
  CHECK(j.at("candidates").at(0).at("stresses_MPa").at(0).get<double>() == 150.0);
  CHECK(j.at("candidates").at(0).at("kl").get<double>() == 1.25);
  CHECK(j.at("ranking").at(0) == "replica");
}

TEST_CASE("seventeen significant digits") {
  for (double v : {0.1, 1.0 / 3.0, 2.0 / 3.0, 1e-300, 6.02214076e23, -0.0517}) {
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(std::nan("")) == "nan");
}
