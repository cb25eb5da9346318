#include "smacal_cli/config.hpp"

#include <set>

#include <yaml-cpp/yaml.h>

#include "smacal/error.hpp"
#include "smacal/io.hpp"
#include "smacal/sma_model.hpp"

namespace smacal::cli {

namespace {

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& field, const std::string& what) const {
    const int line = n.Mark().line >= 0 ? n.Mark().line + 1 : 0;
    throw Error(ErrorCode::validation_error,
                origin_ + ":" + std::to_string(line) + ": " + field + ": " + what);
  }

  void expect_map(const YAML::Node& n, const std::string& field) const {
    if (!n.IsMap()) fail(n, field, "expected a mapping");
  }

  void check_keys(const YAML::Node& n, const std::string& field, const std::set<std::string>& allowed) const {
    expect_map(n, field);
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.contains(key)) fail(kv.first, field.empty() ? key : field + "." + key, "unknown key");
    }
  }

  double number(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, field, "expected a number");
    try {
      return n.as<double>();
    } catch (const YAML::Exception&) {
      fail(n, field, "'" + n.Scalar() + "' is not a number");
    }
  }

  double positive(const YAML::Node& n, const std::string& field) const {
    const double v = number(n, field);
    if (!(v > 0.0)) fail(n, field, "must be positive");
    return v;
  }

  std::uint64_t count(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, field, "expected a nonnegative integer");
    try {
      const auto v = n.as<long long>();
      if (v < 0) fail(n, field, "must be nonnegative");
      return static_cast<std::uint64_t>(v);
    } catch (const YAML::Exception&) {
      fail(n, field, "'" + n.Scalar() + "' is not an integer");
    }
  }

  std::string text(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, field, "expected a string");
    return n.Scalar();
  }

  bool boolean(const YAML::Node& n, const std::string& field) const {
    if (n.IsScalar()) {
      const auto& v = n.Scalar();
      if (v == "true") return true;
      if (v == "false") return false;
    }
    fail(n, field, "expected true or false");
  }

  calib::ResidualMode residuals(const YAML::Node& n, const std::string& field) const {
    const auto v = text(n, field);
    if (v == "per_dataset") return calib::ResidualMode::per_dataset;
    if (v != "per_point") fail(n, field, "must be per_dataset or per_point");
    return calib::ResidualMode::per_point;
  }

  sma::ParameterId parameter(const YAML::Node& key, const std::string& field) const {
    const auto name = key.as<std::string>();
    const auto id = sma::parse_parameter(name);
    if (!id) fail(key, field, "unknown parameter '" + name + "'");
    return *id;
  }

 private:
  std::string origin_;
};

void read_material(const Reader& r, const YAML::Node& n, sma::MaterialParameters& m) {
  r.expect_map(n, "material");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    const std::string field = "material." + key;
    if (key == "T0") {
      m.T0 = r.positive(kv.second, field);
    } else if (key == "slope_reference_stress_MPa") {
      m.slope_reference_stress = r.positive(kv.second, field) * 1e6;
    } else {
      sma::set_parameter(m, r.parameter(kv.first, field), r.number(kv.second, field));
    }
  }
}

void read_parameters(const Reader& r, const YAML::Node& n, PipelineConfig& c) {
  r.expect_map(n, "parameters");
  for (const auto& kv : n) {
    const std::string field = "parameters." + kv.first.as<std::string>();
    const auto id = r.parameter(kv.first, field);
    r.check_keys(kv.second, field, {"lower", "upper", "initial"});
    if (!kv.second["lower"] || !kv.second["upper"]) r.fail(kv.second, field, "needs lower and upper bounds");
    calib::ParameterPrior p;
    p.id = id;
    p.lower = r.number(kv.second["lower"], field + ".lower");
    p.upper = r.number(kv.second["upper"], field + ".upper");
    p.initial = kv.second["initial"] ? r.number(kv.second["initial"], field + ".initial")
                                     : sma::get_parameter(c.material, id);
    if (!(p.lower < p.initial && p.initial < p.upper)) {
      r.fail(kv.second, field, "needs lower < initial < upper");
    }
    c.parameters.push_back(p);
  }
}

std::vector<double> stress_list(const Reader& r, const YAML::Node& n, const std::string& field) {
  if (!n.IsSequence() || n.size() == 0) r.fail(n, field, "expected a nonempty list of stresses in MPa");
  std::vector<double> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(r.positive(n[i], field + "[" + std::to_string(i) + "]") * 1e6);
  return out;
}

void read_doe(const Reader& r, const YAML::Node& n, PipelineConfig& c) {
  r.check_keys(n, "doe", {"stress_MPa", "alpha", "grid_points", "factors"});
  if (n["stress_MPa"]) c.doe.stress = r.positive(n["stress_MPa"], "doe.stress_MPa") * 1e6;
  if (n["alpha"]) {
    c.doe.alpha = r.number(n["alpha"], "doe.alpha");
    if (!(c.doe.alpha >= 0.0 && c.doe.alpha <= 1.0)) r.fail(n["alpha"], "doe.alpha", "must lie in [0, 1]");
  }
  if (n["grid_points"]) c.doe.grid_points = r.count(n["grid_points"], "doe.grid_points");
  if (!n["factors"]) return;
  const YAML::Node& f = n["factors"];
  r.expect_map(f, "doe.factors");
  for (const auto& kv : f) {
    const std::string field = "doe.factors." + kv.first.as<std::string>();
    const auto id = r.parameter(kv.first, field);
    r.check_keys(kv.second, field, {"low", "high", "fraction", "range_fraction"});
    const double initial = sma::get_parameter(c.material, id);
    doe::FactorSpec spec{id, 0.0, 0.0};
    if (kv.second["low"] || kv.second["high"]) {
      if (!kv.second["low"] || !kv.second["high"]) r.fail(kv.second, field, "needs both low and high");
      spec.low = r.number(kv.second["low"], field + ".low");
      spec.high = r.number(kv.second["high"], field + ".high");
    } else if (kv.second["fraction"]) {
      spec = doe::relative_levels(id, initial, r.positive(kv.second["fraction"], field + ".fraction"));
    } else if (kv.second["range_fraction"]) {
      const calib::ParameterPrior* bounds = nullptr;
      for (const auto& p : c.parameters) {
        if (p.id == id) bounds = &p;
      }
      if (bounds == nullptr) r.fail(kv.second, field, "range_fraction needs bounds under 'parameters'");
      spec = doe::range_levels(id, initial, bounds->lower, bounds->upper,
                               r.positive(kv.second["range_fraction"], field + ".range_fraction"));
    } else {
      r.fail(kv.second, field, "give low/high, fraction or range_fraction");
    }
    if (!(spec.low < spec.high)) r.fail(kv.second, field, "needs low < high");
    c.doe.factors.push_back(spec);
  }
}

void read_mcmc(const Reader& r, const YAML::Node& n, PipelineConfig& c) {
  r.check_keys(n, "mcmc", {"steps", "seed", "adapt_interval", "adapt_start", "a0", "b0", "sigma2", "residuals",
                           "scale_adaptation", "burn_in", "checkpoint_interval", "histogram_bins"});
  auto& m = c.mcmc;
  if (n["steps"]) m.steps = r.count(n["steps"], "mcmc.steps");
  if (n["seed"]) m.seed = r.count(n["seed"], "mcmc.seed");
  if (n["adapt_interval"]) {
    m.adapt_interval = r.count(n["adapt_interval"], "mcmc.adapt_interval");
    if (m.adapt_interval == 0) r.fail(n["adapt_interval"], "mcmc.adapt_interval", "must be positive");
  }
  if (n["adapt_start"]) m.adapt_start = r.count(n["adapt_start"], "mcmc.adapt_start");
  if (n["a0"]) m.a0 = r.positive(n["a0"], "mcmc.a0");
  if (n["b0"]) m.b0 = r.positive(n["b0"], "mcmc.b0");
  if (n["sigma2"] && !n["sigma2"].IsNull()) m.fixed_sigma2 = r.positive(n["sigma2"], "mcmc.sigma2");
  if (n["residuals"]) m.residuals = r.residuals(n["residuals"], "mcmc.residuals");
  if (n["scale_adaptation"]) m.scale_adaptation = r.boolean(n["scale_adaptation"], "mcmc.scale_adaptation");
  if (n["burn_in"]) {
    const auto& b = n["burn_in"];
    if (!(b.IsScalar() && b.Scalar() == "auto")) m.burn_in = r.count(b, "mcmc.burn_in");
  }
  if (n["checkpoint_interval"]) m.checkpoint_interval = r.count(n["checkpoint_interval"], "mcmc.checkpoint_interval");
  if (n["histogram_bins"]) {
    m.histogram_bins = r.count(n["histogram_bins"], "mcmc.histogram_bins");
    if (m.histogram_bins == 0) r.fail(n["histogram_bins"], "mcmc.histogram_bins", "must be positive");
  }
}

void read_propagate(const Reader& r, const YAML::Node& n, PipelineConfig& c) {
  r.check_keys(n, "propagate", {"coverage", "band_mode", "max_samples", "grid_points", "margin_K"});
  auto& p = c.propagate;
  if (n["coverage"]) {
    p.coverage = r.number(n["coverage"], "propagate.coverage");
    if (!(p.coverage > 0.0 && p.coverage < 1.0)) r.fail(n["coverage"], "propagate.coverage", "must lie in (0, 1)");
  }
  if (n["band_mode"]) {
    const auto v = r.text(n["band_mode"], "propagate.band_mode");
    if (v == "pointwise") {
      p.band_mode = prop::BandMode::pointwise;
    } else if (v == "curvewise") {
      p.band_mode = prop::BandMode::curvewise;
    } else {
      r.fail(n["band_mode"], "propagate.band_mode", "must be pointwise or curvewise");
    }
  }
  if (n["max_samples"]) p.max_samples = r.count(n["max_samples"], "propagate.max_samples");
  if (n["grid_points"]) p.grid_points = r.count(n["grid_points"], "propagate.grid_points");
  if (n["margin_K"]) p.margin = r.positive(n["margin_K"], "propagate.margin_K");
  if (p.grid_points < 2) r.fail(n, "propagate.grid_points", "must be at least 2");
}

void read_infogain(const Reader& r, const YAML::Node& n, PipelineConfig& c) {
  r.check_keys(n, "infogain", {"candidates", "steps", "points_per_branch", "margin_K", "noise_sd", "kl_direction",
                               "truth", "residuals", "a0", "b0", "sigma2", "scale_adaptation"});
  auto& g = c.infogain;
  if (n["steps"]) g.steps = r.count(n["steps"], "infogain.steps");
  if (n["points_per_branch"]) g.points_per_branch = r.count(n["points_per_branch"], "infogain.points_per_branch");
  if (g.points_per_branch < min_branch_points) {
    r.fail(n, "infogain.points_per_branch", "must be at least " + std::to_string(min_branch_points));
  }
  if (n["margin_K"]) g.margin = r.positive(n["margin_K"], "infogain.margin_K");
  if (n["noise_sd"]) {
    g.noise_sd = r.number(n["noise_sd"], "infogain.noise_sd");
    if (g.noise_sd < 0.0) r.fail(n["noise_sd"], "infogain.noise_sd", "must be nonnegative");
  }
  if (n["kl_direction"]) {
    const auto v = r.text(n["kl_direction"], "infogain.kl_direction");
    if (v == "posterior_to_prior") {
      g.direction = info::KlDirection::posterior_to_prior;
    } else if (v == "prior_to_posterior") {
      g.direction = info::KlDirection::prior_to_posterior;
    } else {
      r.fail(n["kl_direction"], "infogain.kl_direction", "must be posterior_to_prior or prior_to_posterior");
    }
  }
  if (n["truth"]) {
    const auto v = r.text(n["truth"], "infogain.truth");
    if (v == "shared") {
      g.truth = info::TruthMode::shared;
    } else if (v == "per_dataset") {
      g.truth = info::TruthMode::per_dataset;
    } else {
      r.fail(n["truth"], "infogain.truth", "must be shared or per_dataset");
    }
  }
  if (n["residuals"]) g.residuals = r.residuals(n["residuals"], "infogain.residuals");
  if (n["a0"]) g.a0 = r.positive(n["a0"], "infogain.a0");
  if (n["b0"]) g.b0 = r.positive(n["b0"], "infogain.b0");
  if (n["sigma2"] && !n["sigma2"].IsNull()) g.fixed_sigma2 = r.positive(n["sigma2"], "infogain.sigma2");
  if (n["scale_adaptation"]) g.scale_adaptation = r.boolean(n["scale_adaptation"], "infogain.scale_adaptation");
  if (!n["candidates"]) return;
  const YAML::Node& list = n["candidates"];
  if (!list.IsSequence()) r.fail(list, "infogain.candidates", "expected a list");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string field = "infogain.candidates[" + std::to_string(i) + "]";
    r.check_keys(list[i], field, {"name", "stresses_MPa", "samples"});
    info::DesignCandidate cand;
    cand.name = list[i]["name"] ? r.text(list[i]["name"], field + ".name") : "candidate" + std::to_string(i);
    if (!list[i]["stresses_MPa"]) r.fail(list[i], field, "needs stresses_MPa");
    cand.stresses = stress_list(r, list[i]["stresses_MPa"], field + ".stresses_MPa");
    if (list[i]["samples"]) cand.samples_per_condition = r.count(list[i]["samples"], field + ".samples");
    g.candidates.push_back(std::move(cand));
  }
}

}  // namespace

PipelineConfig parse_config(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::parse_error, origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  PipelineConfig c;
  c.source_text = text;
  if (root.IsNull()) return c;
  const Reader r(origin);
  r.check_keys(root, "", {"material", "parameters", "stresses_MPa", "grid", "doe", "mcmc", "propagate", "infogain",
                          "output_dir", "jobs"});
  try {
    if (root["material"]) read_material(r, root["material"], c.material);
    if (root["parameters"]) read_parameters(r, root["parameters"], c);
    if (root["stresses_MPa"]) c.stresses = stress_list(r, root["stresses_MPa"], "stresses_MPa");
    if (root["grid"]) {
      r.check_keys(root["grid"], "grid", {"points", "margin_K"});
      if (root["grid"]["points"]) c.grid.points = r.count(root["grid"]["points"], "grid.points");
      if (root["grid"]["margin_K"]) c.grid.margin = r.positive(root["grid"]["margin_K"], "grid.margin_K");
      if (c.grid.points < 50) r.fail(root["grid"], "grid.points", "must be at least 50");
    }
    if (root["doe"]) read_doe(r, root["doe"], c);
    if (root["mcmc"]) read_mcmc(r, root["mcmc"], c);
    if (root["propagate"]) read_propagate(r, root["propagate"], c);
    if (root["infogain"]) read_infogain(r, root["infogain"], c);
    if (root["output_dir"]) c.output_dir = r.text(root["output_dir"], "output_dir");
    if (root["jobs"]) c.jobs = static_cast<unsigned>(r.count(root["jobs"], "jobs"));

    if (auto why = sma::feasibility_violation(c.material)) r.fail(root["material"], "material", *why);
    if (!c.parameters.empty()) {
      std::vector<double> initial;
      for (const auto& p : c.parameters) initial.push_back(p.initial);
      const auto ids = c.prior().ids();
      if (auto why = sma::feasibility_violation(sma::apply_parameters(c.material, ids, initial))) {
        r.fail(root["parameters"], "parameters", "initial values are infeasible: " + *why);
      }
    }
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::parse_error, origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& file) {
  return parse_config(io::read_text(file), file.string());
}

}  // namespace smacal::cli
