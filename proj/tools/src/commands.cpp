#include "smacal_cli/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "smacal/calibrate.hpp"
#include "smacal/doe.hpp"
#include "smacal/error.hpp"
#include "smacal/infogain.hpp"
#include "smacal/io.hpp"
#include "smacal/propagate.hpp"
#include "smacal/sma_model.hpp"
#include "smacal_cli/config.hpp"

namespace smacal::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::string out;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("-c,--config", o.config, "YAML configuration file")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "Override the random seed");
  sub->add_option("-j,--jobs", o.jobs, "Maximum worker threads (0 = all cores)");
  sub->add_option("-o,--out", o.out, "Output directory (overrides SMACAL_OUTPUT_DIR and the config)");
}

struct Context {
  PipelineConfig config;
  fs::path out_dir;
  std::uint64_t seed = 1;
  unsigned jobs = 0;
};

Context prepare(const CommonOptions& o) {
  Context c;
  c.config = load_config(o.config);
  if (!o.out.empty()) {
    c.out_dir = o.out;
  } else if (const char* env = std::getenv("SMACAL_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    c.out_dir = env;
  } else {
    c.out_dir = c.config.output_dir;
  }
  c.seed = o.seed.value_or(c.config.mcmc.seed);
  c.jobs = o.jobs.value_or(c.config.jobs);
  return c;
}

std::string stress_tag(double stress) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%gMPa", stress / 1e6);
  return buf;
}

sma::LoopGrid covering_grid(double stress, const sma::MaterialParameters& p, double margin, std::size_t points) {
  const auto [lo, hi] = sma::covering_range(stress, p, margin);
  return sma::uniform_grid(hi, lo, points);
}

void require_parameters(const PipelineConfig& c) {
  if (c.parameters.empty()) {
    throw Error(ErrorCode::validation_error, "the configuration lists no calibrated 'parameters'");
  }
}

calib::Chain load_chain(const fs::path& file, const PipelineConfig& c) {
  calib::Chain chain = io::read_chain_csv(file);
  if (chain.names != c.prior().names()) {
    throw Error(ErrorCode::validation_error, file.string() + ": chain parameters do not match the configuration");
  }
  return chain;
}

std::size_t resolve_burn_in(const calib::Chain& chain, const fs::path& chain_file, std::optional<std::size_t> flag,
                            const PipelineConfig& c, std::ostream& err) {
  if (flag) return *flag;
  fs::path sidecar = chain_file;
  sidecar.replace_extension(".json");
  if (fs::exists(sidecar)) {
    const auto s = io::read_chain_sidecar(sidecar);
    if (s.burn_in) return *s.burn_in;
  }
  if (c.mcmc.burn_in) return *c.mcmc.burn_in;
  try {
    return calib::detect_burn_in(chain.samples);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::no_plateau && e.code() != ErrorCode::too_few_samples) throw;
    const auto fallback = chain.size() / 5;
    err << "warning: " << e.what() << "; discarding the first " << fallback << " samples\n";
    return fallback;
  }
}

numerics::Matrix kept_samples(const calib::Chain& chain, std::size_t burn_in) {
  if (burn_in >= chain.size()) throw Error(ErrorCode::validation_error, "burn-in exceeds the chain length");
  return chain.samples.bottomRows(static_cast<Eigen::Index>(chain.size() - burn_in));
}

int cmd_simulate(const CommonOptions& o, double stress_mpa, std::optional<double> t_max, std::optional<double> t_min,
                 std::optional<std::size_t> points, std::ostream& out) {
  const Context ctx = prepare(o);
  const double stress = stress_mpa * 1e6;
  const auto [lo, hi] = sma::covering_range(stress, ctx.config.material, ctx.config.grid.margin);
  const auto loop = sma::simulate_isobaric_loop(stress, t_max.value_or(hi), t_min.value_or(lo),
                                                points.value_or(ctx.config.grid.points), ctx.config.material);
  const fs::path file = ctx.out_dir / ("loop_" + stress_tag(stress) + ".csv");
  io::write_loop_csv(file, loop, "simulated");
  out << "wrote " << file.string() << '\n';
  return exit_ok;
}

int cmd_doe(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const Context ctx = prepare(o);
  const auto& cfg = ctx.config.doe;
  if (cfg.factors.empty()) throw Error(ErrorCode::validation_error, "doe.factors is empty");
  const doe::DesignMatrix design = doe::generate_full_factorial(cfg.factors);
  doe::EvaluationOptions eval;
  eval.stress = cfg.stress;
  eval.grid_points = cfg.grid_points;
  eval.jobs = ctx.jobs;
  const auto responses = doe::evaluate_design(design, ctx.config.material, eval);
  for (const auto& d : responses.diagnostics) err << "warning: " << d << '\n';
  io::write_design_csv(ctx.out_dir / "design.csv", design, responses.values);
  const auto table = doe::anova_main_effects(design, responses.values);
  io::write_anova_csv(ctx.out_dir / "anova.csv", table);
  const auto selection = doe::rank_and_select(table, cfg.alpha);

  std::string listing;
  for (const auto& name : selection.selected) listing += name + "\n";
  io::write_text(ctx.out_dir / "selected.txt", listing);
  out << design.row_count() << " rows, error d.f. " << table.error.dof << ", total d.f. " << table.total.dof << '\n';
  out << "ranked:";
  for (const auto& name : selection.ranked) out << ' ' << name;
  out << "\nselected (p < " << cfg.alpha << "):";
  for (const auto& name : selection.selected) out << ' ' << name;
  out << '\n';
  return exit_ok;
}

int cmd_calibrate(const CommonOptions& o, const std::vector<std::string>& data, std::optional<std::size_t> steps,
                  std::ostream& out, std::ostream& err) {
  const Context ctx = prepare(o);
  require_parameters(ctx.config);
  std::vector<ExperimentalDataset> datasets;
  for (const auto& f : data) datasets.push_back(io::read_dataset_csv(f));
  const calib::PriorSpec prior = ctx.config.prior();
  calib::SmaModelOptions model_options;
  model_options.residuals = ctx.config.mcmc.residuals;
  model_options.jobs = ctx.jobs == 0 ? 0 : std::min<unsigned>(ctx.jobs, static_cast<unsigned>(datasets.size()));
  const calib::SmaCalibrationModel model(prior, ctx.config.material, datasets, model_options);

  calib::ChainConfig chain_config;
  chain_config.n_steps = steps.value_or(ctx.config.mcmc.steps);
  chain_config.seed = ctx.seed;
  chain_config.adapt_interval = ctx.config.mcmc.adapt_interval;
  chain_config.adapt_start = ctx.config.mcmc.adapt_start;
  chain_config.fixed_sigma2 = ctx.config.mcmc.fixed_sigma2;
  chain_config.scale_adaptation = ctx.config.mcmc.scale_adaptation;
  chain_config.checkpoint_path = ctx.out_dir / "chain.csv";
  chain_config.checkpoint_interval = ctx.config.mcmc.checkpoint_interval;
  const calib::Chain chain = calib::run_chain(model, prior, chain_config);
  if (chain.failed_evaluations > 0) {
    err << "warning: " << chain.failed_evaluations << " candidate solves failed (last: " << chain.last_failure
        << ")\n";
  }
  io::write_chain_csv(ctx.out_dir / "chain.csv", chain);

  std::size_t burn_in = 0;
  if (ctx.config.mcmc.burn_in) {
    burn_in = *ctx.config.mcmc.burn_in;
  } else {
    try {
      burn_in = calib::detect_burn_in(chain.samples);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_plateau && e.code() != ErrorCode::too_few_samples) throw;
      burn_in = chain.size() / 5;
      err << "warning: " << e.what() << "; discarding the first " << burn_in << " samples\n";
    }
  }
  io::ChainSidecar sidecar;
  sidecar.seed = chain.seed;
  sidecar.n_steps = chain_config.n_steps;
  sidecar.burn_in = burn_in;
  sidecar.names = chain.names;
  sidecar.acceptance_rate = chain.acceptance_rate();
  sidecar.failed_evaluations = chain.failed_evaluations;
  sidecar.config = ctx.config.source_text;
  io::write_chain_sidecar(ctx.out_dir / "chain.json", sidecar);

  calib::SummaryOptions summary_options;
  summary_options.bins = ctx.config.mcmc.histogram_bins;
  for (std::size_t i = 0; i < chain.dimension(); ++i) {
    for (std::size_t j = i + 1; j < chain.dimension(); ++j) summary_options.joint_pairs.emplace_back(i, j);
  }
  const auto summary = calib::summarize(chain, burn_in, summary_options);
  io::write_text(ctx.out_dir / "summary.json", io::summary_json(summary));
  io::write_text(ctx.out_dir / "histograms.csv", io::histograms_csv(summary));
  io::write_text(ctx.out_dir / "joint_histograms.csv", io::joint_histograms_csv(summary));

  out << chain.size() << " samples, acceptance " << io::format_double(chain.acceptance_rate()) << ", burn-in "
      << burn_in << '\n';
  const auto sd = summary.standard_deviations();
  for (std::size_t i = 0; i < summary.names.size(); ++i) {
    out << summary.names[i] << " = " << io::format_double(summary.gaussian.mean[static_cast<Eigen::Index>(i)])
        << " +/- " << io::format_double(sd[static_cast<Eigen::Index>(i)]) << '\n';
  }
  return exit_ok;
}

int cmd_propagate(const CommonOptions& o, const std::string& chain_file, const std::string& method,
                  std::optional<std::size_t> burn_flag, std::ostream& out, std::ostream& err) {
  const Context ctx = prepare(o);
  require_parameters(ctx.config);
  const calib::Chain chain = load_chain(chain_file, ctx.config);
  const std::size_t burn_in = resolve_burn_in(chain, chain_file, burn_flag, ctx.config, err);
  const numerics::Matrix samples = kept_samples(chain, burn_in);
  const auto posterior = numerics::sample_moments(samples);
  const calib::PriorSpec prior = ctx.config.prior();

  prop::ParameterSpace space{prior.ids(), ctx.config.material, prior.lower(), prior.upper()};
  const auto& pc = ctx.config.propagate;
  const auto center = sma::apply_parameters(space.base, space.ids,
                                            std::span<const double>(posterior.mean.data(), posterior.dimension()));
  for (double stress : ctx.config.stresses) {
    const auto grid = covering_grid(stress, center, pc.margin, pc.grid_points);
    prop::ConfidenceBand band;
    if (method == "fosm") {
      prop::FosmOptions fo;
      fo.jobs = ctx.jobs;
      band = prop::fosm_band(posterior, space, stress, grid, fo);
    } else {
      prop::DirectOptions d;
      d.coverage = pc.coverage;
      d.mode = pc.band_mode;
      d.max_samples = pc.max_samples;
      d.jobs = ctx.jobs;
      band = prop::direct_band(samples, space, stress, grid, d);
    }
    const fs::path file = ctx.out_dir / ("band_" + method + "_" + stress_tag(stress) + ".csv");
    io::write_band_csv(file, band);
    out << "wrote " << file.string() << '\n';
  }
  return exit_ok;
}

int cmd_infogain(const CommonOptions& o, const std::string& chain_file, std::optional<std::size_t> burn_flag,
                 std::ostream& out, std::ostream& err) {
  const Context ctx = prepare(o);
  require_parameters(ctx.config);
  const auto& ig = ctx.config.infogain;
  if (ig.candidates.empty()) throw Error(ErrorCode::validation_error, "infogain.candidates is empty");
  const calib::Chain chain = load_chain(chain_file, ctx.config);
  const std::size_t burn_in = resolve_burn_in(chain, chain_file, burn_flag, ctx.config, err);
  const auto prior = numerics::sample_moments(kept_samples(chain, burn_in));
  try {
    numerics::cholesky(prior.covariance);
  } catch (const Error&) {
    throw Error(ErrorCode::validation_error,
                chain_file + ": posterior covariance is singular; the chain needs more distinct samples");
  }

  info::InfoGainConfig config;
  config.seed = ctx.seed;
  config.jobs = ctx.jobs;
  config.direction = ig.direction;
  config.synthetic.points_per_branch = ig.points_per_branch;
  config.synthetic.margin = ig.margin;
  config.synthetic.noise_sd = ig.noise_sd;
  config.sequential.chain.n_steps = ig.steps;
  config.sequential.chain.adapt_interval = ctx.config.mcmc.adapt_interval;
  config.sequential.chain.adapt_start = std::min(ctx.config.mcmc.adapt_start, ig.steps / 5);
  config.sequential.chain.fixed_sigma2 = ig.fixed_sigma2;
  config.sequential.model.residuals = ig.residuals.value_or(ctx.config.mcmc.residuals);
  config.sequential.chain.scale_adaptation = ig.scale_adaptation;
  config.truth = ig.truth;
  const calib::PriorSpec bounds(ctx.config.parameters, ig.a0.value_or(ctx.config.mcmc.a0),
                                ig.b0.value_or(ctx.config.mcmc.b0));
  const auto report = info::compare_designs(prior, bounds, ctx.config.material, ig.candidates, config);
  const fs::path file = ctx.out_dir / "infogain.json";
  io::write_text(file, io::infogain_json(report));
  for (std::size_t rank = 0; rank < report.ranking.size(); ++rank) {
    const auto& c = report.candidates[report.ranking[rank]];
    out << rank + 1 << ". " << c.candidate.name << "  KL = " << io::format_double(c.kl) << '\n';
  }
  out << "wrote " << file.string() << '\n';
  return exit_ok;
}

bool is_validation(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse_error:
    case ErrorCode::validation_error:
    case ErrorCode::too_many_factors:
    case ErrorCode::invalid_hyperparameter:
      return true;
    default:
      return false;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shape memory alloy simulation, screening, calibration and uncertainty pipeline", "smacal"};
  app.require_subcommand(1);

  CommonOptions sim_o, doe_o, cal_o, prop_o, info_o;

  auto* sim = app.add_subcommand("simulate", "Simulate one isobaric hysteresis loop");
  add_common(sim, sim_o);
  double stress = 0.0;
  std::optional<double> t_max, t_min;
  std::optional<std::size_t> points;
  sim->add_option("-s,--stress", stress, "Applied stress in MPa")->required()->check(CLI::PositiveNumber);
  sim->add_option("--t-max", t_max, "Upper temperature in K (default: covering range)");
  sim->add_option("--t-min", t_min, "Lower temperature in K (default: covering range)");
  sim->add_option("--grid", points, "Points per branch");

  auto* doe_cmd = app.add_subcommand("doe", "Full factorial screening with main-effects ANOVA");
  add_common(doe_cmd, doe_o);

  auto* cal = app.add_subcommand("calibrate", "Adaptive MCMC calibration against loop datasets");
  add_common(cal, cal_o);
  std::vector<std::string> data;
  std::optional<std::size_t> steps;
  cal->add_option("-d,--data", data, "Dataset CSV files")->required()->check(CLI::ExistingFile);
  cal->add_option("--steps", steps, "Override mcmc.steps");

  auto* prp = app.add_subcommand("propagate", "Confidence bands from a posterior chain");
  add_common(prp, prop_o);
  std::string prop_chain, method = "direct";
  std::optional<std::size_t> prop_burn;
  prp->add_option("--chain", prop_chain, "Chain CSV")->required()->check(CLI::ExistingFile);
  prp->add_option("-m,--method", method, "fosm or direct")->check(CLI::IsMember({"fosm", "direct"}));
  prp->add_option("--burn-in", prop_burn, "Samples to discard (default: sidecar, config, then detection)");

  auto* ig = app.add_subcommand("infogain", "Rank candidate experiment sets by KL information gain");
  add_common(ig, info_o);
  std::string ig_chain;
  std::optional<std::size_t> ig_burn;
  ig->add_option("--chain", ig_chain, "Chain CSV whose posterior is the prior")->required()->check(CLI::ExistingFile);
  ig->add_option("--burn-in", ig_burn, "Samples to discard (default: sidecar, config, then detection)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return exit_ok;
    }
    err << e.what() << "\n\n" << app.help();
    return exit_validation;
  }

  try {
    if (*sim) return cmd_simulate(sim_o, stress, t_max, t_min, points, out);
    if (*doe_cmd) return cmd_doe(doe_o, out, err);
    if (*cal) return cmd_calibrate(cal_o, data, steps, out, err);
    if (*prp) return cmd_propagate(prop_o, prop_chain, method, prop_burn, out, err);
    if (*ig) return cmd_infogain(info_o, ig_chain, ig_burn, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_validation(e.code()) ? exit_validation : exit_runtime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_runtime;
  }
  return exit_validation;
}

}  // namespace smacal::cli
