#pragma once

// CSV and JSON readers/writers. Every float is written with 17 significant
// digits so that reading a file back reproduces the in-memory values exactly.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "smacal/calibrate.hpp"
#include "smacal/dataset.hpp"
#include "smacal/doe.hpp"
#include "smacal/infogain.hpp"
#include "smacal/propagate.hpp"
#include "smacal/sma_model.hpp"

namespace smacal::io {

using std::filesystem::path;

std::string format_double(double v);

/// Creates parent directories as needed. Throws IoError.
void write_text(const path& file, const std::string& content);
std::string read_text(const path& file);

/// `# stress_MPa=...` metadata then `branch,T_K,eps_t,xi`.
std::string loop_csv(const sma::HysteresisLoop& loop, const std::string& label = {});
void write_loop_csv(const path& file, const sma::HysteresisLoop& loop, const std::string& label = {});

/// Accepts any file with `# key=value` metadata (stress_MPa or stress_Pa
/// required) and a header containing branch, T_K and eps_t. Branches are
/// sorted, repeated temperatures averaged. Throws ParseError (with row
/// number) and ValidationError.
ExperimentalDataset parse_dataset_csv(const std::string& text, const std::string& origin = "<memory>");
ExperimentalDataset read_dataset_csv(const path& file);
std::string dataset_csv(const ExperimentalDataset& d);
void write_dataset_csv(const path& file, const ExperimentalDataset& d);

struct DesignTable {
  doe::DesignMatrix design;
  std::vector<double> responses;
};

std::string design_csv(const doe::DesignMatrix& d, const std::vector<double>& responses);
void write_design_csv(const path& file, const doe::DesignMatrix& d, const std::vector<double>& responses);
DesignTable parse_design_csv(const std::string& text);

/// Columns: Source, Sum sq., d.f., Mean sq., F, Prob>F, log10(Prob>F).
/// Factors are listed in ascending p order, then Error and Total.
std::string anova_csv(const doe::AnovaTable& t);
void write_anova_csv(const path& file, const doe::AnovaTable& t);
doe::AnovaTable parse_anova_csv(const std::string& text);

/// step, parameter columns, sigma2, accepted.
std::string chain_csv(const calib::Chain& chain);
void write_chain_csv(const path& file, const calib::Chain& chain);
calib::Chain parse_chain_csv(const std::string& text);
calib::Chain read_chain_csv(const path& file);

struct ChainSidecar {
  std::uint64_t seed = 0;
  std::size_t n_steps = 0;
  std::optional<std::size_t> burn_in;
  std::vector<std::string> names;
  double acceptance_rate = 0.0;
  std::size_t failed_evaluations = 0;
  std::string config;  // verbatim configuration text
};

void write_chain_sidecar(const path& file, const ChainSidecar& s);
ChainSidecar read_chain_sidecar(const path& file);

std::string summary_json(const calib::PosteriorSummary& s);
calib::PosteriorSummary parse_summary_json(const std::string& text);

/// parameter, bin, lower, upper, count.
std::string histograms_csv(const calib::PosteriorSummary& s);
/// first, second, x_bin, y_bin, x_lower, x_upper, y_lower, y_upper, count.
std::string joint_histograms_csv(const calib::PosteriorSummary& s);

/// `# stress_MPa`, method and coverage metadata then
/// branch, T_K, mean, lower, upper.
std::string band_csv(const prop::ConfidenceBand& b);
void write_band_csv(const path& file, const prop::ConfidenceBand& b);
prop::ConfidenceBand parse_band_csv(const std::string& text);

std::string infogain_json(const info::InfoGainReport& r);

}  // namespace smacal::io
