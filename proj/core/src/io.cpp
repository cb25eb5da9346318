#include "smacal/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "smacal/error.hpp"

namespace smacal::io {

namespace {

using nlohmann::json;

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

template <class Int>
std::optional<Int> to_integer(std::string_view s) {
  s = trim(s);
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

[[noreturn]] void parse_fail(const std::string& origin, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::parse_error, origin + ": line " + std::to_string(line) + ": " + what);
}

/// Lines of a CSV with `# key=value` metadata split off.
struct CsvText {
  std::map<std::string, std::string> meta;
  std::vector<std::string> header;
  std::size_t header_line = 0;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line number, fields)
};

CsvText parse_csv(const std::string& text, const std::string& origin) {
  CsvText out;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string_view body = trim(line.substr(1));
      const std::size_t eq = body.find('=');
      if (eq != std::string_view::npos) {
        out.meta[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
      }
      continue;
    }
    if (out.header.empty()) {
      out.header = split(line);
      out.header_line = line_no;
      continue;
    }
    auto fields = split(line);
    if (fields.size() != out.header.size()) {
      parse_fail(origin, line_no, "expected " + std::to_string(out.header.size()) + " fields, found " +
                                      std::to_string(fields.size()));
    }
    out.rows.emplace_back(line_no, std::move(fields));
  }
  if (out.header.empty()) parse_fail(origin, line_no, "no header row");
  return out;
}

std::size_t column(const CsvText& csv, const std::string& name, const std::string& origin) {
  const auto it = std::find(csv.header.begin(), csv.header.end(), name);
  if (it == csv.header.end()) parse_fail(origin, csv.header_line, "missing column '" + name + "'");
  return static_cast<std::size_t>(it - csv.header.begin());
}

double field_double(const std::vector<std::string>& fields, std::size_t col, std::size_t line,
                    const std::string& origin, bool allow_empty = false) {
  if (allow_empty && trim(fields[col]).empty()) return nan_value;
  const auto v = to_double(fields[col]);
  if (!v) parse_fail(origin, line, "'" + fields[col] + "' is not a number");
  return *v;
}

double stress_from_meta(const std::map<std::string, std::string>& meta, const std::string& origin) {
  if (const auto it = meta.find("stress_Pa"); it != meta.end()) {
    if (const auto v = to_double(it->second)) return *v;
    parse_fail(origin, 0, "stress_Pa is not a number");
  }
  if (const auto it = meta.find("stress_MPa"); it != meta.end()) {
    if (const auto v = to_double(it->second)) return *v * 1e6;
    parse_fail(origin, 0, "stress_MPa is not a number");
  }
  parse_fail(origin, 0, "missing metadata key stress_MPa");
}

void write_stress_meta(std::ostringstream& out, double stress) {
  out << "# stress_MPa=" << format_double(stress / 1e6) << '\n';
  out << "# stress_Pa=" << format_double(stress) << '\n';
}

json nan_to_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double null_to_nan(const json& j) { return j.is_null() ? nan_value : j.get<double>(); }

json vector_json(const numerics::Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(nan_to_null(v[i]));
  return a;
}

json matrix_json(const numerics::Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
  return a;
}

numerics::Vector json_vector(const json& a) {
  numerics::Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = null_to_nan(a[i]);
  return v;
}

numerics::Matrix json_matrix(const json& a) {
  const auto n = static_cast<Eigen::Index>(a.size());
  const Eigen::Index m = n > 0 ? static_cast<Eigen::Index>(a[0].size()) : 0;
  numerics::Matrix out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = json_vector(a[static_cast<std::size_t>(i)]).transpose();
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const path& file, const std::string& content) {
  std::error_code ec;
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path(), ec);
  const path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw Error(ErrorCode::io_error, "write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, file, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot move " + tmp.string() + " to " + file.string() + ": " + ec.message());
}

std::string read_text(const path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + file.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string loop_csv(const sma::HysteresisLoop& loop, const std::string& label) {
  std::ostringstream out;
  write_stress_meta(out, loop.stress);
  if (!label.empty()) out << "# label=" << label << '\n';
  out << "branch,T_K,eps_t,xi\n";
  for (const auto& p : loop.cooling) {
    out << "cooling," << format_double(p.T) << ',' << format_double(p.eps_t) << ',' << format_double(p.xi) << '\n';
  }
  for (const auto& p : loop.heating) {
    out << "heating," << format_double(p.T) << ',' << format_double(p.eps_t) << ',' << format_double(p.xi) << '\n';
  }
  return out.str();
}

void write_loop_csv(const path& file, const sma::HysteresisLoop& loop, const std::string& label) {
  write_text(file, loop_csv(loop, label));
}

ExperimentalDataset parse_dataset_csv(const std::string& text, const std::string& origin) {
  const CsvText csv = parse_csv(text, origin);
  const std::size_t c_branch = column(csv, "branch", origin);
  const std::size_t c_t = column(csv, "T_K", origin);
  const std::size_t c_eps = column(csv, "eps_t", origin);

  ExperimentalDataset d;
  d.stress = stress_from_meta(csv.meta, origin);
  if (const auto it = csv.meta.find("label"); it != csv.meta.end()) d.label = it->second;

  // Averaging repeated temperatures: T -> (sum, count).
  std::map<double, std::pair<double, std::size_t>> cooling, heating;
  for (const auto& [line, fields] : csv.rows) {
    const std::string& branch = fields[c_branch];
    const double t = field_double(fields, c_t, line, origin);
    const double eps = field_double(fields, c_eps, line, origin);
    if (!std::isfinite(t) || !std::isfinite(eps)) parse_fail(origin, line, "non-finite value");
    auto* target = branch == "cooling" ? &cooling : branch == "heating" ? &heating : nullptr;
    if (target == nullptr) parse_fail(origin, line, "branch must be 'cooling' or 'heating', got '" + branch + "'");
    auto& slot = (*target)[t];
    slot.first += eps;
    slot.second += 1;
  }
  for (auto it = cooling.rbegin(); it != cooling.rend(); ++it) {
    d.cooling.T.push_back(it->first);
    d.cooling.eps_t.push_back(it->second.first / static_cast<double>(it->second.second));
  }
  for (const auto& [t, acc] : heating) {
    d.heating.T.push_back(t);
    d.heating.eps_t.push_back(acc.first / static_cast<double>(acc.second));
  }
  try {
    validate(d);
  } catch (const Error& e) {
    throw Error(ErrorCode::validation_error, origin + ": " + e.what());
  }
  return d;
}

ExperimentalDataset read_dataset_csv(const path& file) { return parse_dataset_csv(read_text(file), file.string()); }

std::string dataset_csv(const ExperimentalDataset& d) {
  std::ostringstream out;
  write_stress_meta(out, d.stress);
  if (!d.label.empty()) out << "# label=" << d.label << '\n';
  out << "branch,T_K,eps_t\n";
  for (std::size_t i = 0; i < d.cooling.size(); ++i) {
    out << "cooling," << format_double(d.cooling.T[i]) << ',' << format_double(d.cooling.eps_t[i]) << '\n';
  }
  for (std::size_t i = 0; i < d.heating.size(); ++i) {
    out << "heating," << format_double(d.heating.T[i]) << ',' << format_double(d.heating.eps_t[i]) << '\n';
  }
  return out.str();
}

void write_dataset_csv(const path& file, const ExperimentalDataset& d) { write_text(file, dataset_csv(d)); }

std::string design_csv(const doe::DesignMatrix& d, const std::vector<double>& responses) {
  std::ostringstream out;
  for (const auto& f : d.factors) out << sma::parameter_name(f.id) << ',';
  out << "response\n";
  for (std::size_t i = 0; i < d.row_count(); ++i) {
    for (std::size_t j = 0; j < d.factor_count(); ++j) out << format_double(d.value(i, j)) << ',';
    out << (i < responses.size() ? format_double(responses[i]) : std::string("nan")) << '\n';
  }
  return out.str();
}

void write_design_csv(const path& file, const doe::DesignMatrix& d, const std::vector<double>& responses) {
  write_text(file, design_csv(d, responses));
}

DesignTable parse_design_csv(const std::string& text) {
  const std::string origin = "design";
  const CsvText csv = parse_csv(text, origin);
  const std::size_t c_resp = column(csv, "response", origin);
  DesignTable t;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < csv.header.size(); ++c) {
    if (c == c_resp) continue;
    const auto id = sma::parse_parameter(csv.header[c]);
    if (!id) parse_fail(origin, csv.header_line, "unknown parameter '" + csv.header[c] + "'");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& [line, fields] : csv.rows) {
      const double v = field_double(fields, c, line, origin);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    t.design.factors.push_back({*id, lo, hi});
    cols.push_back(c);
  }
  const std::size_t n = cols.size();
  if (n == 0 || n > doe::max_factors) parse_fail(origin, csv.header_line, "unsupported factor count");
  for (const auto& [line, fields] : csv.rows) {
    std::uint32_t bits = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = field_double(fields, cols[j], line, origin);
      const auto& f = t.design.factors[j];
      if (v != f.low && v != f.high) parse_fail(origin, line, "value is neither level of its factor");
      if (v == f.high) bits |= std::uint32_t{1} << (n - 1 - j);
    }
    t.design.rows.push_back(bits);
    t.responses.push_back(field_double(fields, c_resp, line, origin));
  }
  return t;
}

std::string anova_csv(const doe::AnovaTable& t) {
  std::vector<const doe::AnovaRow*> rows;
  for (const auto& r : t.factors) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(),
                   [](const doe::AnovaRow* a, const doe::AnovaRow* b) { return a->log10_p < b->log10_p; });
  rows.push_back(&t.error);
  rows.push_back(&t.total);
  auto cell = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  std::ostringstream out;
  out << "Source,Sum sq.,d.f.,Mean sq.,F,Prob>F,log10(Prob>F)\n";
  for (const auto* r : rows) {
    out << r->source << ',' << cell(r->sum_sq) << ',' << cell(r->dof) << ',' << cell(r->mean_sq) << ','
        << cell(r->f) << ',' << cell(r->p) << ',' << cell(r->log10_p) << '\n';
  }
  return out.str();
}

void write_anova_csv(const path& file, const doe::AnovaTable& t) { write_text(file, anova_csv(t)); }

doe::AnovaTable parse_anova_csv(const std::string& text) {
  const std::string origin = "anova";
  const CsvText csv = parse_csv(text, origin);
  const std::vector<std::string> names{"Source", "Sum sq.", "d.f.", "Mean sq.", "F", "Prob>F", "log10(Prob>F)"};
  std::vector<std::size_t> c;
  for (const auto& n : names) c.push_back(column(csv, n, origin));
  doe::AnovaTable t;
  for (const auto& [line, f] : csv.rows) {
    doe::AnovaRow r;
    r.source = f[c[0]];
    r.sum_sq = field_double(f, c[1], line, origin, true);
    r.dof = field_double(f, c[2], line, origin, true);
    r.mean_sq = field_double(f, c[3], line, origin, true);
    r.f = field_double(f, c[4], line, origin, true);
    r.p = field_double(f, c[5], line, origin, true);
    r.log10_p = field_double(f, c[6], line, origin, true);
    if (r.source == "Error") {
      t.error = r;
    } else if (r.source == "Total") {
      t.total = r;
    } else {
      t.factors.push_back(r);
    }
  }
  return t;
}

std::string chain_csv(const calib::Chain& chain) {
  std::ostringstream out;
  out << "step";
  for (const auto& n : chain.names) out << ',' << n;
  out << ",sigma2,accepted\n";
  for (std::size_t i = 0; i < chain.size(); ++i) {
    out << i;
    for (std::size_t j = 0; j < chain.dimension(); ++j) {
      out << ',' << format_double(chain.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out << ',' << format_double(chain.sigma2[i]) << ',' << static_cast<int>(chain.accepted[i]) << '\n';
  }
  return out.str();
}

void write_chain_csv(const path& file, const calib::Chain& chain) { write_text(file, chain_csv(chain)); }

calib::Chain parse_chain_csv(const std::string& text) {
  const std::string origin = "chain";
  const CsvText csv = parse_csv(text, origin);
  if (csv.header.size() < 4 || csv.header.front() != "step" || csv.header[csv.header.size() - 2] != "sigma2" ||
      csv.header.back() != "accepted") {
    parse_fail(origin, csv.header_line, "expected header step,<parameters>,sigma2,accepted");
  }
  calib::Chain chain;
  chain.names.assign(csv.header.begin() + 1, csv.header.end() - 2);
  const std::size_t d = chain.names.size();
  chain.samples.resize(static_cast<Eigen::Index>(csv.rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& [line, f] = csv.rows[i];
    const auto step = to_integer<std::size_t>(f[0]);
    if (!step || *step != i) parse_fail(origin, line, "steps must count up from 0");
    for (std::size_t j = 0; j < d; ++j) {
      chain.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = field_double(f, j + 1, line, origin);
    }
    chain.sigma2.push_back(field_double(f, d + 1, line, origin));
    const auto acc = to_integer<int>(f[d + 2]);
    if (!acc || (*acc != 0 && *acc != 1)) parse_fail(origin, line, "accepted must be 0 or 1");
    chain.accepted.push_back(static_cast<std::uint8_t>(*acc));
  }
  return chain;
}

calib::Chain read_chain_csv(const path& file) {
  try {
    return parse_chain_csv(read_text(file));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::parse_error) throw;
    throw Error(ErrorCode::parse_error, file.string() + ": " + e.what());
  }
}

void write_chain_sidecar(const path& file, const ChainSidecar& s) {
  json j;
  j["seed"] = s.seed;
  j["n_steps"] = s.n_steps;
  j["burn_in"] = s.burn_in ? json(*s.burn_in) : json(nullptr);
  j["parameters"] = s.names;
  j["acceptance_rate"] = s.acceptance_rate;
  j["failed_evaluations"] = s.failed_evaluations;
  j["config"] = s.config;
  write_text(file, j.dump(2) + "\n");
}

ChainSidecar read_chain_sidecar(const path& file) {
  try {
    const json j = json::parse(read_text(file));
    ChainSidecar s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.n_steps = j.at("n_steps").get<std::size_t>();
    if (!j.at("burn_in").is_null()) s.burn_in = j.at("burn_in").get<std::size_t>();
    s.names = j.at("parameters").get<std::vector<std::string>>();
    s.acceptance_rate = j.at("acceptance_rate").get<double>();
    s.failed_evaluations = j.at("failed_evaluations").get<std::size_t>();
    s.config = j.at("config").get<std::string>();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, file.string() + ": " + e.what());
  }
}

std::string summary_json(const calib::PosteriorSummary& s) {
  json j;
  j["parameters"] = s.names;
  j["burn_in"] = s.burn_in;
  j["samples"] = s.samples;
  j["mean"] = vector_json(s.gaussian.mean);
  j["sd"] = vector_json(s.standard_deviations());
  j["covariance"] = matrix_json(s.gaussian.covariance);
  j["pearson"] = matrix_json(s.pearson);
  j["degenerate_pairs"] = json::array();
  for (const auto& [a, b] : s.degenerate_pairs) j["degenerate_pairs"].push_back({a, b});
  j["marginals"] = json::array();
  for (const auto& h : s.marginals) j["marginals"].push_back({{"edges", h.edges}, {"counts", h.counts}});
  j["joints"] = json::array();
  for (const auto& h : s.joints) {
    j["joints"].push_back({{"first", h.first},
                           {"second", h.second},
                           {"x_edges", h.x_edges},
                           {"y_edges", h.y_edges},
                           {"counts", h.counts}});
  }
  return j.dump(2) + "\n";
}

calib::PosteriorSummary parse_summary_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    calib::PosteriorSummary s;
    s.names = j.at("parameters").get<std::vector<std::string>>();
    s.burn_in = j.at("burn_in").get<std::size_t>();
    s.samples = j.at("samples").get<std::size_t>();
    s.gaussian.mean = json_vector(j.at("mean"));
    s.gaussian.covariance = json_matrix(j.at("covariance"));
    s.pearson = json_matrix(j.at("pearson"));
    for (const auto& p : j.at("degenerate_pairs")) {
      s.degenerate_pairs.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
    }
    for (const auto& h : j.at("marginals")) {
      s.marginals.push_back({h.at("edges").get<std::vector<double>>(), h.at("counts").get<std::vector<std::size_t>>()});
    }
    for (const auto& h : j.at("joints")) {
      calib::JointHistogram jh;
      jh.first = h.at("first").get<std::size_t>();
      jh.second = h.at("second").get<std::size_t>();
      jh.x_edges = h.at("x_edges").get<std::vector<double>>();
      jh.y_edges = h.at("y_edges").get<std::vector<double>>();
      jh.counts = h.at("counts").get<std::vector<std::size_t>>();
      s.joints.push_back(std::move(jh));
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("summary: ") + e.what());
  }
}

std::string histograms_csv(const calib::PosteriorSummary& s) {
  std::ostringstream out;
  out << "parameter,bin,lower,upper,count\n";
  for (std::size_t p = 0; p < s.marginals.size(); ++p) {
    const auto& h = s.marginals[p];
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      out << s.names[p] << ',' << b << ',' << format_double(h.edges[b]) << ',' << format_double(h.edges[b + 1]) << ','
          << h.counts[b] << '\n';
    }
  }
  return out.str();
}

std::string joint_histograms_csv(const calib::PosteriorSummary& s) {
  std::ostringstream out;
  out << "first,second,x_bin,y_bin,x_lower,x_upper,y_lower,y_upper,count\n";
  for (const auto& h : s.joints) {
    const std::size_t ny = h.y_edges.size() - 1;
    for (std::size_t bx = 0; bx + 1 < h.x_edges.size(); ++bx) {
      for (std::size_t by = 0; by < ny; ++by) {
        out << s.names[h.first] << ',' << s.names[h.second] << ',' << bx << ',' << by << ','
            << format_double(h.x_edges[bx]) << ',' << format_double(h.x_edges[bx + 1]) << ','
            << format_double(h.y_edges[by]) << ',' << format_double(h.y_edges[by + 1]) << ','
            << h.counts[bx * ny + by] << '\n';
      }
    }
  }
  return out.str();
}

std::string band_csv(const prop::ConfidenceBand& b) {
  std::ostringstream out;
  write_stress_meta(out, b.stress);
  out << "# method=" << prop::to_string(b.method) << '\n';
  out << "# coverage=" << format_double(b.coverage) << '\n';
  out << "branch,T_K,mean,lower,upper\n";
  auto rows = [&](const char* name, const std::vector<prop::BandPoint>& pts) {
    for (const auto& p : pts) {
      out << name << ',' << format_double(p.T) << ',' << format_double(p.mean) << ',' << format_double(p.lower) << ','
          << format_double(p.upper) << '\n';
    }
  };
  rows("cooling", b.cooling);
  rows("heating", b.heating);
  return out.str();
}

void write_band_csv(const path& file, const prop::ConfidenceBand& b) { write_text(file, band_csv(b)); }

prop::ConfidenceBand parse_band_csv(const std::string& text) {
  const std::string origin = "band";
  const CsvText csv = parse_csv(text, origin);
  prop::ConfidenceBand b;
  b.stress = stress_from_meta(csv.meta, origin);
  const auto method = csv.meta.find("method");
  if (method == csv.meta.end() || (method->second != "fosm" && method->second != "direct")) {
    parse_fail(origin, 0, "metadata 'method' must be fosm or direct");
  }
  b.method = method->second == "fosm" ? prop::BandMethod::fosm : prop::BandMethod::direct;
  const auto coverage = csv.meta.find("coverage");
  if (coverage == csv.meta.end() || !to_double(coverage->second)) parse_fail(origin, 0, "missing coverage");
  b.coverage = *to_double(coverage->second);
  const std::size_t cb = column(csv, "branch", origin), ct = column(csv, "T_K", origin),
                    cm = column(csv, "mean", origin), cl = column(csv, "lower", origin),
                    cu = column(csv, "upper", origin);
  for (const auto& [line, f] : csv.rows) {
    prop::BandPoint p{field_double(f, ct, line, origin), field_double(f, cm, line, origin),
                      field_double(f, cl, line, origin), field_double(f, cu, line, origin)};
    if (f[cb] == "cooling") {
      b.cooling.push_back(p);
    } else if (f[cb] == "heating") {
      b.heating.push_back(p);
    } else {
      parse_fail(origin, line, "unknown branch '" + f[cb] + "'");
    }
  }
  return b;
}

std::string infogain_json(const info::InfoGainReport& r) {
  json j;
  j["seed"] = r.seed;
  j["kl_direction"] = r.direction == info::KlDirection::posterior_to_prior ? "posterior_to_prior" : "prior_to_posterior";
  if (r.truth) j["truth"] = vector_json(*r.truth);
  j["candidates"] = json::array();
  for (const auto& c : r.candidates) {
    std::vector<double> stresses_mpa;
    for (double s : c.candidate.stresses) stresses_mpa.push_back(s / 1e6);
    j["candidates"].push_back({{"name", c.candidate.name},
                               {"stresses_MPa", stresses_mpa},
                               {"samples_per_condition", c.candidate.samples_per_condition},
                               {"kl", c.kl},
                               {"stage_kls", c.stage_kls},
                               {"chain_lengths", c.chain_lengths},
                               {"burn_ins", c.burn_ins},
                               {"seeds", c.seeds},
                               {"final_mean", vector_json(c.final_posterior.mean)},
                               {"final_covariance", matrix_json(c.final_posterior.covariance)}});
  }
  j["ranking"] = json::array();
  for (std::size_t i : r.ranking) j["ranking"].push_back(r.candidates[i].candidate.name);
  return j.dump(2) + "\n";
}

}  // namespace smacal::io
