#include "smacal/sma_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "smacal/error.hpp"

namespace smacal::sma {

namespace {

// 0^n = 0 for n in (0, 1], matching the xi -> endpoint limits.
inline double endpoint_pow(double base, double exponent) noexcept {
  return base <= 0.0 ? 0.0 : std::pow(base, exponent);
}

inline double f_forward(double xi, const DerivedCoefficients& c, const MaterialParameters& p) noexcept {
  return 0.5 * c.a1 * (1.0 + endpoint_pow(xi, p.n1) - endpoint_pow(1.0 - xi, p.n2)) + c.a3;
}

inline double f_reverse(double xi, const DerivedCoefficients& c, const MaterialParameters& p) noexcept {
  return 0.5 * c.a2 * (1.0 + endpoint_pow(xi, p.n3) - endpoint_pow(1.0 - xi, p.n4)) - c.a3;
}

const numerics::BisectionOptions kRootOptions{1.0, 1e-12, 80};

// Linear interpolation on ascending abscissae with end clamping.
double interpolate(std::span<const double> xs, std::span<const double> ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const auto hi = static_cast<std::size_t>(it - xs.begin());
  const std::size_t lo = hi - 1;
  const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

std::vector<LoopPoint> resample_branch(const std::vector<LoopPoint>& branch, std::span<const double> targets) {
  if (branch.empty()) throw Error(ErrorCode::grid_mismatch, "cannot resample an empty branch");
  std::vector<double> ts;
  std::vector<double> xis;
  std::vector<double> eps;
  ts.reserve(branch.size());
  xis.reserve(branch.size());
  eps.reserve(branch.size());
  for (const auto& pt : branch) {
    ts.push_back(pt.T);
    xis.push_back(pt.xi);
    eps.push_back(pt.eps_t);
  }
  const bool descending = ts.size() > 1 && ts.front() > ts.back();
  if (descending) {
    std::reverse(ts.begin(), ts.end());
    std::reverse(xis.begin(), xis.end());
    std::reverse(eps.begin(), eps.end());
  }
  std::vector<LoopPoint> out;
  out.reserve(targets.size());
  for (double t : targets) {
    out.push_back({t, interpolate(ts, xis, t), interpolate(ts, eps, t), Direction::elastic});
  }
  return out;
}

bool same_grid(const std::vector<LoopPoint>& a, const std::vector<LoopPoint>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].T != b[i].T) return false;
  }
  return true;
}

}  // namespace

DerivedCoefficients derive_coefficients(const MaterialParameters& p) {
  validate(p);
  DerivedCoefficients c;
  const double s_ref = p.slope_reference_stress;
  c.dS = 1.0 / p.E_M - 1.0 / p.E_A;
  const double x = h_cur(s_ref, p) + s_ref * h_cur_derivative(s_ref, p);
  const double xs = x + s_ref * c.dS;
  const double c_sum = p.C_M + p.C_A;
  c.rho_ds0 = -2.0 * p.C_M * p.C_A * xs / c_sum;
  if (!(c.rho_ds0 < 0.0)) {
    throw Error(ErrorCode::infeasible_parameters,
                "derived entropy jump rho_ds0 must be negative (got " + std::to_string(c.rho_ds0) + ")");
  }
  c.D = (p.C_M - p.C_A) * xs / (c_sum * x);
  c.a1 = c.rho_ds0 * (p.M_f - p.M_s);
  c.a2 = c.rho_ds0 * (p.A_s - p.A_f);
  c.a3 = -0.25 * c.a1 * (1.0 + 1.0 / (p.n1 + 1.0) - 1.0 / (p.n2 + 1.0)) +
         0.25 * c.a2 * (1.0 + 1.0 / (p.n3 + 1.0) - 1.0 / (p.n4 + 1.0));
  c.rho_du0 = 0.5 * c.rho_ds0 * (p.M_s + p.A_f);
  c.Y0 = 0.5 * c.rho_ds0 * (p.M_s - p.A_f) - c.a3;
  return c;
}

std::optional<std::string> feasibility_violation(const MaterialParameters& p) {
  if (auto why = find_violation(p)) return why;
  try {
    derive_coefficients(p);
  } catch (const Error& e) {
    return std::string(e.what());
  }
  return std::nullopt;
}

double h_cur(double sigma_bar, const MaterialParameters& p) noexcept {
  return p.H_sat * -std::expm1(-p.k * sigma_bar);
}

double h_cur_derivative(double sigma_bar, const MaterialParameters& p) noexcept {
  return p.H_sat * p.k * std::exp(-p.k * sigma_bar);
}

double hardening(double xi, Direction dir, const DerivedCoefficients& c, const MaterialParameters& p) {
  if (!(xi >= 0.0 && xi <= 1.0)) {
    throw Error(ErrorCode::out_of_range, "martensite fraction " + std::to_string(xi) + " outside [0, 1]");
  }
  switch (dir) {
    case Direction::forward: return f_forward(xi, c, p);
    case Direction::reverse: return f_reverse(xi, c, p);
    case Direction::elastic: break;
  }
  throw Error(ErrorCode::out_of_range, "hardening is defined for forward or reverse transformation only");
}

double driving_force(double sigma, double T, const DerivedCoefficients& c) noexcept {
  return 0.5 * sigma * sigma * c.dS + c.rho_ds0 * T - c.rho_du0;
}

double reverse_direction(double eps_t, double xi) {
  if (xi == 0.0) throw Error(ErrorCode::undefined_direction, "reverse direction needs xi > 0");
  return eps_t / xi;
}

double critical_force(double sigma, Direction dir, double lambda, const DerivedCoefficients& c,
                      const MaterialParameters& p) {
  switch (dir) {
    case Direction::forward: return c.Y0 + c.D * sigma * h_cur(sigma, p);
    case Direction::reverse:
      if (!std::isfinite(lambda)) {
        throw Error(ErrorCode::undefined_direction, "reverse critical force needs a finite eps_t/xi");
      }
      return c.Y0 + c.D * sigma * lambda;
    case Direction::elastic: break;
  }
  throw Error(ErrorCode::undefined_direction, "critical force requested for elastic state");
}

double thermodynamic_force(double sigma, double T, double xi, Direction dir, double lambda,
                           const DerivedCoefficients& c, const MaterialParameters& p) {
  const double direction_strain = dir == Direction::forward ? h_cur(sigma, p) : lambda;
  return sigma * direction_strain + driving_force(sigma, T, c) - hardening(xi, dir, c, p);
}

double transformation_function(double sigma, double T, double xi, Direction dir, double lambda,
                               const DerivedCoefficients& c, const MaterialParameters& p) {
  const double pi = thermodynamic_force(sigma, T, xi, dir, lambda, c, p);
  const double y = critical_force(sigma, dir, lambda, c, p);
  return dir == Direction::forward ? pi - y : -pi - y;
}

TransformationTemperatures transformation_temperatures(double sigma, const DerivedCoefficients& c,
                                                       const MaterialParameters& p) {
  const double h = h_cur(sigma, p);
  const double elastic = 0.5 * sigma * sigma * c.dS;
  // Forward: rho_ds0 T = rho_du0 + Y0 + f_fwd(xi) - (1 - D) sigma H - elastic.
  const double fwd_base = c.rho_du0 + c.Y0 - (1.0 - c.D) * sigma * h - elastic;
  // Reverse (lambda = H): rho_ds0 T = rho_du0 - Y0 + f_rev(xi) - (1 + D) sigma H - elastic.
  const double rev_base = c.rho_du0 - c.Y0 - (1.0 + c.D) * sigma * h - elastic;
  TransformationTemperatures t;
  t.forward_start = (fwd_base + c.a3) / c.rho_ds0;
  t.forward_finish = (fwd_base + c.a1 + c.a3) / c.rho_ds0;
  t.reverse_start = (rev_base + c.a2 - c.a3) / c.rho_ds0;
  t.reverse_finish = (rev_base - c.a3) / c.rho_ds0;
  return t;
}

LoopGrid uniform_grid(double T_max, double T_min, std::size_t n) {
  if (n < 2 || !(T_max > T_min)) {
    throw Error(ErrorCode::out_of_range, "grid needs n >= 2 and T_max > T_min");
  }
  LoopGrid grid;
  grid.cooling.resize(n);
  grid.heating.resize(n);
  const double step = (T_max - T_min) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    grid.heating[i] = (i + 1 == n) ? T_max : T_min + step * static_cast<double>(i);
  }
  std::reverse_copy(grid.heating.begin(), grid.heating.end(), grid.cooling.begin());
  return grid;
}

std::vector<LoopPoint> solve_branch(double sigma, std::span<const double> temperatures, Direction dir,
                                    double xi_start, double lambda, const DerivedCoefficients& c,
                                    const MaterialParameters& p) {
  if (dir == Direction::elastic) {
    throw Error(ErrorCode::undefined_direction, "a branch must be forward or reverse");
  }
  std::vector<LoopPoint> out;
  out.reserve(temperatures.size());
  const double elastic = 0.5 * sigma * sigma * c.dS;
  double xi = xi_start;

  if (dir == Direction::forward) {
    // Phi_fwd = A(T) - f_fwd(xi), decreasing in xi.
    const double h = h_cur(sigma, p);
    const double a_const = (1.0 - c.D) * sigma * h + elastic - c.rho_du0 - c.Y0;
    for (double T : temperatures) {
      const double a = a_const + c.rho_ds0 * T;
      Direction state = Direction::elastic;
      if (a - f_forward(xi, c, p) > 0.0) {
        const double xi_prev = xi;
        if (a - f_forward(1.0, c, p) >= 0.0) {
          xi = 1.0;
        } else {
          xi = numerics::bisect([&](double z) { return a - f_forward(z, c, p); }, xi, 1.0, kRootOptions);
        }
        if (xi > xi_prev) state = Direction::forward;
      }
      out.push_back({T, xi, h * xi, state});
    }
  } else {
    // Phi_rev = B(T) + f_rev(xi), increasing in xi.
    const double b_const = -(1.0 + c.D) * sigma * lambda - elastic + c.rho_du0 - c.Y0;
    for (double T : temperatures) {
      const double b = b_const - c.rho_ds0 * T;
      Direction state = Direction::elastic;
      if (b + f_reverse(xi, c, p) > 0.0) {
        const double xi_prev = xi;
        if (b + f_reverse(0.0, c, p) >= 0.0) {
          xi = 0.0;
        } else {
          xi = numerics::bisect([&](double z) { return b + f_reverse(z, c, p); }, 0.0, xi, kRootOptions);
        }
        if (xi < xi_prev) state = Direction::reverse;
      }
      out.push_back({T, xi, lambda * xi, state});
    }
  }
  return out;
}

HysteresisLoop simulate_on_grid(double sigma, const LoopGrid& grid, const MaterialParameters& p) {
  if (grid.cooling.size() < 2 || grid.heating.size() < 2) {
    throw Error(ErrorCode::out_of_range, "each branch needs at least two temperatures");
  }
  for (std::size_t i = 1; i < grid.cooling.size(); ++i) {
    if (!(grid.cooling[i] < grid.cooling[i - 1])) {
      throw Error(ErrorCode::out_of_range, "cooling temperatures must be strictly decreasing");
    }
  }
  for (std::size_t i = 1; i < grid.heating.size(); ++i) {
    if (!(grid.heating[i] > grid.heating[i - 1])) {
      throw Error(ErrorCode::out_of_range, "heating temperatures must be strictly increasing");
    }
  }
  if (sigma < 0.0) throw Error(ErrorCode::out_of_range, "stress must be nonnegative");

  const DerivedCoefficients c = derive_coefficients(p);
  HysteresisLoop loop;
  loop.stress = sigma;
  loop.cooling = solve_branch(sigma, grid.cooling, Direction::forward, 0.0, h_cur(sigma, p), c, p);
  const LoopPoint& coldest = loop.cooling.back();
  if (coldest.xi < 1.0 - 1e-6) {
    throw Error(ErrorCode::incomplete_transformation,
                "xi = " + std::to_string(coldest.xi) + " at T_min = " + std::to_string(coldest.T) +
                    " K; lower T_min below the shifted M_f");
  }
  const double lambda = reverse_direction(coldest.eps_t, coldest.xi);
  loop.heating = solve_branch(sigma, grid.heating, Direction::reverse, coldest.xi, lambda, c, p);
  const LoopPoint& hottest = loop.heating.back();
  if (hottest.xi > 1e-6) {
    throw Error(ErrorCode::incomplete_transformation,
                "xi = " + std::to_string(hottest.xi) + " at T_max = " + std::to_string(hottest.T) +
                    " K; raise T_max above the shifted A_f");
  }
  return loop;
}

HysteresisLoop simulate_isobaric_loop(double sigma, double T_max, double T_min, std::size_t n_grid,
                                      const MaterialParameters& p) {
  if (n_grid < 50) throw Error(ErrorCode::out_of_range, "loop simulation needs n_grid >= 50");
  return simulate_on_grid(sigma, uniform_grid(T_max, T_min, n_grid), p);
}

std::pair<double, double> covering_range(double sigma, const MaterialParameters& p, double margin) {
  const auto t = transformation_temperatures(sigma, derive_coefficients(p), p);
  const double lo = std::min({t.forward_start, t.forward_finish, t.reverse_start, t.reverse_finish});
  const double hi = std::max({t.forward_start, t.forward_finish, t.reverse_start, t.reverse_finish});
  return {lo - margin, hi + margin};
}

HysteresisLoop simulate_at(double sigma, const LoopGrid& grid, const MaterialParameters& p) {
  if (grid.cooling.empty() || grid.heating.empty()) {
    throw Error(ErrorCode::out_of_range, "each branch needs at least one temperature");
  }
  const auto [lo, hi] = covering_range(sigma, p, 1.0);
  LoopGrid padded;
  const double top = std::max({hi, grid.cooling.front(), grid.heating.back()});
  const double bottom = std::min({lo, grid.cooling.back(), grid.heating.front()});
  const std::size_t pad_cool_front = grid.cooling.front() < top ? 1 : 0;
  const std::size_t pad_heat_front = grid.heating.front() > bottom ? 1 : 0;
  if (pad_cool_front) padded.cooling.push_back(top);
  padded.cooling.insert(padded.cooling.end(), grid.cooling.begin(), grid.cooling.end());
  if (grid.cooling.back() > bottom) padded.cooling.push_back(bottom);
  if (pad_heat_front) padded.heating.push_back(bottom);
  padded.heating.insert(padded.heating.end(), grid.heating.begin(), grid.heating.end());
  if (grid.heating.back() < top) padded.heating.push_back(top);

  HysteresisLoop full = simulate_on_grid(sigma, padded, p);
  HysteresisLoop out;
  out.stress = sigma;
  out.cooling.assign(full.cooling.begin() + static_cast<std::ptrdiff_t>(pad_cool_front),
                     full.cooling.begin() + static_cast<std::ptrdiff_t>(pad_cool_front + grid.cooling.size()));
  out.heating.assign(full.heating.begin() + static_cast<std::ptrdiff_t>(pad_heat_front),
                     full.heating.begin() + static_cast<std::ptrdiff_t>(pad_heat_front + grid.heating.size()));
  return out;
}

HysteresisLoop resample(const HysteresisLoop& loop, const LoopGrid& grid) {
  HysteresisLoop out;
  out.stress = loop.stress;
  out.cooling = resample_branch(loop.cooling, grid.cooling);
  out.heating = resample_branch(loop.heating, grid.heating);
  return out;
}

double loop_distance(const HysteresisLoop& a, const HysteresisLoop& b) {
  if (!same_grid(a.cooling, b.cooling) || !same_grid(a.heating, b.heating)) {
    throw Error(ErrorCode::grid_mismatch, "loops are on different grids; pass a common grid");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < a.cooling.size(); ++i) {
    const double diff = a.cooling[i].eps_t - b.cooling[i].eps_t;
    d += diff * diff;
  }
  for (std::size_t i = 0; i < a.heating.size(); ++i) {
    const double diff = a.heating[i].eps_t - b.heating[i].eps_t;
    d += diff * diff;
  }
  return d;
}

double loop_distance(const HysteresisLoop& a, const HysteresisLoop& b, const LoopGrid& grid) {
  return loop_distance(resample(a, grid), resample(b, grid));
}

std::size_t count_second_law_violations(const HysteresisLoop& loop, const MaterialParameters& p) {
  const DerivedCoefficients c = derive_coefficients(p);
  const double sigma = loop.stress;
  constexpr double tol = 1.0;  // Pa, the root tolerance
  std::size_t violations = 0;

  double xi_prev = 0.0;
  for (const auto& pt : loop.cooling) {
    if (pt.direction == Direction::forward) {
      const double pi = thermodynamic_force(sigma, pt.T, pt.xi, Direction::forward, 0.0, c, p);
      const double y = critical_force(sigma, Direction::forward, 0.0, c, p);
      if (pi < -tol || y < 0.0 || pt.xi < xi_prev) ++violations;
    }
    xi_prev = pt.xi;
  }
  if (loop.cooling.empty() || loop.cooling.back().xi <= 0.0) return violations;
  const double lambda = reverse_direction(loop.cooling.back().eps_t, loop.cooling.back().xi);
  xi_prev = loop.cooling.back().xi;
  for (const auto& pt : loop.heating) {
    if (pt.direction == Direction::reverse) {
      const double pi = thermodynamic_force(sigma, pt.T, pt.xi, Direction::reverse, lambda, c, p);
      const double y = critical_force(sigma, Direction::reverse, lambda, c, p);
      if (pi > tol || y < 0.0 || pt.xi > xi_prev) ++violations;
    }
    xi_prev = pt.xi;
  }
  return violations;
}

}  // namespace smacal::sma
