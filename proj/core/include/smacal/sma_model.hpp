#pragma once

// Uniaxial isobaric solver for the smooth-hardening phase transformation
// model. Stress is the (positive) uniaxial effective stress in Pa.
//
// Coefficient closed form (see derive_coefficients). With
//   X   = H(s*) + s* H'(s*),   dS = 1/E_M - 1/E_A,
// where s* is MaterialParameters::slope_reference_stress:
//   rho_ds0 = -2 C_M C_A (X + s* dS) / (C_M + C_A)
//   D       = (C_M - C_A)(X + s* dS) / ((C_M + C_A) X)
//   a1      = rho_ds0 (M_f - M_s)
//   a2      = rho_ds0 (A_s - A_f)
//   a3      = -a1/4 (1 + 1/(n1+1) - 1/(n2+1)) + a2/4 (1 + 1/(n3+1) - 1/(n4+1))
//   rho_du0 = rho_ds0 (M_s + A_f) / 2
//   Y0      = rho_ds0 (M_s - A_f) / 2 - a3
// These make the zero-stress surfaces vanish at (M_s, xi=0), (M_f, xi=1),
// (A_f, xi=0), (A_s, xi=1) and give stress-temperature slopes C_M at the
// forward start line and C_A at the reverse finish line at s*.

#include <cstddef>
#include <optional>
#include <string>
#include <span>
#include <utility>
#include <vector>

#include "smacal/material.hpp"
#include "smacal/numerics.hpp"

namespace smacal::sma {

struct DerivedCoefficients {
  double rho_ds0 = 0.0;  // Pa/K
  double rho_du0 = 0.0;  // Pa
  double a1 = 0.0;       // Pa
  double a2 = 0.0;       // Pa
  double a3 = 0.0;       // Pa
  double Y0 = 0.0;       // Pa
  double D = 0.0;
  double dS = 0.0;  // 1/Pa
};

enum class Direction { forward, reverse, elastic };

/// Throws InfeasibleParameters when the material invariants do not hold or
/// the resulting entropy jump is not negative.
DerivedCoefficients derive_coefficients(const MaterialParameters& p);

/// Diagnostic for parameters that derive_coefficients would reject, or nullopt.
std::optional<std::string> feasibility_violation(const MaterialParameters& p);

/// Maximum transformation strain H_sat (1 - exp(-k sigma)).
double h_cur(double sigma_bar, const MaterialParameters& p) noexcept;
double h_cur_derivative(double sigma_bar, const MaterialParameters& p) noexcept;

/// Smooth hardening function f_fwd / f_rev. Throws OutOfRange for xi outside
/// [0, 1] and for Direction::elastic.
double hardening(double xi, Direction dir, const DerivedCoefficients& c, const MaterialParameters& p);

/// Driving force p = sigma^2 dS / 2 + rho_ds0 T - rho_du0.
double driving_force(double sigma, double T, const DerivedCoefficients& c) noexcept;

/// Transformation direction on reversal, eps_t / xi. Throws UndefinedDirection
/// when xi == 0.
double reverse_direction(double eps_t, double xi);

/// Critical force Y. `lambda` is ignored for the forward direction; for the
/// reverse direction it is the frozen eps_t / xi and must be finite.
double critical_force(double sigma, Direction dir, double lambda, const DerivedCoefficients& c,
                      const MaterialParameters& p);

/// Total thermodynamic force pi = sigma Lambda + p - f.
double thermodynamic_force(double sigma, double T, double xi, Direction dir, double lambda,
                           const DerivedCoefficients& c, const MaterialParameters& p);

/// Transformation function Phi (forward: pi - Y, reverse: -pi - Y).
double transformation_function(double sigma, double T, double xi, Direction dir, double lambda,
                               const DerivedCoefficients& c, const MaterialParameters& p);

/// Start and finish temperatures of a major loop at a given stress.
struct TransformationTemperatures {
  double forward_start = 0.0;   // shifted M_s
  double forward_finish = 0.0;  // shifted M_f
  double reverse_start = 0.0;   // shifted A_s
  double reverse_finish = 0.0;  // shifted A_f
};

TransformationTemperatures transformation_temperatures(double sigma, const DerivedCoefficients& c,
                                                       const MaterialParameters& p);

struct LoopPoint {
  double T = 0.0;
  double xi = 0.0;
  double eps_t = 0.0;
  Direction direction = Direction::elastic;
};

struct HysteresisLoop {
  double stress = 0.0;
  std::vector<LoopPoint> cooling;  // strictly decreasing T
  std::vector<LoopPoint> heating;  // strictly increasing T
};

/// Common temperature grid for both branches of a loop.
struct LoopGrid {
  std::vector<double> cooling;
  std::vector<double> heating;
};

/// Uniform grid with n points per branch on [T_min, T_max].
LoopGrid uniform_grid(double T_max, double T_min, std::size_t n);

inline constexpr std::size_t default_grid_points = 500;

/// Solves one branch from an initial state. Cooling branches use
/// Direction::forward with lambda = H(sigma); heating branches use
/// Direction::reverse with the frozen reversal lambda.
std::vector<LoopPoint> solve_branch(double sigma, std::span<const double> temperatures, Direction dir,
                                    double xi_start, double lambda, const DerivedCoefficients& c,
                                    const MaterialParameters& p);

/// Cooling from austenite to T_min then heating back on the same grid.
/// Throws IncompleteTransformation if either branch does not finish.
HysteresisLoop simulate_on_grid(double sigma, const LoopGrid& grid, const MaterialParameters& p);

HysteresisLoop simulate_isobaric_loop(double sigma, double T_max, double T_min, std::size_t n_grid,
                                      const MaterialParameters& p);

/// Major loop evaluated at arbitrary branch temperatures. Each branch is
/// padded internally out to the covering range, so the grid need not reach
/// the finish temperatures. Cooling temperatures must decrease, heating
/// temperatures increase.
HysteresisLoop simulate_at(double sigma, const LoopGrid& grid, const MaterialParameters& p);

/// Temperature window [T_min, T_max] that contains the full major loop at
/// `sigma` with `margin` kelvin on either side.
std::pair<double, double> covering_range(double sigma, const MaterialParameters& p, double margin);

/// Linear interpolation of both branches onto a target grid; temperatures
/// outside a branch are clamped to its end values.
HysteresisLoop resample(const HysteresisLoop& loop, const LoopGrid& grid);

/// Sum of squared differences of the concatenated eps_t coordinates. Throws
/// GridMismatch unless both loops share identical temperature grids.
double loop_distance(const HysteresisLoop& a, const HysteresisLoop& b);

/// As above after resampling both loops onto `grid`.
double loop_distance(const HysteresisLoop& a, const HysteresisLoop& b, const LoopGrid& grid);

/// Number of solved points that violate pi * dxi >= 0 with a nonnegative
/// critical force.
std::size_t count_second_law_violations(const HysteresisLoop& loop, const MaterialParameters& p);

}  // namespace smacal::sma
