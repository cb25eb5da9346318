#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace smacal::sma {

/// The fourteen screenable material properties.
enum class ParameterId {
  E_A,
  E_M,
  M_s,
  M_f,
  A_s,
  A_f,
  C_A,
  C_M,
  H_sat,
  k,
  n1,
  n2,
  n3,
  n4,
};

inline constexpr std::size_t parameter_count = 14;

std::span<const ParameterId> all_parameters() noexcept;
std::string_view parameter_name(ParameterId id) noexcept;
std::optional<ParameterId> parse_parameter(std::string_view name) noexcept;

/// Engineering unit used for a parameter in config files, chains and reports
/// (GPa, K, MPa/K, 1/MPa or dimensionless).
std::string_view parameter_unit(ParameterId id) noexcept;

/// Factor converting the engineering unit to SI.
double unit_to_si(ParameterId id) noexcept;

/// Material state for the uniaxial model. Everything is stored in SI units
/// (Pa, K, 1/Pa); use get_parameter/set_parameter for engineering units.
///
/// The defaults are the posterior means of a Ni-Ti calibration against three
/// isobaric actuation tests, completed with nominal values for the
/// properties that were not calibrated (E_A, C_M, n1..n4).
struct MaterialParameters {
  double E_A = 60.0e9;
  double E_M = 35.6e9;
  double M_s = 280.4;
  double M_f = 259.9;
  double A_s = 296.6;
  double A_f = 322.6;
  double C_A = 11.8e6;
  double C_M = 8.0e6;
  double H_sat = 0.0517;
  double k = 0.0595e-6;
  double n1 = 1.0;
  double n2 = 0.6;
  double n3 = 0.6;
  double n4 = 1.0;
  /// Reference temperature of the free energy.
  double T0 = 300.0;
  /// Stress at which the phase-diagram slopes C_A and C_M are matched when
  /// deriving the model coefficients.
  double slope_reference_stress = 150.0e6;
};

double get_parameter(const MaterialParameters& p, ParameterId id) noexcept;
void set_parameter(MaterialParameters& p, ParameterId id, double engineering_value) noexcept;

/// Copy of `base` with the listed parameters overwritten (engineering units).
MaterialParameters apply_parameters(const MaterialParameters& base, std::span<const ParameterId> ids,
                                    std::span<const double> values);

/// M_f < M_s < A_s < A_f.
bool temperatures_ordered(const MaterialParameters& p) noexcept;

/// Returns a diagnostic for the first violated invariant, or nullopt.
std::optional<std::string> find_violation(const MaterialParameters& p);

/// Throws InfeasibleParameters when find_violation reports something.
void validate(const MaterialParameters& p);

}  // namespace smacal::sma
