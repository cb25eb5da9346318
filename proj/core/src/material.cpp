#include "smacal/material.hpp"

#include <cmath>

#include "smacal/error.hpp"

namespace smacal::sma {

namespace {

struct ParameterInfo {
  ParameterId id;
  std::string_view name;
  std::string_view unit;
  double to_si;
  double MaterialParameters::*field;
};

constexpr std::array<ParameterInfo, parameter_count> info{{
    {ParameterId::E_A, "E_A", "GPa", 1e9, &MaterialParameters::E_A},
    {ParameterId::E_M, "E_M", "GPa", 1e9, &MaterialParameters::E_M},
    {ParameterId::M_s, "M_s", "K", 1.0, &MaterialParameters::M_s},
    {ParameterId::M_f, "M_f", "K", 1.0, &MaterialParameters::M_f},
    {ParameterId::A_s, "A_s", "K", 1.0, &MaterialParameters::A_s},
    {ParameterId::A_f, "A_f", "K", 1.0, &MaterialParameters::A_f},
    {ParameterId::C_A, "C_A", "MPa/K", 1e6, &MaterialParameters::C_A},
    {ParameterId::C_M, "C_M", "MPa/K", 1e6, &MaterialParameters::C_M},
    {ParameterId::H_sat, "H_sat", "-", 1.0, &MaterialParameters::H_sat},
    {ParameterId::k, "k", "1/MPa", 1e-6, &MaterialParameters::k},
    {ParameterId::n1, "n1", "-", 1.0, &MaterialParameters::n1},
    {ParameterId::n2, "n2", "-", 1.0, &MaterialParameters::n2},
    {ParameterId::n3, "n3", "-", 1.0, &MaterialParameters::n3},
    {ParameterId::n4, "n4", "-", 1.0, &MaterialParameters::n4},
}};

constexpr std::array<ParameterId, parameter_count> ids{
    ParameterId::E_A, ParameterId::E_M, ParameterId::M_s,   ParameterId::M_f, ParameterId::A_s,
    ParameterId::A_f, ParameterId::C_A, ParameterId::C_M,   ParameterId::H_sat, ParameterId::k,
    ParameterId::n1,  ParameterId::n2,  ParameterId::n3,    ParameterId::n4};

const ParameterInfo& lookup(ParameterId id) noexcept { return info[static_cast<std::size_t>(id)]; }

}  // namespace

std::span<const ParameterId> all_parameters() noexcept { return ids; }

std::string_view parameter_name(ParameterId id) noexcept { return lookup(id).name; }

std::optional<ParameterId> parse_parameter(std::string_view name) noexcept {
  for (const auto& entry : info) {
    if (entry.name == name) return entry.id;
  }
  return std::nullopt;
}

std::string_view parameter_unit(ParameterId id) noexcept { return lookup(id).unit; }

double unit_to_si(ParameterId id) noexcept { return lookup(id).to_si; }

double get_parameter(const MaterialParameters& p, ParameterId id) noexcept {
  const auto& entry = lookup(id);
  return p.*(entry.field) / entry.to_si;
}

void set_parameter(MaterialParameters& p, ParameterId id, double engineering_value) noexcept {
  const auto& entry = lookup(id);
  p.*(entry.field) = engineering_value * entry.to_si;
}

MaterialParameters apply_parameters(const MaterialParameters& base, std::span<const ParameterId> ids,
                                    std::span<const double> values) {
  if (ids.size() != values.size()) {
    throw Error(ErrorCode::dimension_mismatch, "parameter list and value vector differ in length");
  }
  MaterialParameters p = base;
  for (std::size_t i = 0; i < ids.size(); ++i) set_parameter(p, ids[i], values[i]);
  return p;
}

bool temperatures_ordered(const MaterialParameters& p) noexcept {
  return p.M_f < p.M_s && p.M_s < p.A_s && p.A_s < p.A_f;
}

std::optional<std::string> find_violation(const MaterialParameters& p) {
  for (const auto& entry : info) {
    const double v = p.*(entry.field);
    if (!std::isfinite(v) || !(v > 0.0)) {
      return std::string(entry.name) + " must be finite and strictly positive";
    }
  }
  if (!temperatures_ordered(p)) return std::string("temperatures violate M_f < M_s < A_s < A_f");
  for (double n : {p.n1, p.n2, p.n3, p.n4}) {
    if (n > 1.0) return std::string("hardening exponents must lie in (0, 1]");
  }
  if (p.H_sat >= 0.2) return std::string("H_sat must lie in (0, 0.2)");
  if (!(p.T0 > 0.0)) return std::string("T0 must be positive");
  if (!(p.slope_reference_stress > 0.0)) return std::string("slope reference stress must be positive");
  return std::nullopt;
}

void validate(const MaterialParameters& p) {
  if (auto why = find_violation(p)) throw Error(ErrorCode::infeasible_parameters, *why);
}

}  // namespace smacal::sma
