#include "gfmdc/pu_base.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gfmdc {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

double PerUnitBase::omega() const { return 2.0 * std::numbers::pi * f_nominal; }

double PerUnitBase::z_base() const { return compute_base_impedance(*this); }

double PerUnitBase::i_base() const { return s_nominal / (std::sqrt(3.0) * v_nominal); }

void validate(const PerUnitBase& base) {
  if (!positive_finite(base.v_nominal))
    throw std::domain_error("per-unit base: v_nominal must be positive");
  if (!positive_finite(base.s_nominal))
    throw std::domain_error("per-unit base: s_nominal must be positive");
  if (!positive_finite(base.f_nominal))
    throw std::domain_error("per-unit base: f_nominal must be positive");
}

double compute_base_impedance(const PerUnitBase& base) {
  validate(base);
  const double z = base.v_nominal * base.v_nominal / base.s_nominal;
  if (!positive_finite(z)) throw std::domain_error("per-unit base: impedance overflow");
  return z;
}

FilterParams design_filter(double z_base, double f, double l_g_ratio, double design_ratio) {
  if (!positive_finite(z_base)) throw std::domain_error("design_filter: z_base must be positive");
  if (!positive_finite(f)) throw std::domain_error("design_filter: f must be positive");
  if (!std::isfinite(l_g_ratio) || l_g_ratio < 0.0)
    throw std::domain_error("design_filter: l_g_ratio must be non-negative");
  if (!positive_finite(design_ratio))
    throw std::domain_error("design_filter: design ratio must be positive");

  const double omega = 2.0 * std::numbers::pi * f;
  FilterParams out;
  out.l_f = design_ratio * z_base / omega;
  out.c_f = design_ratio / (omega * z_base);
  out.l_g = l_g_ratio * out.l_f;
  return out;
}

PlantFilter to_plant_filter(const FilterParams& filter, const PerUnitBase& base) {
  const double z = compute_base_impedance(base);
  if (!positive_finite(filter.l_f) || !positive_finite(filter.c_f) || !positive_finite(filter.l_g))
    throw std::domain_error("filter: l_f, c_f and l_g must be positive");
  return PlantFilter{filter.l_f / z, filter.c_f * z, filter.l_g / z};
}

Quantity parse_quantity(std::string_view name) {
  if (name == "voltage") return Quantity::voltage;
  if (name == "current") return Quantity::current;
  if (name == "power") return Quantity::power;
  if (name == "impedance") return Quantity::impedance;
  if (name == "frequency") return Quantity::frequency;
  throw std::domain_error("unknown per-unit quantity '" + std::string(name) + "'");
}

namespace {

double base_value(const PerUnitBase& base, Quantity kind) {
  validate(base);
  switch (kind) {
    case Quantity::voltage: return base.v_nominal;
    case Quantity::current: return base.i_base();
    case Quantity::power: return base.s_nominal;
    case Quantity::impedance: return base.z_base();
    case Quantity::frequency: return base.f_nominal;
  }
  throw std::domain_error("unknown per-unit quantity");
}

}  // namespace

double to_per_unit(double value, const PerUnitBase& base, Quantity kind) {
  return value / base_value(base, kind);
}

double from_per_unit(double value, const PerUnitBase& base, Quantity kind) {
  return value * base_value(base, kind);
}

}  // namespace gfmdc
