#pragma once

#include <string_view>

namespace gfmdc {

/// Base quantities of a per-unit system. Voltage is line-line RMS.
struct PerUnitBase {
  double v_nominal = 13'800.0;  // V
  double s_nominal = 5.0e6;     // VA
  double f_nominal = 60.0;      // Hz

  double omega() const;   // rad/s
  double z_base() const;  // ohm
  double i_base() const;  // A (RMS)
};

void validate(const PerUnitBase& base);

/// Output filter in SI units.
struct FilterParams {
  double l_f = 0.0;  // H
  double c_f = 0.0;  // F
  double l_g = 0.0;  // H
};

/// Output filter in per-unit seconds on the converter's own base
/// (inductance L/Z_base, capacitance C*Z_base). Multiplying by an angular
/// frequency in rad/s yields a per-unit reactance/susceptance.
struct PlantFilter {
  double l_f = 0.0;
  double c_f = 0.0;
  double l_g = 0.0;
};

inline constexpr double kFilterDesignRatio = 0.15;
inline constexpr double kDefaultGridSideRatio = 0.5;

double compute_base_impedance(const PerUnitBase& base);

/// Sizes L_f and C_f so that each presents `design_ratio` per unit at the
/// nominal frequency; L_g is `l_g_ratio * L_f`.
FilterParams design_filter(double z_base, double f, double l_g_ratio,
                           double design_ratio = kFilterDesignRatio);

PlantFilter to_plant_filter(const FilterParams& filter, const PerUnitBase& base);

enum class Quantity { voltage, current, power, impedance, frequency };

Quantity parse_quantity(std::string_view name);

double to_per_unit(double value, const PerUnitBase& base, Quantity kind);
double from_per_unit(double value, const PerUnitBase& base, Quantity kind);

}  // namespace gfmdc
