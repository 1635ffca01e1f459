#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

#include "gfmdc/pu_base.hpp"
#include "gfmdc/signal.hpp"

namespace gfmdc {

/// Raised when a run cannot continue: dead bus, divergence, NaN.
class SimulationFault : public std::runtime_error {
 public:
  enum class Kind { dead_bus, divergence };
  SimulationFault(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// ---- inverter plant ------------------------------------------------------

/// LCL filter states in the inverter's own rotating frame, per unit on the
/// inverter base.
struct InverterPlantState {
  DqPair i_lf;
  DqPair v_cf;
  DqPair i_lg;
};

struct PlantDerivative {
  DqPair di_lf;
  DqPair dv_cf;
  DqPair di_lg;
};

inline constexpr double kDivergenceBound = 3.0;

PlantDerivative plant_derivatives(const InverterPlantState& state, const DqPair& v_mod,
                                  const DqPair& v_pcc, const PlantFilter& filter, double omega);

bool plant_diverged(const InverterPlantState& state, double bound = kDivergenceBound);

// ---- grid equivalent -----------------------------------------------------

/// Thevenin source behind a reactance, driven by a single-mass swing equation
/// with governor droop. Powers are per unit on the system base; `rating` is
/// the machine rating expressed on that base (h, d and r_gov are on the
/// machine's own rating).
struct GridEquivalent {
  double e_mag = 1.0;
  double x_th = 0.2;
  double h = 4.0;
  double d = 1.0;
  double r_gov = 0.05;
  double rating = 1.0;
  double p_sched = 0.0;
  double delta = 0.0;    // rad, relative to the nominal-frequency frame
  double omega_g = 1.0;  // pu
  double omega_base = 2.0 * std::numbers::pi * 60.0;
};

void validate(const GridEquivalent& g);

struct GridDerivative {
  double d_omega = 0.0;
  double d_delta = 0.0;
};

GridDerivative grid_derivatives(const GridEquivalent& g, double p_exported);

inline constexpr double kGridFrequencyBand = 0.05;

bool grid_diverged(const GridEquivalent& g);

/// Advances the swing state by dt (RK4, p_exported held). Throws
/// SimulationFault when |omega_g - 1| leaves the valid band.
GridEquivalent grid_step(const GridEquivalent& g, double p_exported, double dt);

// ---- events --------------------------------------------------------------

/// Positive-sequence sag equivalent of a single line-to-ground fault.
struct FaultSpec {
  double t_start = 0.0;
  double t_clear = 0.0;
  double residual_v = 0.7;
};

void validate(const FaultSpec& f);

double apply_fault(const GridEquivalent& g, const FaultSpec& f, double t);

struct BreakerSpec {
  double t_open = 0.0;
  bool initially_closed = true;
};

void validate(const BreakerSpec& b);

bool breaker_closed(const BreakerSpec& b, double t);

// ---- load ----------------------------------------------------------------

struct Admittance {
  double g = 0.0;
  double b = 0.0;
};

/// Constant-power load realized as an admittance that relaxes toward
/// conj(S)/|V|^2 with a first-order lag. Per unit on the system base.
struct LoadState {
  double p_demand = 0.0;
  double q_demand = 0.0;
  Admittance y;
  double omega_c = 100.0;  // rad/s (10 ms)
};

inline constexpr double kLoadCurrentCap = 2.0;
inline constexpr double kLoadMinVoltage = 0.1;

/// Admittance that draws exactly (p, q) at v, subject to the current cap;
/// below kLoadMinVoltage the conversion uses that floor instead of |v|.
Admittance target_admittance(double p_demand, double q_demand, const DqPair& v);

DqPair admittance_current(const Admittance& y, const DqPair& v);

struct LoadDraw {
  LoadState state;
  DqPair current;
};

/// Advances the load smoothing by dt toward the constant-power admittance at
/// v_pcc and returns the drawn current at v_pcc.
LoadDraw load_draw(const LoadState& load, const DqPair& v_pcc, double dt);

// ---- PCC bus -------------------------------------------------------------

struct BusInputs {
  double e_mag = 1.0;    // effective EMF after any fault sag
  double e_angle = 0.0;  // rad
  double x_th = 0.2;
  bool breaker_closed = true;
  DqPair injection;      // sum of inverter grid-side currents, system frame
  int active_sources = 0;
  Admittance load;
};

/// Algebraic KCL solve at the PCC. Throws SimulationFault(dead_bus) when no
/// voltage source is connected or the islanded bus has no load path.
DqPair solve_pcc(const BusInputs& in);

/// Grid branch current into the PCC (zero when the breaker is open).
DqPair grid_current(const BusInputs& in, const DqPair& v_pcc);

/// Sum of currents entering the PCC; zero for an exact solve.
DqPair pcc_kcl_residual(const BusInputs& in, const DqPair& v_pcc);

}  // namespace gfmdc
