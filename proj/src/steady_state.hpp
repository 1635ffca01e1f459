#pragma once

#include <vector>

#include "gfmdc/gfm_control.hpp"
#include "gfmdc/signal.hpp"

namespace gfmdc::detail {

struct SteadyUnit {
  double l_g = 0.0;      // pu-seconds on the unit base
  double s_ratio = 1.0;  // unit rating / system base
  double omega_base = 0.0;
  DroopParams droop;
};

struct SteadyInputs {
  std::vector<SteadyUnit> units;
  bool breaker_closed = true;
  double e_mag = 1.0;
  double x_th = 0.2;
  double p_load = 0.0;  // system pu
  double q_load = 0.0;
};

struct SteadySolution {
  DqPair v_pcc;         // system frame
  double omega_pu = 1.0;
  std::vector<double> delta;  // capacitor-voltage angle of each unit, system frame
  std::vector<double> v_mag;
  std::vector<PowerPair> power;  // unit base, measured at the capacitor
  DqPair i_grid;        // system pu
};

/// Power-flow style equilibrium of the PCC with droop-controlled units
/// (Newton with a finite-difference Jacobian). Throws SimulationFault.
SteadySolution solve_steady_state(const SteadyInputs& in);

}  // namespace gfmdc::detail
