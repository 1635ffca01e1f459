#include "gfmdc/network.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace gfmdc {

namespace {

using cplx = std::complex<double>;

cplx to_complex(const DqPair& x) { return {x.d, x.q}; }
DqPair to_dq(const cplx& z) { return {z.real(), z.imag()}; }

}  // namespace

PlantDerivative plant_derivatives(const InverterPlantState& s, const DqPair& v_mod,
                                  const DqPair& v_pcc, const PlantFilter& f, double omega) {
  // L di/dt = v_in - v_out - j*omega*L*i, and likewise for the capacitor.
  PlantDerivative dx;
  dx.di_lf = {(v_mod.d - s.v_cf.d) / f.l_f + omega * s.i_lf.q,
              (v_mod.q - s.v_cf.q) / f.l_f - omega * s.i_lf.d};
  dx.dv_cf = {(s.i_lf.d - s.i_lg.d) / f.c_f + omega * s.v_cf.q,
              (s.i_lf.q - s.i_lg.q) / f.c_f - omega * s.v_cf.d};
  dx.di_lg = {(s.v_cf.d - v_pcc.d) / f.l_g + omega * s.i_lg.q,
              (s.v_cf.q - v_pcc.q) / f.l_g - omega * s.i_lg.d};
  return dx;
}

bool plant_diverged(const InverterPlantState& s, double bound) {
  for (const DqPair* x : {&s.i_lf, &s.v_cf, &s.i_lg}) {
    const double m = x->norm();
    if (!std::isfinite(m) || m > bound) return true;
  }
  return false;
}

void validate(const GridEquivalent& g) {
  if (!(g.h > 0.0)) throw std::domain_error("grid: inertia h must be positive");
  if (!(g.x_th > 0.0)) throw std::domain_error("grid: x_th must be positive");
  if (!(g.r_gov > 0.0)) throw std::domain_error("grid: r_gov must be positive");
  if (!(g.d >= 0.0)) throw std::domain_error("grid: damping must be non-negative");
  if (!(g.rating > 0.0)) throw std::domain_error("grid: rating must be positive");
  if (!(g.e_mag > 0.0)) throw std::domain_error("grid: e_mag must be positive");
  if (!(g.omega_base > 0.0)) throw std::domain_error("grid: omega_base must be positive");
}

GridDerivative grid_derivatives(const GridEquivalent& g, double p_exported) {
  const double dw = g.omega_g - 1.0;
  const double p_mech = g.p_sched / g.rating - dw / g.r_gov;
  const double accel = p_mech - p_exported / g.rating - g.d * dw;
  return {accel / (2.0 * g.h), g.omega_base * dw};
}

bool grid_diverged(const GridEquivalent& g) {
  return !std::isfinite(g.omega_g) || std::abs(g.omega_g - 1.0) > kGridFrequencyBand;
}

GridEquivalent grid_step(const GridEquivalent& g, double p_exported, double dt) {
  if (!(dt > 0.0)) throw std::domain_error("grid_step: dt must be positive");
  auto at = [&](const GridEquivalent& base, const GridDerivative& k, double h) {
    GridEquivalent x = base;
    x.omega_g += h * k.d_omega;
    x.delta += h * k.d_delta;
    return x;
  };
  const auto k1 = grid_derivatives(g, p_exported);
  const auto k2 = grid_derivatives(at(g, k1, 0.5 * dt), p_exported);
  const auto k3 = grid_derivatives(at(g, k2, 0.5 * dt), p_exported);
  const auto k4 = grid_derivatives(at(g, k3, dt), p_exported);
  GridEquivalent next = g;
  next.omega_g += dt / 6.0 * (k1.d_omega + 2.0 * k2.d_omega + 2.0 * k3.d_omega + k4.d_omega);
  next.delta += dt / 6.0 * (k1.d_delta + 2.0 * k2.d_delta + 2.0 * k3.d_delta + k4.d_delta);
  if (grid_diverged(next))
    throw SimulationFault(SimulationFault::Kind::divergence,
                          "grid frequency left the valid band: omega_g = " +
                              std::to_string(next.omega_g) + " pu");
  return next;
}

void validate(const FaultSpec& f) {
  if (!(f.t_clear > f.t_start)) throw std::domain_error("fault: t_clear must exceed t_start");
  if (!(f.t_start >= 0.0)) throw std::domain_error("fault: t_start must be non-negative");
  if (!(f.residual_v > 0.0 && f.residual_v < 1.0))
    throw std::domain_error("fault: residual_v must lie in (0, 1)");
}

double apply_fault(const GridEquivalent& g, const FaultSpec& f, double t) {
  if (t >= f.t_start && t < f.t_clear) return f.residual_v * g.e_mag;
  return g.e_mag;
}

void validate(const BreakerSpec& b) {
  if (!(b.t_open > 0.0)) throw std::domain_error("breaker: t_open must be positive");
}

bool breaker_closed(const BreakerSpec& b, double t) { return b.initially_closed && t < b.t_open; }

Admittance target_admittance(double p_demand, double q_demand, const DqPair& v) {
  const double vm = std::max(v.norm(), kLoadMinVoltage);
  Admittance y{p_demand / (vm * vm), -q_demand / (vm * vm)};
  const double i_mag = std::hypot(y.g, y.b) * v.norm();
  if (i_mag > kLoadCurrentCap) {
    const double k = kLoadCurrentCap / i_mag;
    y.g *= k;
    y.b *= k;
  }
  return y;
}

DqPair admittance_current(const Admittance& y, const DqPair& v) {
  return to_dq(cplx(y.g, y.b) * to_complex(v));
}

LoadDraw load_draw(const LoadState& load, const DqPair& v_pcc, double dt) {
  if (!(dt > 0.0)) throw std::domain_error("load_draw: dt must be positive");
  const Admittance target = target_admittance(load.p_demand, load.q_demand, v_pcc);
  const double a = std::exp(-load.omega_c * dt);
  LoadDraw out{load, {}};
  out.state.y.g = target.g + (load.y.g - target.g) * a;
  out.state.y.b = target.b + (load.y.b - target.b) * a;
  out.current = admittance_current(out.state.y, v_pcc);
  return out;
}

DqPair solve_pcc(const BusInputs& in) {
  const cplx y_load(in.load.g, in.load.b);
  const cplx inj = to_complex(in.injection);
  if (in.breaker_closed) {
    const cplx e = std::polar(in.e_mag, in.e_angle);
    const cplx y_th = 1.0 / cplx(0.0, in.x_th);
    return to_dq((inj + e * y_th) / (y_load + y_th));
  }
  if (in.active_sources <= 0)
    throw SimulationFault(SimulationFault::Kind::dead_bus,
                          "dead bus: breaker open and no grid-forming unit active");
  if (std::abs(y_load) < 1e-12)
    throw SimulationFault(SimulationFault::Kind::dead_bus,
                          "dead bus: islanded PCC has no load path");
  return to_dq(inj / y_load);
}

DqPair grid_current(const BusInputs& in, const DqPair& v_pcc) {
  if (!in.breaker_closed) return {};
  const cplx e = std::polar(in.e_mag, in.e_angle);
  return to_dq((e - to_complex(v_pcc)) / cplx(0.0, in.x_th));
}

DqPair pcc_kcl_residual(const BusInputs& in, const DqPair& v_pcc) {
  const DqPair i_load = admittance_current(in.load, v_pcc);
  return in.injection + grid_current(in, v_pcc) - i_load;
}

}  // namespace gfmdc
