#include "steady_state.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "gfmdc/network.hpp"

namespace gfmdc::detail {

namespace {

using cplx = std::complex<double>;

struct Layout {
  std::size_t n_units = 0;
  bool islanded = false;
  std::size_t size() const { return 2 + 2 * n_units; }
};

// Unknowns: [v_d, v_q, (delta_k, V_k) per unit]; islanded runs replace
// delta_0 (the angle reference) with the common frequency.
struct Decoded {
  cplx v;
  double omega = 1.0;
  std::vector<double> delta, mag;
};

Decoded decode(const Layout& lay, const Eigen::VectorXd& x) {
  Decoded d;
  d.v = {x[0], x[1]};
  d.delta.resize(lay.n_units);
  d.mag.resize(lay.n_units);
  for (std::size_t k = 0; k < lay.n_units; ++k) {
    d.delta[k] = x[2 + 2 * k];
    d.mag[k] = x[3 + 2 * k];
  }
  if (lay.islanded && lay.n_units > 0) {
    d.omega = d.delta[0];
    d.delta[0] = 0.0;
  }
  return d;
}

cplx unit_current(const SteadyUnit& u, const Decoded& d, std::size_t k) {
  // Unit base; the grid-side inductor seen at the operating frequency.
  const cplx z(0.0, d.omega * u.omega_base * u.l_g);
  return (std::polar(d.mag[k], d.delta[k]) - d.v) / z;
}

Eigen::VectorXd residual(const SteadyInputs& in, const Layout& lay, const Eigen::VectorXd& x) {
  const Decoded d = decode(lay, x);
  Eigen::VectorXd r(lay.size());
  cplx kcl = 0.0;
  for (std::size_t k = 0; k < lay.n_units; ++k) {
    const SteadyUnit& u = in.units[k];
    const cplx i = unit_current(u, d, k);
    kcl += u.s_ratio * i;
    const cplx s = std::polar(d.mag[k], d.delta[k]) * std::conj(i);
    const DroopParams& dp = u.droop;
    r[2 + 2 * k] = d.omega - (1.0 + dp.k_p * (dp.p_ref - s.real()));
    r[3 + 2 * k] = d.mag[k] - (dp.v_ref + dp.k_q * (dp.q_ref - s.imag()));
  }
  if (in.breaker_closed) kcl += (in.e_mag - d.v) / cplx(0.0, in.x_th);
  kcl -= std::conj(cplx(in.p_load, in.q_load) / d.v);
  r[0] = kcl.real();
  r[1] = kcl.imag();
  return r;
}

}  // namespace

SteadySolution solve_steady_state(const SteadyInputs& in) {
  Layout lay{in.units.size(), !in.breaker_closed};
  if (lay.islanded && lay.n_units == 0)
    throw SimulationFault(SimulationFault::Kind::dead_bus,
                          "dead bus: breaker open and no grid-forming unit active");
  if (lay.islanded && in.p_load == 0.0 && in.q_load == 0.0)
    throw SimulationFault(SimulationFault::Kind::dead_bus,
                          "dead bus: islanded PCC has no load path");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(lay.size());
  x[0] = in.breaker_closed ? in.e_mag : 1.0;
  for (std::size_t k = 0; k < lay.n_units; ++k) x[3 + 2 * k] = in.units[k].droop.v_ref;
  if (lay.islanded) x[2] = 1.0;

  Eigen::VectorXd r = residual(in, lay, x);
  for (int iter = 0; iter < 100 && r.lpNorm<Eigen::Infinity>() > 1e-12; ++iter) {
    Eigen::MatrixXd jac(lay.size(), lay.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(x[j]));
      Eigen::VectorXd xp = x;
      xp[j] += h;
      jac.col(j) = (residual(in, lay, xp) - r) / h;
    }
    const Eigen::VectorXd step = jac.partialPivLu().solve(-r);
    double alpha = 1.0;
    Eigen::VectorXd trial = x + step;
    Eigen::VectorXd r_trial = residual(in, lay, trial);
    while (!(r_trial.norm() < r.norm()) && alpha > 1e-4) {
      alpha *= 0.5;
      trial = x + alpha * step;
      r_trial = residual(in, lay, trial);
    }
    x = trial;
    r = r_trial;
  }
  if (!(r.lpNorm<Eigen::Infinity>() <= 1e-9))
    throw SimulationFault(SimulationFault::Kind::divergence,
                          "flat start: steady-state solve did not converge");

  const Decoded d = decode(lay, x);
  SteadySolution sol;
  sol.v_pcc = {d.v.real(), d.v.imag()};
  sol.omega_pu = d.omega;
  sol.delta = d.delta;
  sol.v_mag = d.mag;
  for (std::size_t k = 0; k < lay.n_units; ++k) {
    const cplx s = std::polar(d.mag[k], d.delta[k]) * std::conj(unit_current(in.units[k], d, k));
    sol.power.push_back({s.real(), s.imag()});
  }
  if (in.breaker_closed) {
    const cplx ig = (in.e_mag - d.v) / cplx(0.0, in.x_th);
    sol.i_grid = {ig.real(), ig.imag()};
  }
  return sol;
}

}  // namespace gfmdc::detail
