#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "gfmdc/gfm_control.hpp"

using namespace gfmdc;

namespace {

constexpr double kPi = std::numbers::pi;

AbcTriple balanced(double amplitude, double phase_a) {
  return {amplitude * std::cos(phase_a), amplitude * std::cos(phase_a - 2.0 * kPi / 3.0),
          amplitude * std::cos(phase_a + 2.0 * kPi / 3.0)};
}

AbcTriple from_dq(DqPair x, double theta) {
  return {x.d * std::cos(theta) - x.q * std::sin(theta),
          x.d * std::cos(theta - 2.0 * kPi / 3.0) - x.q * std::sin(theta - 2.0 * kPi / 3.0),
          x.d * std::cos(theta + 2.0 * kPi / 3.0) - x.q * std::sin(theta + 2.0 * kPi / 3.0)};
}

GfmParams default_params() {
  GfmParams p;
  const PerUnitBase b;
  p.filter = to_plant_filter(design_filter(b.z_base(), b.f_nominal, 0.5), b);
  return p;
}

ControllerState zeroed(const LoopGains& g) {
  ControllerState st = make_controller(DroopParams{}, g);
  return st;
}

}  // namespace

TEST_CASE("measure_power examples") {
  const PowerPair a = measure_power({1.0, 0.0}, {1.0, 0.0});
  CHECK(a.p == doctest::Approx(1.0));
  CHECK(a.q == doctest::Approx(0.0));

  for (PowerMode m : {PowerMode::exact, PowerMode::approximate}) {
    const PowerPair b = measure_power({1.0, 0.0}, {0.0, -0.5}, m);
    CHECK(b.p == doctest::Approx(0.0));
    CHECK(b.q == doctest::Approx(0.5));
  }

  const PowerPair e = measure_power({0.98, 0.02}, {0.5, -0.1}, PowerMode::exact);
  CHECK(e.p == doctest::Approx(0.488));
  CHECK(e.q == doctest::Approx(0.108));
  const PowerPair x = measure_power({0.98, 0.02}, {0.5, -0.1}, PowerMode::approximate);
  CHECK(x.p == doctest::Approx(0.49));
  CHECK(x.q == doctest::Approx(0.098));
}

TEST_CASE("exact dq power equals three-phase instantaneous power") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.5, 1.5), th(-kPi, kPi);
  for (int n = 0; n < 2000; ++n) {
    const double theta = th(rng);
    const DqPair v{u(rng), u(rng)}, i{u(rng), u(rng)};
    const AbcTriple va = from_dq(v, theta), ia = from_dq(i, theta);
    const double p3 = (2.0 / 3.0) * (va.a * ia.a + va.b * ia.b + va.c * ia.c);
    // Source-delivered reactive power from line-line voltages.
    const double q3 = (2.0 / (3.0 * std::sqrt(3.0))) *
                      ((va.b - va.c) * ia.a + (va.c - va.a) * ia.b + (va.a - va.b) * ia.c);
    const PowerPair s = measure_power(park(va, theta), park(ia, theta));
    CHECK(std::abs(s.p - p3) < 1e-10);
    CHECK(std::abs(s.q - q3) < 1e-10);
  }
}

TEST_CASE("a lagging current delivers positive reactive power") {
  // Current lagging voltage by 90 degrees: inductive load, source supplies Q.
  const double theta = 0.2;
  const AbcTriple v = balanced(1.0, theta), i = balanced(0.5, theta - kPi / 2.0);
  const PowerPair s = measure_power(park(v, theta), park(i, theta));
  CHECK(s.p == doctest::Approx(0.0));
  CHECK(s.q == doctest::Approx(0.5));
}

TEST_CASE("droop_update examples") {
  DroopParams d;
  d.p_ref = 0.3;
  d.q_ref = -0.1;
  const DroopOutput eq = droop_update({0.0, 0.0, 0.3, -0.1}, d);
  CHECK(eq.omega == doctest::Approx(d.omega_ref));
  CHECK(eq.v_mag == doctest::Approx(d.v_ref));

  DroopParams p;
  const DroopOutput loaded = droop_update({0.0, 0.0, 1.0, 0.0}, p);
  CHECK(loaded.omega == doctest::Approx(0.99 * p.omega_ref));
  CHECK(loaded.omega / (2.0 * kPi) == doctest::Approx(59.4));

  const DroopOutput absorbing = droop_update({0.0, 0.0, 0.0, -1.0}, p);
  CHECK(absorbing.v_mag == doctest::Approx(1.05));
}

TEST_CASE("droop raises frequency when power is below setpoint") {
  DroopParams d;
  d.p_ref = 0.5;
  CHECK(droop_update({0, 0, 0.2, 0}, d).omega > d.omega_ref);
  CHECK(droop_update({0, 0, 0.8, 0}, d).omega < d.omega_ref);
}

TEST_CASE("voltage_loop examples") {
  LoopGains g;
  g.feed_forward_f = 0.0;
  const ControllerState st = zeroed(g);

  const LoopResult a = voltage_loop({1.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}, st, g, 377.0, 0.0, 1e-4);
  CHECK(a.output.d == 0.0);
  CHECK(a.output.q == 0.0);
  CHECK(a.state.vd_pi.integ == 0.0);
  CHECK(a.state.vq_pi.integ == 0.0);

  LoopGains ff = g;
  ff.feed_forward_f = 1.0;
  const LoopResult b = voltage_loop({1.0, 0.0}, {1.0, 0.0}, {0.5, 0.0}, st, ff, 377.0, 0.0, 1e-4);
  CHECK(b.output.d == doctest::Approx(0.5));
  CHECK(b.output.q == doctest::Approx(0.0));

  const LoopResult c = voltage_loop({1.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}, st, g, 1.0, 0.15, 1e-4);
  CHECK(c.output.d == doctest::Approx(0.0));
  CHECK(c.output.q == doctest::Approx(0.15));

  CHECK_THROWS_AS(voltage_loop({1.0, 0.1}, {1.0, 0.0}, {}, st, g, 1.0, 0.1, 1e-4), ContractViolation);
}

TEST_CASE("current_loop examples") {
  const LoopGains g;
  const ControllerState st = zeroed(g);

  const LoopResult a = current_loop({0.3, 0.1}, {0.3, 0.1}, st, g, 1.0, 0.0, {0.0, 0.0}, 1e-4);
  CHECK(a.output.d == doctest::Approx(0.0));
  CHECK(a.output.q == doctest::Approx(0.0));

  const LoopResult b = current_loop({1.0, 0.0}, {1.0, 0.0}, st, g, 1.0, 0.15, {0.0, 0.0}, 1e-4);
  CHECK(b.output.d == doctest::Approx(0.0));
  CHECK(b.output.q == doctest::Approx(0.15));

  const LoopResult c = current_loop({0.0, 0.0}, {0.0, 0.0}, st, g, 1.0, 0.0, {1.0, 0.0}, 1e-4);
  CHECK(c.output.d == doctest::Approx(1.0));
  CHECK(c.output.q == doctest::Approx(0.0));
}

TEST_CASE("loop outputs respect their magnitude limits") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  const GfmParams p = default_params();
  ControllerState st = make_controller(p.droop, p.gains);
  for (int n = 0; n < 3000; ++n) {
    const auto vl = voltage_loop({1.0, 0.0}, {u(rng), u(rng)}, {u(rng), u(rng)}, st, p.gains, 377.0,
                                 p.filter.c_f, 1e-4);
    CHECK(vl.output.norm() <= p.gains.current_limit + 1e-12);
    const auto cl = current_loop(vl.output, {u(rng), u(rng)}, vl.state, p.gains, 377.0, p.filter.l_f,
                                 {u(rng), u(rng)}, 1e-4);
    CHECK(cl.output.norm() <= p.gains.voltage_limit + 1e-12);
    st = cl.state;
    CHECK(std::abs(st.vd_pi.ki * st.vd_pi.integ) <= st.vd_pi.limit + 1e-12);
    CHECK(std::abs(st.id_pi.ki * st.id_pi.integ) <= st.id_pi.limit + 1e-12);
  }
}

TEST_CASE("controller_step holds a setpoint equilibrium") {
  GfmParams p = default_params();
  p.droop.p_ref = 0.5;
  p.droop.q_ref = 0.0;
  ControllerState st = make_controller(p.droop, p.gains);
  st.theta = 0.4;
  st.p_lpf.y = 0.5;
  const double omega = p.droop.omega_ref;
  const DqPair v{p.droop.v_ref, 0.0}, i_o{0.5, 0.0};
  const DqPair i_l{p.gains.feed_forward_f * i_o.d, omega * p.filter.c_f * v.d};
  const double dt = 1e-4;

  const ControllerStepResult r =
      controller_step(st, from_dq(v, st.theta), from_dq(i_l, st.theta), from_dq(i_o, st.theta), p, dt);
  CHECK(std::abs(r.omega - omega) < 1e-9);
  CHECK(r.theta == st.theta);
  CHECK(r.state.theta == doctest::Approx(wrap_angle(st.theta + omega * dt)).epsilon(1e-12));
  CHECK(std::abs(r.state.p_lpf.y - st.p_lpf.y) < 1e-12);
  CHECK(std::abs(r.state.q_lpf.y - st.q_lpf.y) < 1e-12);
  CHECK(std::abs(r.state.vd_pi.integ) < 1e-12);
  CHECK(std::abs(r.state.vq_pi.integ) < 1e-12);
  CHECK(std::abs(r.state.id_pi.integ) < 1e-12);
  CHECK(std::abs(r.state.iq_pi.integ) < 1e-12);
  CHECK(r.v_mod.d == doctest::Approx(v.d - omega * p.filter.l_f * i_l.q));
  CHECK(r.v_mod.q == doctest::Approx(omega * p.filter.l_f * i_l.d));
}

TEST_CASE("controller_step is deterministic") {
  const GfmParams p = default_params();
  ControllerState st = make_controller(p.droop, p.gains);
  const AbcTriple v = balanced(0.97, 0.1), i = balanced(0.4, -0.2), o = balanced(0.35, -0.1);
  const ControllerStepResult a = controller_step(st, v, i, o, p, 1e-4);
  const ControllerStepResult b = controller_step(st, v, i, o, p, 1e-4);
  CHECK(a.v_mod == b.v_mod);
  CHECK(a.state.theta == b.state.theta);
  CHECK(a.state.p_lpf == b.state.p_lpf);
  CHECK(a.state.vd_pi == b.state.vd_pi);
  CHECK(a.state.iq_pi == b.state.iq_pi);
}

TEST_CASE("measured power relaxes through the LPF at omega_p") {
  GfmParams p = default_params();
  ControllerState st = make_controller(p.droop, p.gains);
  const DqPair v{1.0, 0.0}, i{0.6, 0.0};
  const double dt = 1e-4, tau = 1.0 / p.droop.omega_p;
  const int n = static_cast<int>(std::lround(tau / dt));
  for (int k = 0; k < n; ++k) {
    const auto r = controller_step(st, from_dq(v, st.theta), from_dq(i, st.theta), from_dq(i, st.theta), p, dt);
    st = r.state;
  }
  CHECK(st.p_lpf.y == doctest::Approx(0.6 * (1.0 - std::exp(-dt * n / tau))).epsilon(1e-9));
}

TEST_CASE("continuous evaluation matches the sampled laws") {
  GfmParams p = default_params();
  p.droop.p_ref = 0.2;
  ControllerState st = make_controller(p.droop, p.gains);
  st.p_lpf.y = 0.25;
  st.q_lpf.y = 0.05;
  st.vd_pi.integ = 0.01;
  st.id_pi.integ = -0.002;
  const DqPair v{0.99, 0.01}, i_l{0.3, -0.05}, i_o{0.28, 0.02};
  const ControllerEval ev = controller_evaluate(st, v, i_l, i_o, p);

  const DroopOutput d = droop_update({0, 0, 0.25, 0.05}, p.droop);
  CHECK(ev.omega == doctest::Approx(d.omega));
  CHECK(ev.v_mag == doctest::Approx(d.v_mag));
  const PowerPair raw = measure_power(v, i_o);
  CHECK(ev.rates.p_filt == doctest::Approx(p.droop.omega_p * (raw.p - 0.25)));
  CHECK(ev.rates.q_filt == doctest::Approx(p.droop.omega_q * (raw.q - 0.05)));
  CHECK(ev.rates.v_integ.d == doctest::Approx(d.v_mag - v.d));
  CHECK(ev.rates.v_integ.q == doctest::Approx(-v.q));

  const DqPair i_ref{p.gains.k_pv * (d.v_mag - v.d) + p.gains.k_iv * 0.01 - d.omega * p.filter.c_f * v.q +
                         p.gains.feed_forward_f * i_o.d,
                     p.gains.k_pv * (-v.q) + d.omega * p.filter.c_f * v.d + p.gains.feed_forward_f * i_o.q};
  CHECK(ev.i_ref.d == doctest::Approx(i_ref.d));
  CHECK(ev.i_ref.q == doctest::Approx(i_ref.q));
  const DqPair e = i_ref - i_l;
  CHECK(ev.v_mod.d ==
        doctest::Approx(p.gains.k_pi * e.d + p.gains.k_ii * -0.002 - d.omega * p.filter.l_f * i_l.q + v.d));
  CHECK(ev.v_mod.q == doctest::Approx(p.gains.k_pi * e.q + d.omega * p.filter.l_f * i_l.d + v.q));
}

TEST_CASE("parameter validation") {
  GfmParams p = default_params();
  CHECK_NOTHROW(validate(p));
  p.droop.k_p = 0.0;
  CHECK_THROWS_AS(validate(p), std::domain_error);
  p = default_params();
  p.gains.feed_forward_f = 1.5;
  CHECK_THROWS_AS(validate(p), std::domain_error);
  p = default_params();
  p.droop.v_ref = 1.3;
  CHECK_THROWS_AS(validate(p), std::domain_error);
  p = default_params();
  p.filter.c_f = 0.0;
  CHECK_THROWS_AS(validate(p), std::domain_error);
}
