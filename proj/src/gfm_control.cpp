#include "gfmdc/gfm_control.hpp"

#include <cmath>

namespace gfmdc {

PowerPair measure_power(const DqPair& v, const DqPair& i, PowerMode mode) {
  if (mode == PowerMode::approximate) return {v.d * i.d, -v.d * i.q};
  return {v.d * i.d + v.q * i.q, -v.d * i.q + v.q * i.d};
}

void validate(const DroopParams& droop) {
  if (!(droop.k_p > 0.0)) throw std::domain_error("droop: k_p must be positive");
  if (!(droop.k_q >= 0.0)) throw std::domain_error("droop: k_q must be non-negative");
  if (!(droop.omega_p > 0.0) || !(droop.omega_q > 0.0))
    throw std::domain_error("droop: LPF cutoffs must be positive");
  if (!(droop.v_ref >= 0.9 && droop.v_ref <= 1.1))
    throw std::domain_error("droop: v_ref must lie in [0.9, 1.1] pu");
  if (!(droop.omega_ref > 0.0)) throw std::domain_error("droop: omega_ref must be positive");
  if (!std::isfinite(droop.p_ref) || !std::isfinite(droop.q_ref))
    throw std::domain_error("droop: setpoints must be finite");
}

void validate(const LoopGains& g) {
  if (!(g.k_pv >= 0.0 && g.k_iv >= 0.0 && g.k_pi >= 0.0 && g.k_ii >= 0.0))
    throw std::domain_error("loop gains must be non-negative");
  if (!(g.feed_forward_f >= 0.0 && g.feed_forward_f <= 1.0))
    throw std::domain_error("feed-forward gain F must lie in [0, 1]");
  if (!(g.current_limit > 0.0) || !(g.voltage_limit > 0.0))
    throw std::domain_error("loop limits must be positive");
}

void validate(const GfmParams& params) {
  validate(params.droop);
  validate(params.gains);
  if (!(params.filter.l_f > 0.0 && params.filter.c_f > 0.0 && params.filter.l_g > 0.0))
    throw std::domain_error("plant filter values must be positive");
}

DroopOutput droop_update(const PowerMeasurement& pm, const DroopParams& droop) {
  return {droop.omega_ref * (1.0 + droop.k_p * (droop.p_ref - pm.p_filt)),
          droop.v_ref + droop.k_q * (droop.q_ref - pm.q_filt)};
}

ControllerState make_controller(const DroopParams& droop, const LoopGains& g) {
  ControllerState st;
  st.p_lpf = LpfState{0.0, droop.omega_p};
  st.q_lpf = LpfState{0.0, droop.omega_q};
  st.vd_pi = PiState{g.k_pv, g.k_iv, 0.0, g.current_limit};
  st.vq_pi = st.vd_pi;
  st.id_pi = PiState{g.k_pi, g.k_ii, 0.0, g.voltage_limit};
  st.iq_pi = st.id_pi;
  return st;
}

namespace {

// Two PI channels plus an additive term, with the sum limited in magnitude.
struct ChannelLaw {
  DqPair output;
  bool hold_d = false;
  bool hold_q = false;
};

DqPair limit_magnitude(const DqPair& x, double limit) {
  const double m = x.norm();
  if (m <= limit) return x;
  return (limit / m) * x;
}

ChannelLaw evaluate_channels(const PiState& pd, const PiState& pq, const DqPair& error,
                             const DqPair& additive, double limit) {
  const double raw_d = pi_unclamped(pd, error.d);
  const double raw_q = pi_unclamped(pq, error.q);
  const DqPair total{clamp_symmetric(raw_d, pd.limit) + additive.d,
                     clamp_symmetric(raw_q, pq.limit) + additive.q};
  const bool total_sat = total.norm() > limit;

  ChannelLaw law;
  law.output = limit_magnitude(total, limit);
  law.hold_d = winds_up(raw_d, pd.limit, error.d) || (total_sat && total.d * error.d > 0.0);
  law.hold_q = winds_up(raw_q, pq.limit, error.q) || (total_sat && total.q * error.q > 0.0);
  return law;
}

// Discrete update: integrate, then undo integration on channels that wind up.
ChannelLaw step_channels(PiState& pd, PiState& pq, const DqPair& error, const DqPair& additive,
                         double limit, double dt) {
  const PiState old_d = pd, old_q = pq;
  pd.integ = clamp_integrator(pd, pd.integ + error.d * dt);
  pq.integ = clamp_integrator(pq, pq.integ + error.q * dt);
  ChannelLaw law = evaluate_channels(pd, pq, error, additive, limit);
  if (law.hold_d || law.hold_q) {
    if (law.hold_d) pd.integ = old_d.integ;
    if (law.hold_q) pq.integ = old_q.integ;
    law = evaluate_channels(pd, pq, error, additive, limit);
  }
  return law;
}

double integrator_rate(const PiState& pi, double error, bool hold) {
  if (hold) return 0.0;
  if (pi.ki > 0.0 && std::abs(pi.ki * pi.integ) >= pi.limit && pi.integ * error > 0.0) return 0.0;
  return error;
}

DqPair voltage_additive(const DqPair& v_meas, const DqPair& i_out, double omega_c,
                        double feed_forward) {
  return {-omega_c * v_meas.q + feed_forward * i_out.d, omega_c * v_meas.d + feed_forward * i_out.q};
}

DqPair current_additive(const DqPair& i_meas, const DqPair& v_meas, double omega_l) {
  return {-omega_l * i_meas.q + v_meas.d, omega_l * i_meas.d + v_meas.q};
}

}  // namespace

LoopResult voltage_loop(const DqPair& v_ref, const DqPair& v_meas, const DqPair& i_out,
                        const ControllerState& st, const LoopGains& g, double omega,
                        double c_f_pu, double dt) {
  if (v_ref.q != 0.0) throw ContractViolation("voltage_loop: v_ref.q must be zero");
  if (!(dt > 0.0)) throw std::domain_error("voltage_loop: dt must be positive");
  LoopResult r{{}, st};
  const DqPair error{v_ref.d - v_meas.d, -v_meas.q};
  const auto law = step_channels(r.state.vd_pi, r.state.vq_pi, error,
                                 voltage_additive(v_meas, i_out, omega * c_f_pu, g.feed_forward_f),
                                 g.current_limit, dt);
  r.output = law.output;
  r.state.last_refs.i_ref = law.output;
  return r;
}

LoopResult current_loop(const DqPair& i_ref, const DqPair& i_meas, const ControllerState& st,
                        const LoopGains& g, double omega, double l_f_pu, const DqPair& v_meas,
                        double dt) {
  if (!(dt > 0.0)) throw std::domain_error("current_loop: dt must be positive");
  LoopResult r{{}, st};
  const auto law = step_channels(r.state.id_pi, r.state.iq_pi, i_ref - i_meas,
                                 current_additive(i_meas, v_meas, omega * l_f_pu),
                                 g.voltage_limit, dt);
  r.output = law.output;
  r.state.last_refs.v_mod = law.output;
  return r;
}

ControllerStepResult controller_step(const ControllerState& st, const AbcTriple& v_meas_abc,
                                     const AbcTriple& i_meas_abc, const AbcTriple& i_out_abc,
                                     const GfmParams& params, double dt) {
  if (!(dt > 0.0)) throw std::domain_error("controller_step: dt must be positive");
  const DqPair v = park(v_meas_abc, st.theta);
  const DqPair i_l = park(i_meas_abc, st.theta);
  const DqPair i_o = park(i_out_abc, st.theta);

  ControllerStepResult out;
  out.theta = st.theta;
  ControllerState next = st;

  const PowerPair raw = measure_power(v, i_o, params.power_mode);
  next.p_lpf = lpf_step(st.p_lpf, raw.p, dt, params.lpf_mode);
  next.q_lpf = lpf_step(st.q_lpf, raw.q, dt, params.lpf_mode);
  out.power = {raw.p, raw.q, next.p_lpf.y, next.q_lpf.y};

  const DroopOutput droop = droop_update(out.power, params.droop);
  out.omega = droop.omega;
  next.theta = advance_angle(st.theta, droop.omega, dt);

  const auto vl = voltage_loop({droop.v_mag, 0.0}, v, i_o, next, params.gains, droop.omega,
                               params.filter.c_f, dt);
  const auto cl = current_loop(vl.output, i_l, vl.state, params.gains, droop.omega,
                               params.filter.l_f, v, dt);
  out.state = cl.state;
  out.v_mod = cl.output;
  return out;
}

ControllerEval controller_evaluate(const ControllerState& st, const DqPair& v_meas,
                                   const DqPair& i_meas, const DqPair& i_out,
                                   const GfmParams& params) {
  ControllerEval ev;
  ev.raw = measure_power(v_meas, i_out, params.power_mode);
  const PowerMeasurement pm{ev.raw.p, ev.raw.q, st.p_lpf.y, st.q_lpf.y};
  const DroopOutput droop = droop_update(pm, params.droop);
  ev.omega = droop.omega;
  ev.v_mag = droop.v_mag;

  const LoopGains& g = params.gains;
  const DqPair v_err{droop.v_mag - v_meas.d, -v_meas.q};
  const auto vl = evaluate_channels(
      st.vd_pi, st.vq_pi, v_err,
      voltage_additive(v_meas, i_out, droop.omega * params.filter.c_f, g.feed_forward_f),
      g.current_limit);
  ev.i_ref = vl.output;

  const DqPair i_err = ev.i_ref - i_meas;
  const auto cl = evaluate_channels(st.id_pi, st.iq_pi, i_err,
                                    current_additive(i_meas, v_meas, droop.omega * params.filter.l_f),
                                    g.voltage_limit);
  ev.v_mod = cl.output;

  ev.rates.p_filt = st.p_lpf.omega_c * (ev.raw.p - st.p_lpf.y);
  ev.rates.q_filt = st.q_lpf.omega_c * (ev.raw.q - st.q_lpf.y);
  ev.rates.v_integ = {integrator_rate(st.vd_pi, v_err.d, vl.hold_d),
                      integrator_rate(st.vq_pi, v_err.q, vl.hold_q)};
  ev.rates.i_integ = {integrator_rate(st.id_pi, i_err.d, cl.hold_d),
                      integrator_rate(st.iq_pi, i_err.q, cl.hold_q)};
  return ev;
}

}  // namespace gfmdc
