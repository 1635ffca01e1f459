#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

#include "gfmdc/pu_base.hpp"
#include "gfmdc/signal.hpp"

namespace gfmdc {

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class PowerMode { exact, approximate };

struct PowerPair {
  double p = 0.0;
  double q = 0.0;
};

/// Instantaneous dq power in per unit (amplitude-invariant frame, so no 3/2
/// factor). Positive q means reactive power delivered by the source.
PowerPair measure_power(const DqPair& v, const DqPair& i, PowerMode mode = PowerMode::exact);

/// P-f and Q-V droop settings. k_p is per unit of omega_ref per unit power;
/// omega rises when measured P falls below p_ref.
struct DroopParams {
  double k_p = 0.01;
  double k_q = 0.05;
  double omega_p = 31.4;  // rad/s
  double omega_q = 31.4;  // rad/s
  double p_ref = 0.0;
  double q_ref = 0.0;
  double v_ref = 1.0;
  double omega_ref = 2.0 * std::numbers::pi * 60.0;  // rad/s
};

void validate(const DroopParams& droop);

struct LoopGains {
  double k_pv = 4.0;
  double k_iv = 25.0;
  double k_pi = 1.0;
  double k_ii = 100.0;
  double feed_forward_f = 0.75;
  double current_limit = 1.2;  // pu, magnitude of the current reference
  double voltage_limit = 1.5;  // pu, magnitude of the modulation voltage
};

void validate(const LoopGains& gains);

struct PowerMeasurement {
  double p_raw = 0.0;
  double q_raw = 0.0;
  double p_filt = 0.0;
  double q_filt = 0.0;
};

struct DroopOutput {
  double omega = 0.0;  // rad/s
  double v_mag = 0.0;  // pu
};

DroopOutput droop_update(const PowerMeasurement& pm, const DroopParams& droop);

struct LoopRefs {
  DqPair i_ref;
  DqPair v_mod;
};

struct ControllerState {
  double theta = 0.0;
  LpfState p_lpf;
  LpfState q_lpf;
  PiState vd_pi;
  PiState vq_pi;
  PiState id_pi;
  PiState iq_pi;
  LoopRefs last_refs;
};

/// Zero integrators, zero filtered powers, theta = 0.
ControllerState make_controller(const DroopParams& droop, const LoopGains& gains);

struct GfmParams {
  DroopParams droop;
  LoopGains gains;
  PlantFilter filter;
  PowerMode power_mode = PowerMode::exact;
  LpfMode lpf_mode = LpfMode::exponential;
};

void validate(const GfmParams& params);

struct LoopResult {
  DqPair output;
  ControllerState state;
};

/// Outer voltage loop: returns the inductor-current reference (i_d*, i_q*).
/// v_ref.q must be zero.
LoopResult voltage_loop(const DqPair& v_ref, const DqPair& v_meas, const DqPair& i_out,
                        const ControllerState& st, const LoopGains& g, double omega,
                        double c_f_pu, double dt);

/// Inner current loop: returns the modulation voltage (v_rd*, v_rq*).
LoopResult current_loop(const DqPair& i_ref, const DqPair& i_meas, const ControllerState& st,
                        const LoopGains& g, double omega, double l_f_pu, const DqPair& v_meas,
                        double dt);

struct ControllerStepResult {
  ControllerState state;
  DqPair v_mod;         // in the frame at `theta`
  double theta = 0.0;   // frame angle the dq quantities were expressed in
  double omega = 0.0;   // rad/s, frame speed over the step
  PowerMeasurement power;
};

/// Sampled-data controller: park -> power -> LPFs -> droop -> angle ->
/// voltage loop -> current loop, all advanced by dt.
ControllerStepResult controller_step(const ControllerState& st, const AbcTriple& v_meas_abc,
                                     const AbcTriple& i_meas_abc, const AbcTriple& i_out_abc,
                                     const GfmParams& params, double dt);

// Continuous-time form of the same controller for integration alongside the
// plant. The state is read from the LPF outputs and PI integrators of `st`.
struct ControllerRates {
  double p_filt = 0.0;
  double q_filt = 0.0;
  DqPair v_integ;
  DqPair i_integ;
};

struct ControllerEval {
  DqPair v_mod;
  DqPair i_ref;
  double omega = 0.0;
  double v_mag = 0.0;
  PowerPair raw;
  ControllerRates rates;
};

ControllerEval controller_evaluate(const ControllerState& st, const DqPair& v_meas,
                                   const DqPair& i_meas, const DqPair& i_out,
                                   const GfmParams& params);

}  // namespace gfmdc
