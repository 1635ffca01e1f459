#include "gfmdc/signal.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace gfmdc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kThird = kTwoPi / 3.0;

}  // namespace

DqPair park(const AbcTriple& abc, double theta) {
  const double ca = std::cos(theta), cb = std::cos(theta - kThird), cc = std::cos(theta + kThird);
  const double sa = std::sin(theta), sb = std::sin(theta - kThird), sc = std::sin(theta + kThird);
  return {(2.0 / 3.0) * (abc.a * ca + abc.b * cb + abc.c * cc),
          -(2.0 / 3.0) * (abc.a * sa + abc.b * sb + abc.c * sc)};
}

AbcTriple inverse_park(const DqPair& dq, double theta) {
  auto phase = [&](double shift) {
    return dq.d * std::cos(theta + shift) - dq.q * std::sin(theta + shift);
  };
  return {phase(0.0), phase(-kThird), phase(kThird)};
}

DqPair rotate(const DqPair& x, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {x.d * c - x.q * s, x.d * s + x.q * c};
}

double wrap_angle(double theta) {
  double r = std::remainder(theta, kTwoPi);  // [-pi, pi]
  if (r <= -std::numbers::pi) r += kTwoPi;
  return r;
}

double advance_angle(double theta, double omega, double dt) {
  if (!(dt > 0.0)) throw std::domain_error("advance_angle: dt must be positive");
  return wrap_angle(theta + omega * dt);
}

LpfState lpf_step(const LpfState& state, double u, double dt, LpfMode mode) {
  if (!(dt > 0.0)) throw std::domain_error("lpf_step: dt must be positive");
  if (!(state.omega_c > 0.0)) throw std::domain_error("lpf_step: cutoff must be positive");
  LpfState next = state;
  if (mode == LpfMode::exponential) {
    next.y = u + (state.y - u) * std::exp(-state.omega_c * dt);
  } else {
    if (state.omega_c * dt >= 2.0)
      throw std::domain_error("lpf_step: forward Euler unstable for dt*omega_c >= 2");
    next.y = state.y + state.omega_c * dt * (u - state.y);
  }
  return next;
}

void validate(const PiState& pi) {
  if (!(pi.kp >= 0.0) || !(pi.ki >= 0.0))
    throw std::domain_error("PI: gains must be non-negative");
  if (!(pi.limit > 0.0)) throw std::domain_error("PI: limit must be positive");
}

double pi_unclamped(const PiState& pi, double error) { return pi.kp * error + pi.ki * pi.integ; }

double clamp_symmetric(double x, double limit) { return std::clamp(x, -limit, limit); }

double clamp_integrator(const PiState& pi, double integ) {
  if (pi.ki <= 0.0) return integ;
  const double bound = pi.limit / pi.ki;
  return std::clamp(integ, -bound, bound);
}

bool winds_up(double output_unclamped, double limit, double error) {
  return std::abs(output_unclamped) >= limit && output_unclamped * error > 0.0;
}

PiStepResult pi_step(const PiState& state, double error, double dt) {
  if (!(dt > 0.0)) throw std::domain_error("pi_step: dt must be positive");
  PiState next = state;
  next.integ = clamp_integrator(state, state.integ + error * dt);
  double raw = pi_unclamped(next, error);
  if (winds_up(raw, state.limit, error)) {
    // Integrate only up to the point where the output reaches its bound.
    const double held = pi_unclamped(state, error);
    if (state.ki > 0.0 && std::abs(held) < state.limit) {
      const double edge = std::copysign(state.limit, error);
      next.integ = clamp_integrator(state, (edge - state.kp * error) / state.ki);
    } else {
      next.integ = state.integ;
    }
    raw = pi_unclamped(next, error);
  }
  PiStepResult out;
  out.state = next;
  out.output = clamp_symmetric(raw, state.limit);
  out.saturated = std::abs(raw) > state.limit;
  return out;
}

}  // namespace gfmdc
