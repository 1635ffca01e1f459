#pragma once

#include <cmath>

namespace gfmdc {

struct AbcTriple {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

struct DqPair {
  double d = 0.0;
  double q = 0.0;

  double norm() const { return std::hypot(d, q); }

  friend DqPair operator+(DqPair x, DqPair y) { return {x.d + y.d, x.q + y.q}; }
  friend DqPair operator-(DqPair x, DqPair y) { return {x.d - y.d, x.q - y.q}; }
  friend DqPair operator*(double k, DqPair x) { return {k * x.d, k * x.q}; }
  friend bool operator==(const DqPair&, const DqPair&) = default;
};

/// Amplitude-invariant Park transform. A balanced set of peak amplitude A
/// whose phase-a angle equals theta maps to (A, 0); q leads d by 90 degrees.
DqPair park(const AbcTriple& abc, double theta);
AbcTriple inverse_park(const DqPair& dq, double theta);

/// Rotates a dq vector by +angle (expresses a vector given in a frame at
/// angle `angle` in a frame at angle 0).
DqPair rotate(const DqPair& x, double angle);

/// Wraps to (-pi, pi].
double wrap_angle(double theta);

double advance_angle(double theta, double omega, double dt);

enum class LpfMode { exponential, forward_euler };

struct LpfState {
  double y = 0.0;
  double omega_c = 1.0;  // rad/s

  friend bool operator==(const LpfState&, const LpfState&) = default;
};

/// One step of y' = omega_c (u - y). Exponential mode is the exact
/// zero-order-hold discretization; Euler mode requires dt*omega_c < 2.
LpfState lpf_step(const LpfState& state, double u, double dt,
                  LpfMode mode = LpfMode::exponential);

// PI controller with a symmetric output clamp and conditional-integration
// anti-windup: the integrator holds whenever the output is saturated and the
// error pushes further into saturation. |ki * integ| never exceeds limit.
struct PiState {
  double kp = 0.0;
  double ki = 0.0;
  double integ = 0.0;
  double limit = 1.0;

  friend bool operator==(const PiState&, const PiState&) = default;
};

struct PiStepResult {
  PiState state;
  double output = 0.0;
  bool saturated = false;
};

void validate(const PiState& pi);

double pi_unclamped(const PiState& pi, double error);
double clamp_symmetric(double x, double limit);

/// Bounds the integrator so that |ki * integ| <= limit.
double clamp_integrator(const PiState& pi, double integ);

/// True when integration of `error` would push an output that is already
/// at (or beyond) its bound further out.
bool winds_up(double output_unclamped, double limit, double error);

PiStepResult pi_step(const PiState& state, double error, double dt);

}  // namespace gfmdc
