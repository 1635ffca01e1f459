#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "gfmdc/signal.hpp"

using namespace gfmdc;

namespace {

constexpr double kPi = std::numbers::pi;

AbcTriple balanced(double amplitude, double phase_a) {
  return {amplitude * std::cos(phase_a), amplitude * std::cos(phase_a - 2.0 * kPi / 3.0),
          amplitude * std::cos(phase_a + 2.0 * kPi / 3.0)};
}

}  // namespace

TEST_CASE("park examples") {
  const DqPair aligned = park(balanced(1.0, 0.3), 0.3);
  CHECK(aligned.d == doctest::Approx(1.0));
  CHECK(aligned.q == doctest::Approx(0.0));

  const DqPair zero = park({0.0, 0.0, 0.0}, 1.234);
  CHECK(zero.d == 0.0);
  CHECK(zero.q == 0.0);

  // Frame lagging the phase-a vector by a quarter turn sees it on +q.
  const DqPair lag = park(balanced(1.0, 0.3), 0.3 - kPi / 2.0);
  CHECK(lag.d == doctest::Approx(0.0));
  CHECK(lag.q == doctest::Approx(1.0));
}

TEST_CASE("park is amplitude invariant") {
  const DqPair dq = park(balanced(0.8, -2.0), -2.0);
  CHECK(dq.norm() == doctest::Approx(0.8));
}

TEST_CASE("inverse park examples") {
  const AbcTriple abc = inverse_park({1.0, 0.0}, 0.0);
  CHECK(abc.a == doctest::Approx(1.0));
  CHECK(abc.b == doctest::Approx(-0.5));
  CHECK(abc.c == doctest::Approx(-0.5));
  const AbcTriple z = inverse_park({0.0, 0.0}, 2.0);
  CHECK(z.a == 0.0);
  CHECK(z.b == 0.0);
  CHECK(z.c == 0.0);
}

TEST_CASE("park round trip") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0), th(-10.0, 10.0);
  for (int n = 0; n < 1000; ++n) {
    const DqPair dq{u(rng), u(rng)};
    const double theta = th(rng);
    const DqPair back = park(inverse_park(dq, theta), theta);
    CHECK(std::abs(back.d - dq.d) < 1e-12);
    CHECK(std::abs(back.q - dq.q) < 1e-12);
  }
}

TEST_CASE("rotate moves a vector between frames") {
  const DqPair x = rotate({1.0, 0.0}, kPi / 2.0);
  CHECK(x.d == doctest::Approx(0.0));
  CHECK(x.q == doctest::Approx(1.0));
  // A vector seen in a frame at angle a equals the same vector seen at 0, rotated by a.
  const AbcTriple abc = balanced(0.9, 0.7);
  const DqPair in_frame = park(abc, 0.4);
  const DqPair at_zero = park(abc, 0.0);
  const DqPair r = rotate(in_frame, 0.4);
  CHECK(r.d == doctest::Approx(at_zero.d));
  CHECK(r.q == doctest::Approx(at_zero.q));
}

TEST_CASE("advance_angle examples") {
  CHECK(std::abs(advance_angle(0.0, 2.0 * kPi, 1.0)) < 1e-15);
  CHECK(advance_angle(kPi - 0.1, 0.2, 1.0) == doctest::Approx(-kPi + 0.1));
  CHECK(advance_angle(0.0, 0.0, 1e-4) == 0.0);
  CHECK_THROWS_AS(advance_angle(0.0, 1.0, 0.0), std::domain_error);
}

TEST_CASE("wrapped angles stay in (-pi, pi]") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int n = 0; n < 2000; ++n) {
    const double w = advance_angle(u(rng), u(rng), 0.37);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
  }
}

TEST_CASE("lpf examples") {
  CHECK(lpf_step({0.0, 10.0}, 0.0, 1e-3).y == 0.0);
  CHECK(lpf_step({1.0, 10.0}, 1.0, 0.5).y == 1.0);
  CHECK(lpf_step({1.0, 10.0}, 1.0, 1e-3, LpfMode::forward_euler).y == 1.0);

  // Step response evaluated at one time constant against 1 - e^-1.
  const double wc = 31.4;
  const int n = 1000;
  LpfState s{0.0, wc};
  for (int k = 0; k < n; ++k) s = lpf_step(s, 1.0, 1.0 / wc / n);
  CHECK(s.y == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(s.y == doctest::Approx(0.63212).epsilon(1e-5));
}

TEST_CASE("lpf forward euler approaches the exact discretization") {
  const double wc = 10.0, t_end = 0.1;
  LpfState e{0.0, wc};
  const int n = 10'000;
  for (int k = 0; k < n; ++k) e = lpf_step(e, 1.0, t_end / n, LpfMode::forward_euler);
  CHECK(e.y == doctest::Approx(1.0 - std::exp(-wc * t_end)).epsilon(1e-4));
  CHECK_THROWS_AS(lpf_step({0.0, 10.0}, 1.0, 0.2, LpfMode::forward_euler), std::domain_error);
}

TEST_CASE("lpf dc gain is one") {
  const double wc = 5.0, u = 0.73;
  LpfState s{0.0, wc};
  const double dt = 1e-3;
  for (int k = 0; k < static_cast<int>(10.0 / wc / dt) + 1; ++k) s = lpf_step(s, u, dt);
  CHECK(std::abs(s.y - u) <= std::exp(-10.0) * u);
  CHECK(lpf_step({0.0, 1.0}, 2.0, 1e6).y == doctest::Approx(2.0));
}

TEST_CASE("pi examples") {
  const PiStepResult p = pi_step({1.0, 0.0, 0.0, 1.0}, 0.5, 1e-3);
  CHECK(p.output == doctest::Approx(0.5));
  CHECK_FALSE(p.saturated);

  for (double dt : {0.1, 0.01, 1e-3}) {
    PiState s{0.0, 1.0, 0.0, 10.0};
    double out = 0.0;
    const int n = static_cast<int>(std::lround(1.0 / dt));
    for (int k = 0; k < n; ++k) {
      const PiStepResult r = pi_step(s, 1.0, dt);
      s = r.state;
      out = r.output;
    }
    CHECK(std::abs(out - 1.0) <= dt + 1e-12);
  }

  const PiStepResult sat = pi_step({2.0, 0.0, 0.0, 0.8}, 0.8, 1e-3);
  CHECK(sat.output == doctest::Approx(0.8));
  CHECK(sat.saturated);
  const PiStepResult neg = pi_step({2.0, 0.0, 0.0, 0.8}, -0.8, 1e-3);
  CHECK(neg.output == doctest::Approx(-0.8));
}

TEST_CASE("pi anti-windup bounds output and integrator") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> e(-5.0, 5.0);
  PiState s{0.5, 20.0, 0.0, 1.2};
  for (int k = 0; k < 5000; ++k) {
    const PiStepResult r = pi_step(s, e(rng), 1e-3);
    CHECK(std::abs(r.output) <= s.limit);
    CHECK(std::abs(r.state.ki * r.state.integ) <= s.limit + 1e-12);
    s = r.state;
  }
}

TEST_CASE("pi recovers from saturation without integrator overshoot") {
  PiState s{0.0, 50.0, 0.0, 1.0};
  for (int k = 0; k < 1000; ++k) s = pi_step(s, 1.0, 1e-3).state;
  CHECK(s.ki * s.integ == doctest::Approx(1.0));
  const PiStepResult back = pi_step(s, -0.1, 1e-3);
  CHECK(back.output < 1.0);
  CHECK_FALSE(back.saturated);
}

TEST_CASE("winds_up and clamps") {
  CHECK(winds_up(1.5, 1.0, 0.1));
  CHECK_FALSE(winds_up(1.5, 1.0, -0.1));
  CHECK(winds_up(-1.0, 1.0, -0.1));
  CHECK_FALSE(winds_up(0.5, 1.0, 0.1));
  CHECK(clamp_symmetric(3.0, 2.0) == 2.0);
  CHECK(clamp_symmetric(-3.0, 2.0) == -2.0);
  CHECK(clamp_integrator({1.0, 4.0, 0.0, 2.0}, 1.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(validate(PiState{-1.0, 0.0, 0.0, 1.0}), std::domain_error);
  CHECK_THROWS_AS(validate(PiState{1.0, 0.0, 0.0, 0.0}), std::domain_error);
}
