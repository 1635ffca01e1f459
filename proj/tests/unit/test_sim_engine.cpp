#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gfmdc/sim_engine.hpp"

using namespace gfmdc;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const PerUnitBase kUnitBase{13'800.0, 5.0e6, 60.0};

ScenarioConfig grid_only(double duration) {
  ScenarioConfig c;
  c.duration = duration;
  c.load.demand = SampledTrace({{0.0, 0.0}});
  return c;
}

ScenarioConfig single_unit(double load_mw, double duration) {
  ScenarioConfig c;
  c.system_base = kUnitBase;
  c.units = {make_unit(kUnitBase)};
  c.load.demand = SampledTrace({{0.0, load_mw}});
  c.duration = duration;
  return c;
}

std::string thrown_message(const ScenarioConfig& c) {
  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return {};
}

bool same_prefix(const SimTrace& a, const SimTrace& b, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    if (a.t[k] != b.t[k] || a.v_pcc[k] != b.v_pcc[k] || a.f_hz[k] != b.f_hz[k] ||
        a.p_grid_mw[k] != b.p_grid_mw[k] || a.p_load_mw[k] != b.p_load_mw[k])
      return false;
    for (std::size_t u = 0; u < a.unit_count(); ++u)
      if (a.p_unit_mw[u][k] != b.p_unit_mw[u][k] || a.q_unit_mvar[u][k] != b.q_unit_mvar[u][k])
        return false;
  }
  return true;
}

}  // namespace

TEST_CASE("quiescent grid-only run") {
  const SimResult r = run(grid_only(1.0));
  REQUIRE(r.ok());
  REQUIRE(r.trace.size() > 0);
  CHECK(r.trace.unit_count() == 0);
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    CHECK(r.trace.v_pcc[k] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.trace.f_hz[k] == doctest::Approx(60.0).epsilon(1e-12));
    CHECK(r.trace.p_grid_mw[k] == doctest::Approx(0.0));
  }
}

TEST_CASE("trace sampling follows the decimation") {
  ScenarioConfig c = grid_only(0.1);
  c.decimation = 5;
  const SimResult r = run(c);
  REQUIRE(r.trace.size() >= 2);
  CHECK(r.trace.t[0] == 0.0);
  CHECK(r.trace.t[1] == doctest::Approx(5.0 * c.dt));
  CHECK(r.trace.t.back() <= c.duration + 1e-12);
  CHECK(r.metrics.steps == std::llround(c.duration / c.dt));
}

TEST_CASE("flat start is an equilibrium") {
  ScenarioConfig c = single_unit(2.0, 0.3);
  const SimResult r = run(c);
  REQUIRE(r.ok());
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    CHECK(r.trace.v_pcc[k] == doctest::Approx(r.trace.v_pcc[0]).epsilon(1e-8));
    CHECK(r.trace.f_hz[k] == doctest::Approx(60.0).epsilon(1e-9));
    CHECK(r.trace.p_load_mw[k] == doctest::Approx(2.0).epsilon(1e-8));
  }
}

TEST_CASE("islanded droop fixed point") {
  ScenarioConfig c = single_unit(2.5, 2.0);
  c.dispatch = {DispatchMode::fixed, 1.0};
  c.events.breaker = BreakerSpec{0.1, true};
  const SimResult r = run(c);
  REQUIRE(r.ok());
  const DroopParams& d = c.units[0].droop;
  const double f_star = d.omega_ref * (1.0 + d.k_p * (d.p_ref - 0.5)) / kTwoPi;
  CHECK(f_star == doctest::Approx(59.7));
  CHECK(r.trace.f_hz.back() == doctest::Approx(f_star).epsilon(1e-4 / 60.0));
  CHECK(r.trace.p_unit_mw[0].back() == doctest::Approx(2.5).epsilon(1e-3));
}

TEST_CASE("p_ref steps barely disturb reactive power") {
  auto steady_q = [](double load_mw) {
    ScenarioConfig c = single_unit(load_mw, 1.0);
    c.grid.rating_va = 1e12;
    const SimResult r = run(c);
    REQUIRE(r.ok());
    return std::pair{r.trace.p_unit_mw[0].back() / 5.0, r.trace.q_unit_mvar[0].back() / 5.0};
  };
  const auto [p0, q0] = steady_q(1.0);
  const auto [p1, q1] = steady_q(2.0);
  CHECK(std::abs(p1 - p0) == doctest::Approx(0.2).epsilon(1e-3));
  CHECK(std::abs(q1 - q0) < 0.05 * std::abs(p1 - p0));
}

TEST_CASE("commanded power is tracked") {
  ScenarioConfig c = single_unit(1.0, 1.0);
  c.load.demand = SampledTrace({{0.0, 1.0}, {0.3, 1.0}, {0.3001, 3.0}});
  const SimResult r = run(c);
  REQUIRE(r.ok());
  CHECK(r.trace.p_unit_mw[0].back() == doctest::Approx(3.0).epsilon(2e-3));
  CHECK(r.trace.p_command_mw.back() == doctest::Approx(3.0));
  CHECK(r.trace.p_load_mw.back() == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("sampled controller mode agrees with the continuous one") {
  ScenarioConfig c = single_unit(1.0, 0.6);
  c.load.demand = SampledTrace({{0.0, 1.0}, {0.2, 1.0}, {0.2001, 2.0}});
  const SimResult cont = run(c);
  c.controller_mode = ControllerMode::sampled;
  c.dt = 2e-5;
  c.decimation = 50;
  const SimResult samp = run(c);
  REQUIRE(cont.ok());
  REQUIRE(samp.ok());
  CHECK(samp.trace.p_unit_mw[0].back() == doctest::Approx(cont.trace.p_unit_mw[0].back()).epsilon(5e-3));
  CHECK(samp.trace.v_pcc.back() == doctest::Approx(cont.trace.v_pcc.back()).epsilon(1e-3));
}

TEST_CASE("event exactness") {
  ScenarioConfig base = single_unit(2.0, 0.5);
  base.decimation = 1;

  SUBCASE("fault") {
    ScenarioConfig c = base;
    c.events.fault = FaultSpec{0.2000049, 0.3, 0.8};
    const SimResult ev = run(c), none = run(base);
    REQUIRE(ev.ok());
    const auto& tr = ev.trace;
    std::size_t flips = 0, first = 0;
    for (std::size_t k = 1; k < tr.size(); ++k)
      if (tr.fault_active[k] != tr.fault_active[k - 1]) {
        if (flips++ == 0) first = k;
      }
    CHECK(flips == 2);
    CHECK(tr.t[first] == doctest::Approx(0.2));
    CHECK(same_prefix(ev.trace, none.trace, first));
    REQUIRE(ev.metrics.events.size() == 2);
    CHECK(ev.metrics.events[0].name == "fault_start");
    CHECK(ev.metrics.events[0].t_scheduled == 0.2000049);
    CHECK(ev.metrics.events[0].t_applied == doctest::Approx(0.2));
    CHECK(ev.metrics.events[0].step == 2000);
  }

  SUBCASE("breaker") {
    ScenarioConfig c = base;
    c.events.breaker = BreakerSpec{0.25, true};
    const SimResult ev = run(c), none = run(base);
    REQUIRE(ev.ok());
    const auto& tr = ev.trace;
    std::size_t flips = 0, at = 0;
    for (std::size_t k = 1; k < tr.size(); ++k)
      if (tr.breaker_closed[k] != tr.breaker_closed[k - 1]) {
        ++flips;
        at = k;
      }
    CHECK(flips == 1);
    CHECK(tr.t[at] == doctest::Approx(0.25));
    CHECK(same_prefix(ev.trace, none.trace, at));
  }
}

TEST_CASE("runs are bit-identical") {
  ScenarioConfig c = preset("scenario_c");
  c.duration = 0.3;
  c.events.breaker->t_open = 0.15;
  const SimResult a = run(c), b = run(c);
  REQUIRE(a.ok());
  CHECK(same_prefix(a.trace, b.trace, a.trace.size()));
}

TEST_CASE("power balance and KCL residuals are tiny") {
  ScenarioConfig c = preset("scenario_b");
  c.duration = 0.3;
  c.events.fault = FaultSpec{0.1, 0.2, 0.85};
  const SimResult r = run(c);
  REQUIRE(r.ok());
  CHECK(r.metrics.max_power_balance_residual_pu < 1e-9);
  CHECK(r.metrics.max_kcl_residual_pu < 1e-9);
}

TEST_CASE("identical units share equally") {
  ScenarioConfig c = preset("scenario_a");
  c.duration = 0.5;
  const SimResult r = run(c);
  REQUIRE(r.ok());
  CHECK(r.metrics.sharing_imbalance_pct < 1e-6);
}

TEST_CASE("dead islanded bus is reported") {
  ScenarioConfig c = grid_only(0.2);
  c.events.breaker = BreakerSpec{0.1, true};
  const SimResult r = run(c);
  CHECK(r.status == RunStatus::dead_bus);
  CHECK_FALSE(r.diagnostic.empty());
  CHECK(r.trace.size() > 0);
  CHECK(r.trace.t.back() < 0.11);
}

TEST_CASE("divergence is reported with a partial trace") {
  // A droopy governor cannot hold the frequency band after a large load step.
  ScenarioConfig c = grid_only(3.0);
  c.grid.equivalent.r_gov = 0.5;
  c.load.demand = SampledTrace({{0.0, 0.0}, {0.1, 0.0}, {0.1001, 20.0}});
  const SimResult r = run(c);
  CHECK(r.status == RunStatus::diverged);
  CHECK_FALSE(r.diagnostic.empty());
  CHECK(r.trace.size() > 0);
  CHECK(r.trace.t.back() < c.duration);
  for (double v : r.trace.v_pcc) CHECK(std::isfinite(v));
}

TEST_CASE("without BESS the units are absent") {
  ScenarioConfig c = preset("scenario_b");
  c.duration = 0.2;
  c.bess_enabled = false;
  const SimResult r = run(c);
  REQUIRE(r.ok());
  CHECK(r.trace.unit_count() == 8);
  for (const auto& s : r.trace.p_unit_mw)
    for (double p : s) CHECK(p == 0.0);
  CHECK(r.trace.p_grid_mw.back() == doctest::Approx(r.trace.p_load_mw.back()).epsilon(1e-9));
}

TEST_CASE("presets") {
  const auto names = preset_names();
  CHECK(names == std::vector<std::string>{"scenario_a", "scenario_b", "scenario_c"});
  for (const auto& n : names) {
    const ScenarioConfig c = preset(n);
    CHECK(c.name == n);
    CHECK_NOTHROW(validate(c));
  }
  const ScenarioConfig a = preset("scenario_a");
  REQUIRE(a.units.size() == 8);
  for (const auto& u : a.units) CHECK(u.base.s_nominal == 5.0e6);
  CHECK(a.system_base.s_nominal == 40.0e6);

  const ScenarioConfig b = preset("scenario_b");
  const auto& wp = std::get<WorkloadProfile>(b.load.demand);
  CHECK(wp.p_idle == 6.0);
  CHECK(wp.p_train == 6.0);
  CHECK(wp.noise_amp == 0.0);
  REQUIRE(b.events.fault.has_value());
  CHECK(b.events.fault->t_start == 13.0);
  CHECK(b.events.fault->t_clear == 18.0);

  const ScenarioConfig c = preset("scenario_c");
  REQUIRE(c.events.breaker.has_value());
  CHECK(c.events.breaker->t_open == 10.5);

  CHECK_THROWS_AS(preset("scenario_z"), std::invalid_argument);
}

TEST_CASE("validation names the offending field") {
  ScenarioConfig c = preset("scenario_a");
  c.dt = 1e-3;
  CHECK(thrown_message(c).rfind("dt_seconds", 0) == 0);
  c = preset("scenario_a");
  c.duration = 0.0;
  CHECK(thrown_message(c).rfind("duration_seconds", 0) == 0);
  c = preset("scenario_a");
  c.units[3].droop.k_p = -1.0;
  CHECK(thrown_message(c).rfind("units[3].droop", 0) == 0);
  c = preset("scenario_a");
  c.dispatch.fraction = 1.5;
  CHECK(thrown_message(c).rfind("dispatch.fraction", 0) == 0);
  c = preset("scenario_a");
  c.events.fault = FaultSpec{2.0, 1.0, 0.5};
  CHECK(thrown_message(c).rfind("events.fault", 0) == 0);
  c = preset("scenario_a");
  c.units[0].base.f_nominal = 50.0;
  CHECK(thrown_message(c).find("f_nominal") != std::string::npos);
  CHECK_THROWS_AS(run(c), std::invalid_argument);
}

TEST_CASE("compare examples") {
  SimTrace with, without;
  for (int k = 0; k < 5; ++k) {
    with.t.push_back(0.1 * k);
    without.t.push_back(0.1 * k);
    with.v_pcc.push_back(1.0);
    without.v_pcc.push_back(1.0);
  }
  with.f_hz = {60.0, 59.8, 60.0, 60.15, 60.0};
  without.f_hz = {60.0, 59.5, 60.0, 60.3, 60.0};

  const CompareReport same = compare(without, without);
  CHECK(same.under_reduction_pct == 0.0);
  CHECK(same.over_reduction_pct == 0.0);

  const CompareReport r = compare(with, without);
  CHECK(r.under_reduction_pct == doctest::Approx(60.0));
  CHECK(r.over_reduction_pct == doctest::Approx(50.0));
  CHECK(r.without_bess.under_hz == doctest::Approx(0.5));
  CHECK(r.with_bess.over_hz == doctest::Approx(0.15));

  SimTrace shifted = with;
  shifted.t[2] += 1e-3;
  CHECK_THROWS_AS(compare(shifted, without), std::invalid_argument);
  SimTrace shorter = with;
  shorter.t.pop_back();
  CHECK_THROWS_AS(compare(shorter, without), std::invalid_argument);
}
