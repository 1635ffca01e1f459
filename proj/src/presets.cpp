#include <stdexcept>
#include <string>

#include "gfmdc/sim_engine.hpp"

namespace gfmdc {

ScenarioConfig default_scenario() {
  ScenarioConfig c;
  const PerUnitBase unit_base{13'800.0, 5.0e6, 60.0};
  c.units.assign(8, make_unit(unit_base));
  return c;
}

std::vector<std::string> preset_names() { return {"scenario_a", "scenario_b", "scenario_c"}; }

namespace {

// Load following over a shortened training cycle, against a stiff
// 110 MVA grid equivalent scheduled at the mean expected import.
ScenarioConfig scenario_a() {
  ScenarioConfig c = default_scenario();
  c.name = "scenario_a";
  c.duration = 40.0;
  WorkloadProfile p;
  p.train_duration = 15.0;
  p.checkpoint_duration = 8.0;
  c.load.demand = p;
  c.dispatch = {DispatchMode::follow_load, 0.6};
  c.grid.schedule = SchedulePolicy::mean;
  c.grid.rating_va = 110.0e6;
  return c;
}

ScenarioConfig scenario_b() {
  ScenarioConfig c = default_scenario();
  c.name = "scenario_b";
  c.duration = 20.0;
  WorkloadProfile p;
  p.p_idle = 6.0;
  p.p_train = 6.0;
  p.noise_amp = 0.0;
  c.load.demand = p;
  c.dispatch = {DispatchMode::follow_load, 1.0};
  c.grid.equivalent.x_th = 1.0;
  c.events.fault = FaultSpec{13.0, 18.0, 0.85};
  return c;
}

ScenarioConfig scenario_c() {
  ScenarioConfig c = default_scenario();
  c.name = "scenario_c";
  c.duration = 15.0;
  WorkloadProfile p;
  p.p_idle = 30.0;
  p.p_train = 30.0;
  c.load.demand = p;
  c.dispatch = {DispatchMode::follow_load, 0.8};
  c.events.breaker = BreakerSpec{10.5, true};
  return c;
}

}  // namespace

ScenarioConfig preset(std::string_view name) {
  if (name == "scenario_a") return scenario_a();
  if (name == "scenario_b") return scenario_b();
  if (name == "scenario_c") return scenario_c();
  throw std::invalid_argument("unknown preset '" + std::string(name) +
                              "' (expected scenario_a, scenario_b or scenario_c)");
}

}  // namespace gfmdc
