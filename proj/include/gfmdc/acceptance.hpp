#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gfmdc/sim_engine.hpp"

namespace gfmdc::acceptance {

struct Check {
  std::string name;
  bool passed = false;
  std::string measured;
};

/// A simulation result together with the config that produced it and the
/// wall-clock time it took.
struct TimedRun {
  ScenarioConfig config;
  SimResult result;
  double seconds = 0.0;
};

TimedRun timed_run(const ScenarioConfig& config);

bool all_passed(const std::vector<Check>& checks);

std::vector<Check> filter_design(int samples = 1000, unsigned seed = 7);
std::vector<Check> power_identity(int samples = 10'000, unsigned seed = 11);
std::vector<Check> droop_fixed_point();
std::vector<Check> equal_sharing(const TimedRun& scenario_a);
std::vector<Check> frequency_mitigation(const TimedRun& with_bess, const TimedRun& without_bess);
std::vector<Check> reference_tracking();
std::vector<Check> fault_support(const TimedRun& with_bess, const TimedRun& without_bess);
std::vector<Check> islanding(const TimedRun& scenario_c);
std::vector<Check> numerical_soundness(const std::vector<const TimedRun*>& accepted);
std::vector<Check> determinism(const TimedRun& first);

/// Scenario-level acceptance used by `gfmdc check <preset>`.
std::vector<Check> check_preset(std::string_view name);

/// Load demand (MW) the config requests at time t.
double demand_at(const ScenarioConfig& config, double t);

}  // namespace gfmdc::acceptance
