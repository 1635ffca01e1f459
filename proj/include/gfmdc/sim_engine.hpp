#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gfmdc/gfm_control.hpp"
#include "gfmdc/network.hpp"
#include "gfmdc/profile.hpp"
#include "gfmdc/pu_base.hpp"

namespace gfmdc {

struct UnitConfig {
  PerUnitBase base;
  FilterParams filter;
  DroopParams droop;
  LoopGains gains;
  PowerMode power_mode = PowerMode::exact;
  LpfMode lpf_mode = LpfMode::exponential;
};

/// Default unit on `base` with the filter sized from the base impedance.
UnitConfig make_unit(const PerUnitBase& base = {}, double l_g_ratio = kDefaultGridSideRatio,
                     double design_ratio = kFilterDesignRatio);

enum class DispatchMode {
  fixed,        // each unit holds its configured p_ref
  follow_load,  // p_ref = fraction * demand / fleet rating, clamped to [-1, 1]
};

struct Dispatch {
  DispatchMode mode = DispatchMode::follow_load;
  double fraction = 1.0;
};

enum class SchedulePolicy {
  initial,  // grid governor set to the flat-start export (steady start)
  mean,     // mean expected grid import over the run
  fixed,    // p_sched_mw as given
};

struct GridConfig {
  GridEquivalent equivalent;  // delta/omega_g/p_sched are initialized by run()
  SchedulePolicy schedule = SchedulePolicy::initial;
  double p_sched_mw = 0.0;
  double rating_va = 40.0e6;
};

struct LoadConfig {
  std::variant<WorkloadProfile, SampledTrace> demand = WorkloadProfile{};
  double q_demand_mvar = 0.0;
  double smoothing = 0.01;  // s
};

struct EventsConfig {
  std::optional<FaultSpec> fault;
  std::optional<BreakerSpec> breaker;
};

enum class ControllerMode {
  continuous,  // controller states integrated with the plant by RK4
  sampled,     // controller_step once per dt, modulation held over the step
};

struct ScenarioConfig {
  std::string name = "custom";
  double duration = 1.0;  // s
  double dt = 1.0e-4;     // s
  int decimation = 10;
  PerUnitBase system_base{13'800.0, 40.0e6, 60.0};
  bool bess_enabled = true;
  ControllerMode controller_mode = ControllerMode::continuous;
  Dispatch dispatch;
  std::vector<UnitConfig> units;
  GridConfig grid;
  LoadConfig load;
  EventsConfig events;
};

inline constexpr double kMaxStep = 2.0e-4;

/// Throws std::invalid_argument naming the offending field.
void validate(const ScenarioConfig& config);

/// Uniformly sampled observables. Unit series are indexed [unit][sample].
struct SimTrace {
  std::vector<double> t;
  std::vector<double> v_pcc;        // pu
  std::vector<double> f_hz;
  std::vector<std::vector<double>> p_unit_mw;
  std::vector<std::vector<double>> q_unit_mvar;
  std::vector<double> p_grid_mw;    // into the PCC from the grid
  std::vector<double> p_load_mw;    // drawn by the data center
  std::vector<std::uint8_t> fault_active;
  std::vector<std::uint8_t> breaker_closed;
  std::vector<double> p_command_mw;  // aggregate dispatch; not part of the CSV

  std::size_t size() const { return t.size(); }
  std::size_t unit_count() const { return p_unit_mw.size(); }
  double p_units_total(std::size_t k) const;
  double q_units_total(std::size_t k) const;
};

struct EventRecord {
  std::string name;
  double t_scheduled = 0.0;
  double t_applied = 0.0;
  std::int64_t step = 0;
};

struct WindowStats {
  std::string name;
  double t_begin = 0.0;
  double t_end = 0.0;
  double v_min = 0.0, v_max = 0.0;
  double f_min = 0.0, f_max = 0.0;
  double q_units_peak_mvar = 0.0;
  double p_load_min_mw = 0.0, p_load_max_mw = 0.0;
};

struct SummaryMetrics {
  double f_min = 0.0, f_max = 0.0;
  double v_min = 0.0, v_max = 0.0;
  double max_p_tracking_error_mw = 0.0;
  double sharing_imbalance_pct = 0.0;
  double max_kcl_residual_pu = 0.0;
  double max_power_balance_residual_pu = 0.0;
  double p_sched_mw = 0.0;
  std::int64_t steps = 0;
  std::vector<EventRecord> events;
  std::vector<WindowStats> windows;
};

enum class RunStatus { ok, diverged, dead_bus };

std::string_view to_string(RunStatus status);

struct SimResult {
  SimTrace trace;
  SummaryMetrics metrics;
  RunStatus status = RunStatus::ok;
  std::string diagnostic;

  bool ok() const { return status == RunStatus::ok; }
};

/// Fixed-step simulation. Events are aligned to the nearest step and
/// exogenous inputs (demand, dispatch, EMF sag, breaker) are sampled at the
/// start of each step and held across it. Throws std::invalid_argument for
/// an invalid config; faults during the run are reported in the status.
SimResult run(const ScenarioConfig& config);

std::vector<std::string> preset_names();

/// Base scenario every preset starts from: eight 5 MVA units on a 40 MVA
/// system, default grid, default workload profile.
ScenarioConfig default_scenario();

ScenarioConfig preset(std::string_view name);

struct DeviationSet {
  double under_hz = 0.0;  // max(f_nominal - f_min, 0)
  double over_hz = 0.0;   // max(f_max - f_nominal, 0)
  double v_dip_pu = 0.0;  // max(1 - v_min, 0)
};

struct CompareReport {
  DeviationSet with_bess;
  DeviationSet without_bess;
  double under_reduction_pct = 0.0;
  double over_reduction_pct = 0.0;
  double v_dip_reduction_pct = 0.0;
};

/// Throws std::invalid_argument when the traces do not share a time grid.
CompareReport compare(const SimTrace& with_bess, const SimTrace& without_bess,
                      double f_nominal = 60.0);

}  // namespace gfmdc
