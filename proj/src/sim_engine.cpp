#include "gfmdc/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "steady_state.hpp"

namespace gfmdc {

UnitConfig make_unit(const PerUnitBase& base, double l_g_ratio, double design_ratio) {
  UnitConfig u;
  u.base = base;
  u.filter = design_filter(base.z_base(), base.f_nominal, l_g_ratio, design_ratio);
  u.droop.omega_ref = base.omega();
  return u;
}

double SimTrace::p_units_total(std::size_t k) const {
  double s = 0.0;
  for (const auto& series : p_unit_mw) s += series[k];
  return s;
}

double SimTrace::q_units_total(std::size_t k) const {
  double s = 0.0;
  for (const auto& series : q_unit_mvar) s += series[k];
  return s;
}

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::ok: return "ok";
    case RunStatus::diverged: return "diverged";
    case RunStatus::dead_bus: return "dead_bus";
  }
  return "unknown";
}

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

template <class F>
void rethrow_as_invalid(const std::string& field, F&& f) {
  try {
    f();
  } catch (const std::domain_error& e) {
    throw std::invalid_argument(field + ": " + e.what());
  }
}

}  // namespace

void validate(const ScenarioConfig& c) {
  require(std::isfinite(c.dt) && c.dt > 0.0, "dt_seconds: must be positive");
  require(c.dt <= kMaxStep, "dt_seconds: must not exceed 2e-4 s");
  require(std::isfinite(c.duration) && c.duration > c.dt, "duration_seconds: must exceed dt");
  require(c.decimation >= 1, "decimation: must be at least 1");
  rethrow_as_invalid("system_base", [&] { validate(c.system_base); });
  for (std::size_t k = 0; k < c.units.size(); ++k) {
    const UnitConfig& u = c.units[k];
    const std::string field = "units[" + std::to_string(k) + "]";
    rethrow_as_invalid(field + ".base", [&] { validate(u.base); });
    rethrow_as_invalid(field + ".droop", [&] { validate(u.droop); });
    rethrow_as_invalid(field + ".gains", [&] { validate(u.gains); });
    require(u.filter.l_f > 0.0 && u.filter.c_f > 0.0 && u.filter.l_g > 0.0,
            field + ".filter: values must be positive");
    require(std::abs(u.base.f_nominal - c.system_base.f_nominal) < 1e-9,
            field + ".base.f_nominal_hz: must match the system base");
  }
  rethrow_as_invalid("grid", [&] { validate(c.grid.equivalent); });
  require(c.grid.rating_va > 0.0, "grid.rating_va: must be positive");
  require(std::isfinite(c.grid.p_sched_mw), "grid.p_sched_mw: must be finite");
  require(c.grid.equivalent.e_mag > 0.0, "grid.e_mag_pu: must be positive");
  if (const auto* wp = std::get_if<WorkloadProfile>(&c.load.demand)) {
    rethrow_as_invalid("load.profile", [&] { validate(*wp); });
  } else {
    require(!std::get<SampledTrace>(c.load.demand).points().empty(), "load.trace: empty");
  }
  require(c.load.smoothing > 0.0, "load.smoothing_seconds: must be positive");
  require(std::isfinite(c.load.q_demand_mvar), "load.q_demand_mvar: must be finite");
  require(c.dispatch.fraction >= 0.0 && c.dispatch.fraction <= 1.0,
          "dispatch.fraction: must lie in [0, 1]");
  if (c.events.fault) rethrow_as_invalid("events.fault", [&] { validate(*c.events.fault); });
  if (c.events.breaker)
    rethrow_as_invalid("events.breaker", [&] { validate(*c.events.breaker); });
}

namespace {

constexpr std::size_t kGridSlots = 4;  // omega_g, delta_g, load g, load b
constexpr std::size_t kUnitSlots = 13;

enum Slot : std::size_t {
  s_ilf_d, s_ilf_q, s_vcf_d, s_vcf_q, s_ilg_d, s_ilg_q,
  s_delta, s_pf, s_qf, s_xvd, s_xvq, s_xid, s_xiq,
};

struct Unit {
  GfmParams params;
  ControllerState tmpl;  // gains, limits and cutoffs; states are overwritten
  double s_ratio = 1.0;
  double s_mw = 0.0;
};

struct Exogenous {
  double p_demand_mw = 0.0;
  double p_demand = 0.0;  // system pu
  double q_demand = 0.0;
  double e_mag = 1.0;
  bool fault = false;
  bool breaker = true;
};

struct UnitEval {
  double omega = 0.0;
  PowerPair power;  // unit base
  DqPair i_sys;     // system pu, system frame
};

struct Eval {
  DqPair v;
  DqPair i_grid;
  DqPair i_load;
  DqPair kcl;
  std::vector<UnitEval> units;
};

struct Held {
  DqPair v_mod;
  double omega = 0.0;
};

class Engine {
 public:
  explicit Engine(const ScenarioConfig& cfg);
  SimResult execute();

 private:
  Exogenous exogenous(std::int64_t n) const;
  void apply_dispatch(const Exogenous& ex);
  double commanded_mw() const;
  void initialize(const Exogenous& ex0);
  void rhs(const std::vector<double>& x, const Exogenous& ex, std::vector<double>& dx, Eval* ev);
  void sampled_update(std::vector<double>& x);
  void record(std::int64_t n, const Exogenous& ex, const Eval& ev);
  void check_state(const std::vector<double>& x, const Exogenous& ex) const;
  ControllerState unpack(const Unit& u, const double* s) const;
  double predicted_import_mw(const Exogenous& ex);
  void finalize_metrics();

  const ScenarioConfig& cfg_;
  std::vector<Unit> units_;  // active units only
  std::size_t configured_units_ = 0;
  std::variant<LoadSampler, const SampledTrace*> demand_;
  GridEquivalent grid_;
  double s_sys_mw_ = 0.0;
  double omega_b_ = 0.0;
  std::int64_t n_steps_ = 0;
  std::int64_t k_fault_on_ = -1, k_fault_off_ = -1, k_open_ = -1;
  FaultSpec fault_aligned_;
  BreakerSpec breaker_aligned_;
  std::vector<double> x_;
  std::vector<Held> held_;
  SimResult result_;
  double max_kcl_ = 0.0;
  double max_balance_ = 0.0;
};

Engine::Engine(const ScenarioConfig& cfg)
    : cfg_(cfg),
      configured_units_(cfg.units.size()),
      demand_(std::holds_alternative<WorkloadProfile>(cfg.load.demand)
                  ? decltype(demand_)(LoadSampler(std::get<WorkloadProfile>(cfg.load.demand)))
                  : decltype(demand_)(&std::get<SampledTrace>(cfg.load.demand))) {
  s_sys_mw_ = cfg.system_base.s_nominal / 1e6;
  omega_b_ = cfg.system_base.omega();
  if (cfg.bess_enabled) {
    for (const UnitConfig& uc : cfg.units) {
      Unit u;
      u.params.droop = uc.droop;
      u.params.gains = uc.gains;
      u.params.filter = to_plant_filter(uc.filter, uc.base);
      u.params.power_mode = uc.power_mode;
      u.params.lpf_mode = uc.lpf_mode;
      u.tmpl = make_controller(uc.droop, uc.gains);
      u.s_ratio = uc.base.s_nominal / cfg.system_base.s_nominal;
      u.s_mw = uc.base.s_nominal / 1e6;
      units_.push_back(u);
    }
  }
  held_.resize(units_.size());
  grid_ = cfg.grid.equivalent;
  grid_.rating = cfg.grid.rating_va / cfg.system_base.s_nominal;
  grid_.omega_base = omega_b_;

  n_steps_ = std::llround(cfg.duration / cfg.dt);
  const auto align = [&](double t) { return std::llround(t / cfg.dt); };
  auto& events = result_.metrics.events;
  if (cfg.events.fault) {
    const FaultSpec& f = *cfg.events.fault;
    k_fault_on_ = align(f.t_start);
    k_fault_off_ = align(f.t_clear);
    fault_aligned_ = {static_cast<double>(k_fault_on_) * cfg.dt,
                      static_cast<double>(k_fault_off_) * cfg.dt, f.residual_v};
    events.push_back({"fault_start", f.t_start, fault_aligned_.t_start, k_fault_on_});
    events.push_back({"fault_clear", f.t_clear, fault_aligned_.t_clear, k_fault_off_});
  }
  if (cfg.events.breaker) {
    const BreakerSpec& b = *cfg.events.breaker;
    k_open_ = align(b.t_open);
    breaker_aligned_ = {static_cast<double>(k_open_) * cfg.dt, b.initially_closed};
    if (b.initially_closed) events.push_back({"breaker_open", b.t_open, breaker_aligned_.t_open, k_open_});
  }
}

Exogenous Engine::exogenous(std::int64_t n) const {
  const double t = static_cast<double>(n) * cfg_.dt;
  Exogenous ex;
  ex.p_demand_mw = std::visit(
      [t](const auto& d) {
        if constexpr (std::is_pointer_v<std::decay_t<decltype(d)>>)
          return d->sample(t);
        else
          return d.sample(t);
      },
      demand_);
  ex.p_demand = ex.p_demand_mw / s_sys_mw_;
  ex.q_demand = cfg_.load.q_demand_mvar / s_sys_mw_;
  ex.e_mag = grid_.e_mag;
  if (cfg_.events.fault) {
    ex.e_mag = apply_fault(grid_, fault_aligned_, t);
    ex.fault = n >= k_fault_on_ && n < k_fault_off_;
  }
  if (cfg_.events.breaker) ex.breaker = breaker_closed(breaker_aligned_, t);
  return ex;
}

void Engine::apply_dispatch(const Exogenous& ex) {
  if (cfg_.dispatch.mode != DispatchMode::follow_load || units_.empty()) return;
  double fleet_mw = 0.0;
  for (const Unit& u : units_) fleet_mw += u.s_mw;
  const double p_ref = std::clamp(cfg_.dispatch.fraction * ex.p_demand_mw / fleet_mw, -1.0, 1.0);
  for (Unit& u : units_) u.params.droop.p_ref = p_ref;
}

double Engine::commanded_mw() const {
  double total = 0.0;
  for (const Unit& u : units_) total += u.params.droop.p_ref * u.s_mw;
  return total;
}

double Engine::predicted_import_mw(const Exogenous& ex) {
  apply_dispatch(ex);
  return ex.p_demand_mw - commanded_mw();
}

ControllerState Engine::unpack(const Unit& u, const double* s) const {
  ControllerState st = u.tmpl;
  st.theta = s[s_delta];
  st.p_lpf.y = s[s_pf];
  st.q_lpf.y = s[s_qf];
  st.vd_pi.integ = s[s_xvd];
  st.vq_pi.integ = s[s_xvq];
  st.id_pi.integ = s[s_xid];
  st.iq_pi.integ = s[s_xiq];
  return st;
}

InverterPlantState plant_of(const double* s) {
  return {{s[s_ilf_d], s[s_ilf_q]}, {s[s_vcf_d], s[s_vcf_q]}, {s[s_ilg_d], s[s_ilg_q]}};
}

void Engine::initialize(const Exogenous& ex0) {
  detail::SteadyInputs in;
  in.breaker_closed = ex0.breaker;
  in.e_mag = ex0.e_mag;
  in.x_th = grid_.x_th;
  in.p_load = ex0.p_demand;
  in.q_load = ex0.q_demand;
  for (const Unit& u : units_)
    in.units.push_back({u.params.filter.l_g, u.s_ratio, omega_b_, u.params.droop});
  // A zero-load islanded start has no equilibrium to solve for.
  if (!ex0.breaker && units_.empty())
    throw SimulationFault(SimulationFault::Kind::dead_bus,
                          "dead bus: breaker open and no grid-forming unit active");
  const detail::SteadySolution sol = detail::solve_steady_state(in);

  x_.assign(kGridSlots + kUnitSlots * units_.size(), 0.0);
  x_[0] = 1.0;
  x_[1] = 0.0;
  const Admittance y0 = target_admittance(ex0.p_demand, ex0.q_demand, sol.v_pcc);
  x_[2] = y0.g;
  x_[3] = y0.b;

  const double omega = sol.omega_pu * omega_b_;
  for (std::size_t k = 0; k < units_.size(); ++k) {
    const Unit& u = units_[k];
    double* s = &x_[kGridSlots + kUnitSlots * k];
    const PlantFilter& f = u.params.filter;
    const DqPair v_loc = rotate(sol.v_pcc, -sol.delta[k]);
    const DqPair v_cf{sol.v_mag[k], 0.0};
    // (v_cf - v_pcc) / (j omega l_g)
    const double x_g = omega * f.l_g;
    const DqPair dv = v_cf - v_loc;
    const DqPair i_lg{dv.q / x_g, -dv.d / x_g};
    const double b_c = omega * f.c_f;
    const DqPair i_lf{i_lg.d - b_c * v_cf.q, i_lg.q + b_c * v_cf.d};
    s[s_ilf_d] = i_lf.d;
    s[s_ilf_q] = i_lf.q;
    s[s_vcf_d] = v_cf.d;
    s[s_vcf_q] = v_cf.q;
    s[s_ilg_d] = i_lg.d;
    s[s_ilg_q] = i_lg.q;
    s[s_delta] = sol.delta[k];
    const PowerPair pq = measure_power(v_cf, i_lg, u.params.power_mode);
    s[s_pf] = pq.p;
    s[s_qf] = pq.q;
    const LoopGains& g = u.params.gains;
    if (g.k_iv > 0.0) {
      s[s_xvd] = (1.0 - g.feed_forward_f) * i_lg.d / g.k_iv;
      s[s_xvq] = (1.0 - g.feed_forward_f) * i_lg.q / g.k_iv;
      s[s_xvd] = clamp_integrator(u.tmpl.vd_pi, s[s_xvd]);
      s[s_xvq] = clamp_integrator(u.tmpl.vq_pi, s[s_xvq]);
    }
    s[s_xid] = 0.0;
    s[s_xiq] = 0.0;
  }
}

void Engine::rhs(const std::vector<double>& x, const Exogenous& ex, std::vector<double>& dx,
                 Eval* ev) {
  const bool continuous = cfg_.controller_mode == ControllerMode::continuous;
  BusInputs bus;
  bus.e_mag = ex.e_mag;
  bus.e_angle = x[1];
  bus.x_th = grid_.x_th;
  bus.breaker_closed = ex.breaker;
  bus.active_sources = static_cast<int>(units_.size());
  bus.load = {x[2], x[3]};
  for (std::size_t k = 0; k < units_.size(); ++k) {
    const double* s = &x[kGridSlots + kUnitSlots * k];
    bus.injection = bus.injection +
                    units_[k].s_ratio * rotate({s[s_ilg_d], s[s_ilg_q]}, s[s_delta]);
  }
  const DqPair v = solve_pcc(bus);

  if (ev) ev->units.resize(units_.size());
  for (std::size_t k = 0; k < units_.size(); ++k) {
    const Unit& u = units_[k];
    const double* s = &x[kGridSlots + kUnitSlots * k];
    double* d = &dx[kGridSlots + kUnitSlots * k];
    const InverterPlantState plant = plant_of(s);
    const DqPair v_loc = rotate(v, -s[s_delta]);
    DqPair v_mod;
    double omega = 0.0;
    if (continuous) {
      const ControllerEval ce = controller_evaluate(unpack(u, s), plant.v_cf, plant.i_lf,
                                                    plant.i_lg, u.params);
      v_mod = ce.v_mod;
      omega = ce.omega;
      d[s_pf] = ce.rates.p_filt;
      d[s_qf] = ce.rates.q_filt;
      d[s_xvd] = ce.rates.v_integ.d;
      d[s_xvq] = ce.rates.v_integ.q;
      d[s_xid] = ce.rates.i_integ.d;
      d[s_xiq] = ce.rates.i_integ.q;
    } else {
      v_mod = held_[k].v_mod;
      omega = held_[k].omega;
      for (std::size_t j = s_pf; j <= s_xiq; ++j) d[j] = 0.0;
    }
    const PlantDerivative pd = plant_derivatives(plant, v_mod, v_loc, u.params.filter, omega);
    d[s_ilf_d] = pd.di_lf.d;
    d[s_ilf_q] = pd.di_lf.q;
    d[s_vcf_d] = pd.dv_cf.d;
    d[s_vcf_q] = pd.dv_cf.q;
    d[s_ilg_d] = pd.di_lg.d;
    d[s_ilg_q] = pd.di_lg.q;
    d[s_delta] = omega - omega_b_;
    if (ev) {
      ev->units[k].omega = omega;
      ev->units[k].power = measure_power(plant.v_cf, plant.i_lg, PowerMode::exact);
      ev->units[k].i_sys = u.s_ratio * rotate(plant.i_lg, s[s_delta]);
    }
  }

  const DqPair i_g = grid_current(bus, v);
  GridEquivalent g = grid_;
  g.omega_g = x[0];
  g.delta = x[1];
  const GridDerivative gd = grid_derivatives(g, v.d * i_g.d + v.q * i_g.q);
  dx[0] = gd.d_omega;
  dx[1] = gd.d_delta;
  const double w_c = 1.0 / cfg_.load.smoothing;
  const Admittance target = target_admittance(ex.p_demand, ex.q_demand, v);
  dx[2] = w_c * (target.g - x[2]);
  dx[3] = w_c * (target.b - x[3]);

  if (ev) {
    ev->v = v;
    ev->i_grid = i_g;
    ev->i_load = admittance_current(bus.load, v);
    ev->kcl = pcc_kcl_residual(bus, v);
  }
}

void Engine::sampled_update(std::vector<double>& x) {
  for (std::size_t k = 0; k < units_.size(); ++k) {
    const Unit& u = units_[k];
    double* s = &x[kGridSlots + kUnitSlots * k];
    const InverterPlantState plant = plant_of(s);
    const ControllerState st = unpack(u, s);
    const ControllerStepResult r =
        controller_step(st, inverse_park(plant.v_cf, st.theta), inverse_park(plant.i_lf, st.theta),
                        inverse_park(plant.i_lg, st.theta), u.params, cfg_.dt);
    held_[k] = {r.v_mod, r.omega};
    s[s_pf] = r.state.p_lpf.y;
    s[s_qf] = r.state.q_lpf.y;
    s[s_xvd] = r.state.vd_pi.integ;
    s[s_xvq] = r.state.vq_pi.integ;
    s[s_xid] = r.state.id_pi.integ;
    s[s_xiq] = r.state.iq_pi.integ;
  }
}

void Engine::check_state(const std::vector<double>& x, const Exogenous& ex) const {
  for (std::size_t j = 0; j < x.size(); ++j)
    if (!std::isfinite(x[j]))
      throw SimulationFault(SimulationFault::Kind::divergence, "non-finite state detected");
  for (std::size_t k = 0; k < units_.size(); ++k)
    if (plant_diverged(plant_of(&x[kGridSlots + kUnitSlots * k])))
      throw SimulationFault(SimulationFault::Kind::divergence,
                            "unit " + std::to_string(k + 1) + " plant state exceeded 3 pu");
  if (ex.breaker && std::abs(x[0] - 1.0) > kGridFrequencyBand)
    throw SimulationFault(SimulationFault::Kind::divergence,
                          "grid frequency left the +-5% band");
}

void Engine::record(std::int64_t n, const Exogenous& ex, const Eval& ev) {
  SimTrace& tr = result_.trace;
  tr.t.push_back(static_cast<double>(n) * cfg_.dt);
  tr.v_pcc.push_back(ev.v.norm());
  double f = x_[0] * cfg_.system_base.f_nominal;
  if (!ex.breaker && !units_.empty()) {
    double w = 0.0, acc = 0.0;
    for (std::size_t k = 0; k < units_.size(); ++k) {
      acc += units_[k].s_ratio * ev.units[k].omega;
      w += units_[k].s_ratio;
    }
    f = acc / w / (2.0 * std::numbers::pi);
  }
  tr.f_hz.push_back(f);
  for (std::size_t k = 0; k < configured_units_; ++k) {
    const bool active = k < units_.size();
    tr.p_unit_mw[k].push_back(active ? ev.units[k].power.p * units_[k].s_mw : 0.0);
    tr.q_unit_mvar[k].push_back(active ? ev.units[k].power.q * units_[k].s_mw : 0.0);
  }
  tr.p_grid_mw.push_back((ev.v.d * ev.i_grid.d + ev.v.q * ev.i_grid.q) * s_sys_mw_);
  tr.p_load_mw.push_back((ev.v.d * ev.i_load.d + ev.v.q * ev.i_load.q) * s_sys_mw_);
  tr.fault_active.push_back(ex.fault ? 1 : 0);
  tr.breaker_closed.push_back(ex.breaker ? 1 : 0);
  tr.p_command_mw.push_back(commanded_mw());
}

double power_balance(const Eval& ev) {
  // Complex power entering the PCC from all branches.
  DqPair total = ev.i_grid - ev.i_load;
  for (const UnitEval& u : ev.units) total = total + u.i_sys;
  const double p = ev.v.d * total.d + ev.v.q * total.q;
  const double q = ev.v.q * total.d - ev.v.d * total.q;
  return std::hypot(p, q);
}

SimResult Engine::execute() {
  SimTrace& tr = result_.trace;
  tr.p_unit_mw.assign(configured_units_, {});
  tr.q_unit_mvar.assign(configured_units_, {});
  const std::int64_t expected = n_steps_ / cfg_.decimation + 1;
  tr.t.reserve(expected);

  try {
    const Exogenous ex0 = exogenous(0);
    apply_dispatch(ex0);
    initialize(ex0);

    switch (cfg_.grid.schedule) {
      case SchedulePolicy::initial: {
        std::vector<double> dx(x_.size());
        Eval ev;
        rhs(x_, ex0, dx, &ev);
        grid_.p_sched = ev.v.d * ev.i_grid.d + ev.v.q * ev.i_grid.q;
        break;
      }
      case SchedulePolicy::mean: {
        const std::int64_t stride = std::max<std::int64_t>(1, std::llround(0.01 / cfg_.dt));
        double acc = 0.0;
        std::int64_t count = 0;
        for (std::int64_t n = 0; n <= n_steps_; n += stride, ++count)
          acc += predicted_import_mw(exogenous(n));
        grid_.p_sched = acc / static_cast<double>(count) / s_sys_mw_;
        apply_dispatch(ex0);
        break;
      }
      case SchedulePolicy::fixed:
        grid_.p_sched = cfg_.grid.p_sched_mw / s_sys_mw_;
        break;
    }
    result_.metrics.p_sched_mw = grid_.p_sched * s_sys_mw_;

    const std::size_t m = x_.size();
    std::vector<double> k1(m), k2(m), k3(m), k4(m), xs(m);
    const double dt = cfg_.dt;
    Eval ev;
    for (std::int64_t n = 0;; ++n) {
      const Exogenous ex = exogenous(n);
      apply_dispatch(ex);
      if (cfg_.controller_mode == ControllerMode::sampled) sampled_update(x_);
      rhs(x_, ex, k1, &ev);
      max_kcl_ = std::max(max_kcl_, ev.kcl.norm());
      max_balance_ = std::max(max_balance_, power_balance(ev));
      if (n % cfg_.decimation == 0) record(n, ex, ev);
      if (n == n_steps_) break;

      for (std::size_t j = 0; j < m; ++j) xs[j] = x_[j] + 0.5 * dt * k1[j];
      rhs(xs, ex, k2, nullptr);
      for (std::size_t j = 0; j < m; ++j) xs[j] = x_[j] + 0.5 * dt * k2[j];
      rhs(xs, ex, k3, nullptr);
      for (std::size_t j = 0; j < m; ++j) xs[j] = x_[j] + dt * k3[j];
      rhs(xs, ex, k4, nullptr);
      for (std::size_t j = 0; j < m; ++j)
        x_[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);

      for (std::size_t k = 0; k < units_.size(); ++k) {
        const Unit& u = units_[k];
        double* s = &x_[kGridSlots + kUnitSlots * k];
        s[s_xvd] = clamp_integrator(u.tmpl.vd_pi, s[s_xvd]);
        s[s_xvq] = clamp_integrator(u.tmpl.vq_pi, s[s_xvq]);
        s[s_xid] = clamp_integrator(u.tmpl.id_pi, s[s_xid]);
        s[s_xiq] = clamp_integrator(u.tmpl.iq_pi, s[s_xiq]);
        s[s_delta] = wrap_angle(s[s_delta]);
      }
      x_[1] = wrap_angle(x_[1]);
      check_state(x_, ex);
      result_.metrics.steps = n + 1;
    }
  } catch (const SimulationFault& e) {
    result_.status = e.kind() == SimulationFault::Kind::dead_bus ? RunStatus::dead_bus
                                                                 : RunStatus::diverged;
    result_.diagnostic = e.what();
  }
  finalize_metrics();
  return std::move(result_);
}

WindowStats window_stats(const SimTrace& tr, const std::string& name, double t0, double t1) {
  WindowStats w;
  w.name = name;
  w.t_begin = t0;
  w.t_end = t1;
  constexpr double inf = std::numeric_limits<double>::infinity();
  w.v_min = w.f_min = w.p_load_min_mw = inf;
  w.v_max = w.f_max = w.p_load_max_mw = -inf;
  bool any = false;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (tr.t[k] < t0 || tr.t[k] >= t1) continue;
    any = true;
    w.v_min = std::min(w.v_min, tr.v_pcc[k]);
    w.v_max = std::max(w.v_max, tr.v_pcc[k]);
    w.f_min = std::min(w.f_min, tr.f_hz[k]);
    w.f_max = std::max(w.f_max, tr.f_hz[k]);
    w.q_units_peak_mvar = std::max(w.q_units_peak_mvar, tr.q_units_total(k));
    w.p_load_min_mw = std::min(w.p_load_min_mw, tr.p_load_mw[k]);
    w.p_load_max_mw = std::max(w.p_load_max_mw, tr.p_load_mw[k]);
  }
  if (!any) w.v_min = w.v_max = w.f_min = w.f_max = w.p_load_min_mw = w.p_load_max_mw = 0.0;
  return w;
}

void Engine::finalize_metrics() {
  SummaryMetrics& mt = result_.metrics;
  const SimTrace& tr = result_.trace;
  mt.max_kcl_residual_pu = max_kcl_;
  mt.max_power_balance_residual_pu = max_balance_;
  if (tr.size() == 0) return;
  const auto [fmin, fmax] = std::minmax_element(tr.f_hz.begin(), tr.f_hz.end());
  const auto [vmin, vmax] = std::minmax_element(tr.v_pcc.begin(), tr.v_pcc.end());
  mt.f_min = *fmin;
  mt.f_max = *fmax;
  mt.v_min = *vmin;
  mt.v_max = *vmax;

  double unit_mw = 0.0;
  for (const Unit& u : units_) unit_mw = std::max(unit_mw, u.s_mw);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (!units_.empty())
      mt.max_p_tracking_error_mw =
          std::max(mt.max_p_tracking_error_mw, std::abs(tr.p_units_total(k) - tr.p_command_mw[k]));
    if (units_.size() > 1) {
      double lo = tr.p_unit_mw[0][k], hi = lo;
      for (std::size_t u = 1; u < units_.size(); ++u) {
        lo = std::min(lo, tr.p_unit_mw[u][k]);
        hi = std::max(hi, tr.p_unit_mw[u][k]);
      }
      mt.sharing_imbalance_pct = std::max(mt.sharing_imbalance_pct, 100.0 * (hi - lo) / unit_mw);
    }
  }

  const double t_end = tr.t.back() + cfg_.dt;
  if (cfg_.events.fault)
    mt.windows.push_back(window_stats(tr, "fault", fault_aligned_.t_start, fault_aligned_.t_clear));
  if (cfg_.events.breaker && cfg_.events.breaker->initially_closed)
    mt.windows.push_back(window_stats(tr, "islanded", breaker_aligned_.t_open, t_end));
}

}  // namespace

SimResult run(const ScenarioConfig& config) {
  validate(config);
  Engine engine(config);
  return engine.execute();
}

namespace {

DeviationSet deviations(const SimTrace& tr, double f_nominal) {
  DeviationSet d;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    d.under_hz = std::max(d.under_hz, f_nominal - tr.f_hz[k]);
    d.over_hz = std::max(d.over_hz, tr.f_hz[k] - f_nominal);
    d.v_dip_pu = std::max(d.v_dip_pu, 1.0 - tr.v_pcc[k]);
  }
  return d;
}

double reduction_pct(double with, double without) {
  if (without <= 0.0) return 0.0;
  return 100.0 * (without - with) / without;
}

}  // namespace

CompareReport compare(const SimTrace& with_bess, const SimTrace& without_bess,
                      double f_nominal) {
  if (with_bess.size() != without_bess.size() || with_bess.size() == 0)
    throw std::invalid_argument("compare: traces have different sample counts");
  for (std::size_t k = 0; k < with_bess.size(); ++k)
    if (std::abs(with_bess.t[k] - without_bess.t[k]) > 1e-9)
      throw std::invalid_argument("compare: traces do not share a time grid (sample " +
                                  std::to_string(k) + ")");
  CompareReport r;
  r.with_bess = deviations(with_bess, f_nominal);
  r.without_bess = deviations(without_bess, f_nominal);
  r.under_reduction_pct = reduction_pct(r.with_bess.under_hz, r.without_bess.under_hz);
  r.over_reduction_pct = reduction_pct(r.with_bess.over_hz, r.without_bess.over_hz);
  r.v_dip_reduction_pct = reduction_pct(r.with_bess.v_dip_pu, r.without_bess.v_dip_pu);
  return r;
}

}  // namespace gfmdc
