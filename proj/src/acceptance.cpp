#include "gfmdc/acceptance.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "gfmdc/gfm_control.hpp"
#include "gfmdc/pu_base.hpp"
#include "gfmdc/signal.hpp"
#include "gfmdc/trace_io.hpp"

namespace gfmdc::acceptance {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Check make(std::string name, bool passed, std::string measured) {
  return {std::move(name), passed, std::move(measured)};
}

Check status_check(const TimedRun& run) {
  const std::string label = run.config.name + (run.config.bess_enabled ? "" : " without BESS");
  return make(label + " run completes without fault", run.result.ok(),
              run.result.ok() ? "ok" : fmt::format("{}: {}", to_string(run.result.status),
                                                   run.result.diagnostic));
}

Check runtime_check(double seconds, double budget) {
  return make(fmt::format("runtime < {:g} s", budget), seconds < budget,
              fmt::format("{:.2f} s", seconds));
}

bool all_finite(const SimTrace& tr) {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  bool ok = finite(tr.t) && finite(tr.v_pcc) && finite(tr.f_hz) && finite(tr.p_grid_mw) &&
            finite(tr.p_load_mw);
  for (const auto& s : tr.p_unit_mw) ok = ok && finite(s);
  for (const auto& s : tr.q_unit_mvar) ok = ok && finite(s);
  return ok;
}

double sample_period(const SimTrace& tr) { return tr.size() > 1 ? tr.t[1] - tr.t[0] : 0.0; }

// Longest contiguous run of samples (within [t0, t1)) failing `inside`.
template <class Pred>
double longest_excursion(const SimTrace& tr, double t0, double t1, Pred inside) {
  const double h = sample_period(tr);
  double longest = 0.0;
  double start = -1.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (tr.t[k] < t0 || tr.t[k] >= t1) continue;
    if (!inside(k)) {
      if (start < 0.0) start = tr.t[k];
      longest = std::max(longest, tr.t[k] - start + h);
    } else {
      start = -1.0;
    }
  }
  return longest;
}

const EventRecord* find_event(const SummaryMetrics& m, std::string_view name) {
  for (const auto& e : m.events)
    if (e.name == name) return &e;
  return nullptr;
}

}  // namespace

TimedRun timed_run(const ScenarioConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  TimedRun r{config, run(config), 0.0};
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

bool all_passed(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

double demand_at(const ScenarioConfig& config, double t) {
  if (const auto* wp = std::get_if<WorkloadProfile>(&config.load.demand))
    return LoadSampler(*wp).sample(t);
  return std::get<SampledTrace>(config.load.demand).sample(t);
}

std::vector<Check> filter_design(int samples, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_z(std::log(0.01), std::log(1000.0));
  std::uniform_real_distribution<double> freq(10.0, 1000.0);
  double worst_l = 0.0, worst_lc = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < samples; ++k) {
    const double z = std::exp(log_z(rng));
    const double f = freq(rng);
    const FilterParams fp = design_filter(z, f, kDefaultGridSideRatio);
    const double w = kTwoPi * f;
    worst_l = std::max(worst_l, std::abs(w * fp.l_f / (0.15 * z) - 1.0));
    worst_lc = std::max(worst_lc, std::abs(w * w * fp.l_f * fp.c_f / 0.0225 - 1.0));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {make("omega*L_f = 0.15*Z_base", worst_l <= 1e-9, fmt::format("max rel err {:.2e}", worst_l)),
          make("omega^2*L_f*C_f = 0.0225", worst_lc <= 1e-9, fmt::format("max rel err {:.2e}", worst_lc)),
          runtime_check(secs, 1.0)};
}

std::vector<Check> power_identity(int samples, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  double worst_p = 0.0, worst_q = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < samples; ++k) {
    // Zero-sum phase quantities carry no zero-sequence component.
    const double va = u(rng), vb = u(rng), ia = u(rng), ib = u(rng);
    const AbcTriple v{va, vb, -va - vb}, i{ia, ib, -ia - ib};
    const double theta = angle(rng);
    const PowerPair dq = measure_power(park(v, theta), park(i, theta), PowerMode::exact);
    const double p_abc = (2.0 / 3.0) * (v.a * i.a + v.b * i.b + v.c * i.c);
    const double q_abc = (2.0 / 3.0) / std::sqrt(3.0) *
                         ((v.b - v.c) * i.a + (v.c - v.a) * i.b + (v.a - v.b) * i.c);
    worst_p = std::max(worst_p, std::abs(dq.p - p_abc));
    worst_q = std::max(worst_q, std::abs(dq.q - q_abc));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {make("dq active power equals abc power", worst_p <= 1e-10, fmt::format("max abs err {:.2e}", worst_p)),
          make("dq reactive power equals abc power", worst_q <= 1e-10, fmt::format("max abs err {:.2e}", worst_q)),
          runtime_check(secs, 1.0)};
}

std::vector<Check> droop_fixed_point() {
  const PerUnitBase base{13'800.0, 5.0e6, 60.0};
  ScenarioConfig c;
  c.name = "droop_fixed_point";
  c.system_base = base;
  c.units = {make_unit(base)};
  c.units[0].droop.k_p = 0.01;
  c.units[0].droop.p_ref = 0.0;
  c.dispatch = {DispatchMode::fixed, 1.0};
  c.load.demand = SampledTrace({{0.0, 0.5 * base.s_nominal / 1e6}});
  c.events.breaker = BreakerSpec{0.1, true};
  c.duration = 2.0;
  const TimedRun r = timed_run(c);

  const DroopParams& d = c.units[0].droop;
  const double f_oracle = d.omega_ref * (1.0 + d.k_p * (d.p_ref - 0.5)) / kTwoPi;
  double worst = 0.0;
  const SimTrace& tr = r.result.trace;
  for (std::size_t k = 0; k < tr.size(); ++k)
    if (tr.t[k] >= 1.5) worst = std::max(worst, std::abs(tr.f_hz[k] - f_oracle));
  return {status_check(r),
          make(fmt::format("f settles to {:.3f} Hz +- 0.01 Hz by 2 s", f_oracle),
               r.result.ok() && tr.size() > 0 && worst <= 0.01,
               fmt::format("final {:.5f} Hz, worst dev over [1.5, 2] s {:.2e} Hz",
                           tr.size() ? tr.f_hz.back() : 0.0, worst)),
          runtime_check(r.seconds, 5.0)};
}

std::vector<Check> equal_sharing(const TimedRun& a) {
  const SimTrace& tr = a.result.trace;
  const std::size_t units = tr.unit_count();
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (tr.t[k] < 1.0) continue;
    for (std::size_t i = 0; i < units; ++i)
      for (std::size_t j = i + 1; j < units; ++j)
        worst = std::max(worst, std::abs(tr.p_unit_mw[i][k] - tr.p_unit_mw[j][k]));
  }
  bool rated = units == 8;
  for (const auto& u : a.config.units) rated = rated && u.base.s_nominal == 5.0e6;
  return {status_check(a),
          make("eight 5 MVA units", rated, fmt::format("{} units", units)),
          make("pairwise P difference < 1% of 5 MW", a.result.ok() && worst < 0.05,
               fmt::format("max {:.3e} MW ({:.2e} %)", worst, worst / 5.0 * 100.0)),
          runtime_check(a.seconds, 60.0)};
}

std::vector<Check> frequency_mitigation(const TimedRun& with_bess, const TimedRun& without_bess) {
  std::vector<Check> out{status_check(with_bess), status_check(without_bess)};
  if (!with_bess.result.ok() || !without_bess.result.ok()) return out;
  const CompareReport rep = compare(with_bess.result.trace, without_bess.result.trace,
                                    with_bess.config.system_base.f_nominal);
  out.push_back(make("under-frequency deviation reduced >= 40%", rep.under_reduction_pct >= 40.0,
                     fmt::format("{:.1f}% (nadir {:.3f} -> {:.3f} Hz)", rep.under_reduction_pct,
                                 without_bess.result.metrics.f_min, with_bess.result.metrics.f_min)));
  out.push_back(make("over-frequency deviation reduced >= 40%", rep.over_reduction_pct >= 40.0,
                     fmt::format("{:.1f}% (peak {:.3f} -> {:.3f} Hz)", rep.over_reduction_pct,
                                 without_bess.result.metrics.f_max, with_bess.result.metrics.f_max)));
  return out;
}

std::vector<Check> reference_tracking() {
  ScenarioConfig c = default_scenario();
  c.name = "reference_tracking";
  // A very large grid rating holds frequency at nominal, so droop adds no offset.
  c.grid.rating_va = 1.0e12;
  const double t_step = 1.0, p0 = 20.0, p1 = 30.0;
  c.load.demand = SampledTrace({{0.0, p0}, {t_step - 1e-7, p0}, {t_step, p1}});
  c.dispatch = {DispatchMode::follow_load, 1.0};
  c.duration = 2.0;
  const TimedRun r = timed_run(c);
  const SimTrace& tr = r.result.trace;

  auto crossing = [&](double level) {
    for (std::size_t k = 1; k < tr.size(); ++k) {
      if (tr.t[k] < t_step) continue;
      const double a = tr.p_units_total(k - 1), b = tr.p_units_total(k);
      if (b >= level) {
        if (b == a) return tr.t[k];
        return tr.t[k - 1] + (level - a) / (b - a) * (tr.t[k] - tr.t[k - 1]);
      }
    }
    return std::numeric_limits<double>::infinity();
  };
  const double step = p1 - p0;
  const double rise = crossing(p0 + 0.9 * step) - crossing(p0 + 0.1 * step);
  double mean = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < tr.size(); ++k)
    if (tr.t[k] >= c.duration - 0.2) mean += tr.p_units_total(k), ++n;
  mean = n ? mean / n : 0.0;
  const double err = std::abs(mean - p1);
  return {status_check(r),
          make("10-90% rise time < 100 ms", r.result.ok() && rise < 0.1,
               fmt::format("{:.1f} ms", rise * 1e3)),
          make("steady-state error < 2% of step", r.result.ok() && err < 0.02 * step,
               fmt::format("{:.4f} MW ({:.3f}% of step)", err, 100.0 * err / step))};
}

std::vector<Check> fault_support(const TimedRun& with_bess, const TimedRun& without_bess) {
  std::vector<Check> out{status_check(with_bess), status_check(without_bess)};
  const ScenarioConfig& c = with_bess.config;
  if (!c.events.fault) {
    out.push_back(make("scenario has a fault event", false, "none"));
    return out;
  }
  const SimTrace& tr = with_bess.result.trace;
  const SimTrace& base = without_bess.result.trace;
  const auto* ev = find_event(with_bess.result.metrics, "fault_start");
  const auto* ev_clear = find_event(with_bess.result.metrics, "fault_clear");
  const double t0 = ev ? ev->t_applied : c.events.fault->t_start;
  const double t1 = ev_clear ? ev_clear->t_applied : c.events.fault->t_clear;

  double sag = INFINITY;
  for (std::size_t k = 0; k < base.size(); ++k)
    if (base.t[k] >= t0 && base.t[k] < t1) sag = std::min(sag, base.v_pcc[k]);
  out.push_back(make("pre-support sag below 0.9 pu", sag < 0.9,
                     fmt::format("v_pcc without support {:.4f} pu", sag)));

  double v_lo = INFINITY, v_hi = -INFINITY, q_peak = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (tr.t[k] < t0 || tr.t[k] >= t1) continue;
    q_peak = std::max(q_peak, tr.q_units_total(k));
    if (tr.t[k] < t0 + 0.1) continue;
    v_lo = std::min(v_lo, tr.v_pcc[k]);
    v_hi = std::max(v_hi, tr.v_pcc[k]);
  }
  out.push_back(make("v_pcc recovers into [0.9, 1.1] pu during support",
                     v_lo >= 0.9 && v_hi <= 1.1,
                     fmt::format("[{:.4f}, {:.4f}] pu after 100 ms", v_lo, v_hi)));
  out.push_back(make("peak aggregate Q >= 4 MVar", q_peak >= 4.0, fmt::format("{:.3f} MVar", q_peak)));

  const double excursion = longest_excursion(tr, 0.0, INFINITY, [&](std::size_t k) {
    const double d = demand_at(c, tr.t[k]);
    return std::abs(tr.p_load_mw[k] - d) <= 0.1 * d;
  });
  out.push_back(make("load P within +-10% of demand except transients < 100 ms", excursion < 0.1,
                     fmt::format("longest excursion {:.1f} ms", excursion * 1e3)));
  out.push_back(runtime_check(with_bess.seconds, 60.0));
  return out;
}

std::vector<Check> islanding(const TimedRun& r) {
  std::vector<Check> out{status_check(r)};
  const ScenarioConfig& c = r.config;
  if (!c.events.breaker) {
    out.push_back(make("scenario has a breaker event", false, "none"));
    return out;
  }
  const SimTrace& tr = r.result.trace;
  const std::int64_t k_open = std::llround(c.events.breaker->t_open / c.dt);
  const double t_open = static_cast<double>(k_open) * c.dt;

  int flips = 0;
  double t_flip = NAN;
  for (std::size_t k = 1; k < tr.size(); ++k)
    if (tr.breaker_closed[k] != tr.breaker_closed[k - 1]) {
      ++flips;
      t_flip = tr.t[k];
    }
  out.push_back(make(fmt::format("breaker flag flips once at {:g} s", c.events.breaker->t_open),
                     flips == 1 && std::abs(t_flip - t_open) < 0.5 * c.dt,
                     fmt::format("{} flip(s), at {:.4f} s", flips, t_flip)));

  const double t_settle = t_open + 0.05;
  double v_lo = INFINITY, v_hi = -INFINITY, f_lo = INFINITY, f_hi = -INFINITY, ratio = INFINITY;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (tr.t[k] < t_settle) continue;
    v_lo = std::min(v_lo, tr.v_pcc[k]);
    v_hi = std::max(v_hi, tr.v_pcc[k]);
    f_lo = std::min(f_lo, tr.f_hz[k]);
    f_hi = std::max(f_hi, tr.f_hz[k]);
    ratio = std::min(ratio, tr.p_load_mw[k] / demand_at(c, tr.t[k]));
  }
  out.push_back(make("v_pcc in [0.95, 1.05] pu after 50 ms", v_lo >= 0.95 && v_hi <= 1.05,
                     fmt::format("[{:.4f}, {:.4f}] pu", v_lo, v_hi)));
  out.push_back(make("frequency in [59.4, 60.6] Hz after 50 ms", f_lo >= 59.4 && f_hi <= 60.6,
                     fmt::format("[{:.4f}, {:.4f}] Hz", f_lo, f_hi)));
  out.push_back(make("load P >= 90% of demand after 50 ms", ratio >= 0.9,
                     fmt::format("min {:.2f}% of demand", 100.0 * ratio)));
  out.push_back(runtime_check(r.seconds, 60.0));
  return out;
}

namespace {

ScenarioConfig convergence_case(double dt, int decimation) {
  ScenarioConfig c;
  c.name = "convergence";
  c.units = {make_unit({13'800.0, 5.0e6, 60.0})};
  c.dispatch = {DispatchMode::follow_load, 0.25};
  // The step sits on a sample boundary shared by every step size.
  c.load.demand = SampledTrace({{0.0, 10.0}, {0.25 - 1e-7, 10.0}, {0.25, 12.0}});
  c.duration = 0.6;
  c.dt = dt;
  c.decimation = decimation;
  return c;
}

double max_trace_difference(const SimTrace& a, const SimTrace& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    m = std::max(m, std::abs(a.v_pcc[k] - b.v_pcc[k]));
    m = std::max(m, std::abs(a.f_hz[k] - b.f_hz[k]) / 60.0);
    for (std::size_t u = 0; u < a.unit_count(); ++u) {
      m = std::max(m, std::abs(a.p_unit_mw[u][k] - b.p_unit_mw[u][k]) / 5.0);
      m = std::max(m, std::abs(a.q_unit_mvar[u][k] - b.q_unit_mvar[u][k]) / 5.0);
    }
  }
  return m;
}

}  // namespace

std::vector<Check> numerical_soundness(const std::vector<const TimedRun*>& accepted) {
  const double dt = 1.0e-4;
  const TimedRun r1 = timed_run(convergence_case(dt, 10));
  const TimedRun r2 = timed_run(convergence_case(dt / 2, 20));
  const TimedRun r4 = timed_run(convergence_case(dt / 4, 40));
  const double e1 = max_trace_difference(r1.result.trace, r2.result.trace);
  const double e2 = max_trace_difference(r2.result.trace, r4.result.trace);
  const double ratio = e1 / e2;

  std::vector<const TimedRun*> all = accepted;
  all.insert(all.end(), {&r1, &r2, &r4});
  double residual = 0.0, kcl = 0.0;
  bool finite = true, ok = true;
  for (const TimedRun* r : all) {
    ok = ok && r->result.ok();
    residual = std::max(residual, r->result.metrics.max_power_balance_residual_pu);
    kcl = std::max(kcl, r->result.metrics.max_kcl_residual_pu);
    finite = finite && all_finite(r->result.trace);
  }
  return {make("dt-halving error contraction >= 8x", r1.result.ok() && r2.result.ok() &&
                                                         r4.result.ok() && ratio >= 8.0,
               fmt::format("{:.1f}x (e(dt,dt/2) {:.2e}, e(dt/2,dt/4) {:.2e})", ratio, e1, e2)),
          make("halving dt changes samples by < 1e-4 pu", e1 < 1e-4, fmt::format("{:.2e} pu", e1)),
          make("bus power balance residual < 1e-6 pu at every step", ok && residual < 1e-6,
               fmt::format("max {:.2e} pu (KCL {:.2e} pu) over {} runs", residual, kcl, all.size())),
          make("no NaN/Inf in accepted traces", ok && finite, finite ? "all finite" : "non-finite sample")};
}

std::vector<Check> determinism(const TimedRun& first) {
  const TimedRun second = timed_run(first.config);
  const std::string a = trace_to_csv(first.result.trace);
  const std::string b = trace_to_csv(second.result.trace);
  return {make(fmt::format("{}: repeated run gives a byte-identical CSV", first.config.name),
               first.result.ok() && a == b, fmt::format("{} bytes, {}", a.size(), a == b ? "identical" : "different"))};
}

std::vector<Check> check_preset(std::string_view name) {
  const ScenarioConfig cfg = preset(name);
  if (name == "scenario_a") {
    ScenarioConfig twin = cfg;
    twin.bess_enabled = false;
    const TimedRun with = timed_run(cfg), without = timed_run(twin);
    auto out = equal_sharing(with);
    for (auto& c : frequency_mitigation(with, without))
      if (c.name.find("run completes") == std::string::npos || c.name.find("without BESS") != std::string::npos) out.push_back(std::move(c));
    return out;
  }
  if (name == "scenario_b") {
    ScenarioConfig twin = cfg;
    twin.bess_enabled = false;
    return fault_support(timed_run(cfg), timed_run(twin));
  }
  if (name == "scenario_c") return islanding(timed_run(cfg));
  throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
}

}  // namespace gfmdc::acceptance
