#include "gfmdc/config.hpp"

#include <charconv>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

namespace gfmdc {

using json = nlohmann::ordered_json;

ConfigError::ConfigError(std::string field, const std::string& message, int line, int column)
    : std::runtime_error([&] {
        if (line > 0)
          return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                 message;
        return field.empty() ? message : field + ": " + message;
      }()),
      field_(std::move(field)),
      line_(line),
      column_(column) {}

namespace {

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string index_path(const std::string& path, std::size_t index) {
  return path + "[" + std::to_string(index) + "]";
}

// Object reader that records consumed keys so leftovers can be reported.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  bool has(std::string_view key) const { return j_.contains(key) && !j_.at(std::string(key)).is_null(); }

  const json* child(std::string_view key) {
    used_.insert(std::string(key));
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  void number(std::string_view key, double& out) {
    if (const json* v = child(key)) {
      if (!v->is_number()) throw ConfigError(join(path_, key), "expected a number");
      out = v->get<double>();
    }
  }

  void boolean(std::string_view key, bool& out) {
    if (const json* v = child(key)) {
      if (!v->is_boolean()) throw ConfigError(join(path_, key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(std::string_view key, std::string& out) {
    if (const json* v = child(key)) {
      if (!v->is_string()) throw ConfigError(join(path_, key), "expected a string");
      out = v->get<std::string>();
    }
  }

  template <class Int>
  void integer(std::string_view key, Int& out) {
    if (const json* v = child(key)) {
      const bool ok = std::is_signed_v<Int> ? v->is_number_integer() : v->is_number_unsigned();
      if (!ok)
        throw ConfigError(join(path_, key), std::is_signed_v<Int> ? "expected an integer"
                                                                  : "expected a non-negative integer");
      out = v->get<Int>();
    }
  }

  template <class Enum, class Options>
  void choice(std::string_view key, Enum& out, const Options& options) {
    if (const json* v = child(key)) {
      const std::string field = join(path_, key);
      if (!v->is_string()) throw ConfigError(field, "expected a string");
      const std::string s = v->get<std::string>();
      std::string allowed;
      for (const auto& [name, value] : options) {
        if (s == name) {
          out = value;
          return;
        }
        allowed += (allowed.empty() ? "" : ", ") + std::string(name);
      }
      throw ConfigError(field, "unknown value '" + s + "' (expected one of: " + allowed + ")");
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw ConfigError(join(path_, key), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

constexpr std::pair<std::string_view, PowerMode> kPowerModes[] = {
    {"exact", PowerMode::exact}, {"approximate", PowerMode::approximate}};
constexpr std::pair<std::string_view, LpfMode> kLpfModes[] = {
    {"exponential", LpfMode::exponential}, {"forward_euler", LpfMode::forward_euler}};
constexpr std::pair<std::string_view, DispatchMode> kDispatchModes[] = {
    {"follow_load", DispatchMode::follow_load}, {"fixed", DispatchMode::fixed}};
constexpr std::pair<std::string_view, SchedulePolicy> kSchedules[] = {
    {"initial", SchedulePolicy::initial}, {"mean", SchedulePolicy::mean},
    {"fixed", SchedulePolicy::fixed}};
constexpr std::pair<std::string_view, ControllerMode> kControllerModes[] = {
    {"continuous", ControllerMode::continuous}, {"sampled", ControllerMode::sampled}};

template <class Enum, class Options>
std::string name_of(Enum value, const Options& options) {
  for (const auto& [name, v] : options)
    if (v == value) return std::string(name);
  return "";
}

void read_base(Reader r, PerUnitBase& b, bool with_voltage = true) {
  if (with_voltage) r.number("v_nominal_volts", b.v_nominal);
  r.number("s_nominal_va", b.s_nominal);
  r.number("f_nominal_hz", b.f_nominal);
  r.finish();
}

json write_base(const PerUnitBase& b) {
  return {{"v_nominal_volts", b.v_nominal}, {"s_nominal_va", b.s_nominal},
          {"f_nominal_hz", b.f_nominal}};
}

void read_filter(Reader r, const PerUnitBase& base, FilterParams& f) {
  const bool explicit_values = r.has("l_f_henry") || r.has("c_f_farad") || r.has("l_g_henry");
  const bool designed = r.has("design_ratio") || r.has("l_g_ratio");
  if (explicit_values && designed)
    throw ConfigError(r.path(), "give either l_f_henry/c_f_farad/l_g_henry or design_ratio/l_g_ratio");
  if (explicit_values) {
    for (const char* key : {"l_f_henry", "c_f_farad", "l_g_henry"})
      if (!r.has(key)) throw ConfigError(join(r.path(), key), "required with explicit filter values");
    r.number("l_f_henry", f.l_f);
    r.number("c_f_farad", f.c_f);
    r.number("l_g_henry", f.l_g);
  } else {
    double ratio = kFilterDesignRatio, lg = kDefaultGridSideRatio;
    r.number("design_ratio", ratio);
    r.number("l_g_ratio", lg);
    try {
      validate(base);
      f = design_filter(base.z_base(), base.f_nominal, lg, ratio);
    } catch (const std::domain_error& e) {
      throw ConfigError(r.path(), e.what());
    }
  }
  r.finish();
}

void read_droop(Reader r, DroopParams& d) {
  r.number("k_p_pu", d.k_p);
  r.number("k_q_pu", d.k_q);
  r.number("omega_p_rad_per_s", d.omega_p);
  r.number("omega_q_rad_per_s", d.omega_q);
  r.number("p_ref_pu", d.p_ref);
  r.number("q_ref_pu", d.q_ref);
  r.number("v_ref_pu", d.v_ref);
  r.number("omega_ref_rad_per_s", d.omega_ref);
  r.finish();
}

json write_droop(const DroopParams& d) {
  return {{"k_p_pu", d.k_p},
          {"k_q_pu", d.k_q},
          {"omega_p_rad_per_s", d.omega_p},
          {"omega_q_rad_per_s", d.omega_q},
          {"p_ref_pu", d.p_ref},
          {"q_ref_pu", d.q_ref},
          {"v_ref_pu", d.v_ref},
          {"omega_ref_rad_per_s", d.omega_ref}};
}

void read_gains(Reader r, LoopGains& g) {
  r.number("k_pv", g.k_pv);
  r.number("k_iv", g.k_iv);
  r.number("k_pi", g.k_pi);
  r.number("k_ii", g.k_ii);
  r.number("feed_forward_f", g.feed_forward_f);
  r.number("current_limit_pu", g.current_limit);
  r.number("voltage_limit_pu", g.voltage_limit);
  r.finish();
}

json write_gains(const LoopGains& g) {
  return {{"k_pv", g.k_pv},
          {"k_iv", g.k_iv},
          {"k_pi", g.k_pi},
          {"k_ii", g.k_ii},
          {"feed_forward_f", g.feed_forward_f},
          {"current_limit_pu", g.current_limit},
          {"voltage_limit_pu", g.voltage_limit}};
}

void read_units(const json& arr, const std::string& path, std::vector<UnitConfig>& units) {
  if (!arr.is_array()) throw ConfigError(path, "expected an array");
  units.clear();
  for (std::size_t k = 0; k < arr.size(); ++k) {
    Reader r(arr[k], index_path(path, k));
    std::int64_t count = 1;
    r.integer("count", count);
    if (count < 0) throw ConfigError(join(r.path(), "count"), "must be non-negative");
    PerUnitBase base{13'800.0, 5.0e6, 60.0};
    if (const json* b = r.child("base")) read_base(Reader(*b, join(r.path(), "base")), base);
    UnitConfig u;
    u.base = base;
    u.droop.omega_ref = 2.0 * std::numbers::pi * base.f_nominal;
    if (const json* f = r.child("filter"))
      read_filter(Reader(*f, join(r.path(), "filter")), base, u.filter);
    else
      read_filter(Reader(json::object(), join(r.path(), "filter")), base, u.filter);
    if (const json* d = r.child("droop")) read_droop(Reader(*d, join(r.path(), "droop")), u.droop);
    if (const json* g = r.child("gains")) read_gains(Reader(*g, join(r.path(), "gains")), u.gains);
    r.choice("power_mode", u.power_mode, kPowerModes);
    r.choice("lpf_mode", u.lpf_mode, kLpfModes);
    r.finish();
    units.insert(units.end(), static_cast<std::size_t>(count), u);
  }
}

json write_unit(const UnitConfig& u) {
  return {{"count", 1},
          {"base", write_base(u.base)},
          {"filter", {{"l_f_henry", u.filter.l_f}, {"c_f_farad", u.filter.c_f}, {"l_g_henry", u.filter.l_g}}},
          {"droop", write_droop(u.droop)},
          {"gains", write_gains(u.gains)},
          {"power_mode", name_of(u.power_mode, kPowerModes)},
          {"lpf_mode", name_of(u.lpf_mode, kLpfModes)}};
}

void read_profile(Reader r, WorkloadProfile& p) {
  r.number("p_idle_mw", p.p_idle);
  r.number("p_train_mw", p.p_train);
  r.number("ramp_rate_mw_per_s", p.ramp_rate);
  r.number("train_duration_seconds", p.train_duration);
  r.number("checkpoint_duration_seconds", p.checkpoint_duration);
  r.number("noise_amp_mw", p.noise_amp);
  r.number("noise_bandwidth_hz", p.noise_bandwidth);
  r.integer("seed", p.seed);
  r.finish();
}

json write_profile(const WorkloadProfile& p) {
  return {{"p_idle_mw", p.p_idle},
          {"p_train_mw", p.p_train},
          {"ramp_rate_mw_per_s", p.ramp_rate},
          {"train_duration_seconds", p.train_duration},
          {"checkpoint_duration_seconds", p.checkpoint_duration},
          {"noise_amp_mw", p.noise_amp},
          {"noise_bandwidth_hz", p.noise_bandwidth},
          {"seed", p.seed}};
}

SampledTrace read_trace_points(const json& arr, const std::string& path) {
  if (!arr.is_array()) throw ConfigError(path, "expected an array of [t_seconds, p_mw] pairs");
  std::vector<std::pair<double, double>> points;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const json& e = arr[k];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
      throw ConfigError(index_path(path, k), "expected [t_seconds, p_mw]");
    points.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  try {
    return SampledTrace(std::move(points));
  } catch (const TraceParseError& e) {
    throw ConfigError(path, e.what());
  }
}

void read_load(Reader r, const std::filesystem::path& base_dir, LoadConfig& load) {
  const int sources = int(r.has("profile")) + int(r.has("trace_path")) + int(r.has("trace_points"));
  if (sources > 1)
    throw ConfigError(r.path(), "give only one of profile, trace_path, trace_points");
  if (const json* p = r.child("profile")) {
    WorkloadProfile wp;
    read_profile(Reader(*p, join(r.path(), "profile")), wp);
    load.demand = wp;
  }
  if (const json* p = r.child("trace_path")) {
    if (!p->is_string()) throw ConfigError(join(r.path(), "trace_path"), "expected a string");
    std::filesystem::path file = p->get<std::string>();
    if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
    try {
      load.demand = load_trace_csv(file);
    } catch (const TraceParseError& e) {
      throw ConfigError(join(r.path(), "trace_path"), e.what());
    }
  }
  if (const json* p = r.child("trace_points"))
    load.demand = read_trace_points(*p, join(r.path(), "trace_points"));
  r.number("q_demand_mvar", load.q_demand_mvar);
  r.number("smoothing_seconds", load.smoothing);
  r.finish();
}

void read_grid(Reader r, GridConfig& g) {
  GridEquivalent& e = g.equivalent;
  r.number("e_mag_pu", e.e_mag);
  r.number("x_th_pu", e.x_th);
  r.number("h_seconds", e.h);
  r.number("damping_pu", e.d);
  r.number("r_gov_pu", e.r_gov);
  r.number("rating_va", g.rating_va);
  r.choice("schedule", g.schedule, kSchedules);
  r.number("p_sched_mw", g.p_sched_mw);
  r.finish();
}

void read_events(Reader r, EventsConfig& ev) {
  ev = {};
  if (const json* f = r.child("fault")) {
    Reader fr(*f, join(r.path(), "fault"));
    FaultSpec spec;
    fr.number("t_start_seconds", spec.t_start);
    fr.number("t_clear_seconds", spec.t_clear);
    fr.number("residual_v_pu", spec.residual_v);
    fr.finish();
    ev.fault = spec;
  }
  if (const json* b = r.child("breaker")) {
    Reader br(*b, join(r.path(), "breaker"));
    BreakerSpec spec;
    br.number("t_open_seconds", spec.t_open);
    br.boolean("initially_closed", spec.initially_closed);
    br.finish();
    ev.breaker = spec;
  }
  r.finish();
}

std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
  int line = 1, column = 1;
  for (std::size_t k = 0; k + 1 < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

json parse_json_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    std::string msg = e.what();
    if (const auto pos = msg.find("parse error"); pos != std::string::npos) msg = msg.substr(pos);
    throw ConfigError("", msg, line, column);
  }
}

ScenarioConfig from_json(const json& root, const std::filesystem::path& base_dir) {
  Reader r(root, "");
  if (!r.has("schema_version")) throw ConfigError("schema_version", "required field is missing");
  int version = 0;
  r.integer("schema_version", version);
  if (version != kConfigSchemaVersion)
    throw ConfigError("schema_version", "unsupported version " + std::to_string(version) +
                                            " (expected " + std::to_string(kConfigSchemaVersion) + ")");

  ScenarioConfig c = default_scenario();
  r.string("name", c.name);
  r.number("duration_seconds", c.duration);
  r.number("dt_seconds", c.dt);
  r.integer("decimation", c.decimation);
  r.boolean("bess_enabled", c.bess_enabled);
  r.choice("controller_mode", c.controller_mode, kControllerModes);
  if (const json* b = r.child("system_base")) read_base(Reader(*b, "system_base"), c.system_base);
  if (const json* d = r.child("dispatch")) {
    Reader dr(*d, "dispatch");
    dr.choice("mode", c.dispatch.mode, kDispatchModes);
    dr.number("fraction", c.dispatch.fraction);
    dr.finish();
  }
  if (const json* u = r.child("units")) read_units(*u, "units", c.units);
  if (const json* g = r.child("grid")) read_grid(Reader(*g, "grid"), c.grid);
  if (const json* l = r.child("load")) read_load(Reader(*l, "load"), base_dir, c.load);
  if (const json* e = r.child("events")) read_events(Reader(*e, "events"), c.events);
  r.finish();

  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(": ");
    if (colon == std::string::npos) throw ConfigError("", msg);
    throw ConfigError(msg.substr(0, colon), msg.substr(colon + 2));
  }
  return c;
}

json to_json_doc(const ScenarioConfig& c) {
  json units = json::array();
  std::string last;
  for (const UnitConfig& u : c.units) {
    json entry = write_unit(u);
    const std::string key = entry.dump();
    if (!units.empty() && key == last) {
      units.back()["count"] = units.back()["count"].get<int>() + 1;
    } else {
      units.push_back(entry);
      last = key;
    }
  }

  json load = json::object();
  if (const auto* wp = std::get_if<WorkloadProfile>(&c.load.demand)) {
    load["profile"] = write_profile(*wp);
  } else {
    json pts = json::array();
    for (const auto& [t, p] : std::get<SampledTrace>(c.load.demand).points()) pts.push_back({t, p});
    load["trace_points"] = pts;
  }
  load["q_demand_mvar"] = c.load.q_demand_mvar;
  load["smoothing_seconds"] = c.load.smoothing;

  json events = json::object();
  events["fault"] = nullptr;
  events["breaker"] = nullptr;
  if (c.events.fault)
    events["fault"] = {{"t_start_seconds", c.events.fault->t_start},
                       {"t_clear_seconds", c.events.fault->t_clear},
                       {"residual_v_pu", c.events.fault->residual_v}};
  if (c.events.breaker)
    events["breaker"] = {{"t_open_seconds", c.events.breaker->t_open},
                         {"initially_closed", c.events.breaker->initially_closed}};

  const GridEquivalent& g = c.grid.equivalent;
  return {{"schema_version", kConfigSchemaVersion},
          {"name", c.name},
          {"duration_seconds", c.duration},
          {"dt_seconds", c.dt},
          {"decimation", c.decimation},
          {"bess_enabled", c.bess_enabled},
          {"controller_mode", name_of(c.controller_mode, kControllerModes)},
          {"system_base", write_base(c.system_base)},
          {"dispatch", {{"mode", name_of(c.dispatch.mode, kDispatchModes)}, {"fraction", c.dispatch.fraction}}},
          {"units", units},
          {"grid",
           {{"e_mag_pu", g.e_mag},
            {"x_th_pu", g.x_th},
            {"h_seconds", g.h},
            {"damping_pu", g.d},
            {"r_gov_pu", g.r_gov},
            {"rating_va", c.grid.rating_va},
            {"schedule", name_of(c.grid.schedule, kSchedules)},
            {"p_sched_mw", c.grid.p_sched_mw}}},
          {"load", load},
          {"events", events}};
}

std::string resolve_alias(std::string_view key) {
  if (key == "dt") return "dt_seconds";
  if (key == "duration") return "duration_seconds";
  if (key == "seed") return "load.profile.seed";
  return std::string(key);
}

void set_path(json& root, const std::string& key, const json& value) {
  json* node = &root;
  std::string walked;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError(key, "malformed override key");
    walked = join(walked, part);
    json* next = nullptr;
    if (node->is_array()) {
      std::size_t index = 0;
      const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), index);
      if (ec != std::errc() || ptr != part.data() + part.size() || index >= node->size())
        throw ConfigError(walked, "array index out of range");
      next = &(*node)[index];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError(walked, "cannot descend into a non-object value");
      next = &(*node)[part];
    }
    if (dot == std::string::npos) {
      *next = value;
      return;
    }
    node = next;
    start = dot + 1;
  }
}

}  // namespace

ScenarioConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  return from_json(parse_json_text(json_text), base_dir);
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string config_to_json(const ScenarioConfig& config) { return to_json_doc(config).dump(2) + "\n"; }

Override parse_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError(std::string(assignment), "override must have the form key=value");
  return {std::string(assignment.substr(0, eq)), std::string(assignment.substr(eq + 1))};
}

ScenarioConfig apply_overrides(const ScenarioConfig& config, const std::vector<Override>& overrides,
                               const std::filesystem::path& base_dir) {
  if (overrides.empty()) return config;
  json doc = to_json_doc(config);
  for (const Override& o : overrides) {
    json value;
    try {
      value = json::parse(o.value);
    } catch (const json::parse_error&) {
      value = o.value;
    }
    set_path(doc, resolve_alias(o.key), value);
  }
  return from_json(doc, base_dir);
}

}  // namespace gfmdc
