#include "gfmdc/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace gfmdc {

namespace {

void put_number(std::string& line, double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  line.append(buf, ptr);
}

std::vector<std::string> header(std::size_t units) {
  std::vector<std::string> cols{"t_s", "v_pcc_pu", "f_hz"};
  for (std::size_t k = 1; k <= units; ++k) cols.push_back("p_unit" + std::to_string(k) + "_mw");
  for (std::size_t k = 1; k <= units; ++k) cols.push_back("q_unit" + std::to_string(k) + "_mvar");
  for (const char* c : {"p_grid_mw", "p_load_mw", "fault_active", "breaker_closed"}) cols.push_back(c);
  return cols;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                      : comma - start));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

}  // namespace

void write_trace_csv(std::ostream& out, const SimTrace& tr) {
  out << kTraceVersionLine << '\n';
  const auto cols = header(tr.unit_count());
  std::string line;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) line += ',';
    line += cols[c];
  }
  out << line << '\n';
  for (std::size_t k = 0; k < tr.size(); ++k) {
    line.clear();
    put_number(line, tr.t[k]);
    line += ',';
    put_number(line, tr.v_pcc[k]);
    line += ',';
    put_number(line, tr.f_hz[k]);
    for (const auto& s : tr.p_unit_mw) {
      line += ',';
      put_number(line, s[k]);
    }
    for (const auto& s : tr.q_unit_mvar) {
      line += ',';
      put_number(line, s[k]);
    }
    line += ',';
    put_number(line, tr.p_grid_mw[k]);
    line += ',';
    put_number(line, tr.p_load_mw[k]);
    line += tr.fault_active[k] ? ",1" : ",0";
    line += tr.breaker_closed[k] ? ",1\n" : ",0\n";
    out << line;
  }
}

std::string trace_to_csv(const SimTrace& trace) {
  std::ostringstream ss;
  write_trace_csv(ss, trace);
  return ss.str();
}

void save_trace_csv(const std::filesystem::path& path, const SimTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_trace_csv(out, trace);
}

SimTrace read_trace_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && line.front() != '#') return true;
    }
    return false;
  };
  if (!next_line()) throw TraceFormatError(line_no, "missing header row");

  const auto names = split(line);
  if (names.size() < 7 || (names.size() - 7) % 2 != 0)
    throw TraceFormatError(line_no, "unexpected column count in header");
  const std::size_t units = (names.size() - 7) / 2;
  const auto expected = header(units);
  for (std::size_t c = 0; c < expected.size(); ++c)
    if (names[c] != expected[c])
      throw TraceFormatError(line_no, "column " + std::to_string(c + 1) + " should be '" +
                                          expected[c] + "'");

  SimTrace tr;
  tr.p_unit_mw.assign(units, {});
  tr.q_unit_mvar.assign(units, {});
  std::vector<double> row(names.size());
  while (next_line()) {
    const auto fields = split(line);
    if (fields.size() != names.size())
      throw TraceFormatError(line_no, "expected " + std::to_string(names.size()) + " fields");
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto f = fields[c];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row[c]);
      if (ec != std::errc() || ptr != f.data() + f.size())
        throw TraceFormatError(line_no, "field " + std::to_string(c + 1) + " is not a number");
    }
    if (!tr.t.empty() && !(row[0] > tr.t.back()))
      throw TraceFormatError(line_no, "time must be strictly increasing");
    std::size_t c = 0;
    tr.t.push_back(row[c++]);
    tr.v_pcc.push_back(row[c++]);
    tr.f_hz.push_back(row[c++]);
    for (auto& s : tr.p_unit_mw) s.push_back(row[c++]);
    for (auto& s : tr.q_unit_mvar) s.push_back(row[c++]);
    tr.p_grid_mw.push_back(row[c++]);
    tr.p_load_mw.push_back(row[c++]);
    for (auto* flags : {&tr.fault_active, &tr.breaker_closed}) {
      const double v = row[c++];
      if (v != 0.0 && v != 1.0) throw TraceFormatError(line_no, "flag columns must be 0 or 1");
      flags->push_back(v != 0.0 ? 1 : 0);
    }
  }
  return tr;
}

SimTrace load_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceFormatError(0, "cannot read trace '" + path.string() + "'");
  return read_trace_csv(in);
}

std::string metrics_to_json(const SimResult& r, const ScenarioConfig& config) {
  using json = nlohmann::ordered_json;
  const SummaryMetrics& m = r.metrics;
  json events = json::array();
  for (const auto& e : m.events)
    events.push_back({{"name", e.name},
                      {"t_scheduled_seconds", e.t_scheduled},
                      {"t_applied_seconds", e.t_applied},
                      {"step", e.step}});
  json windows = json::array();
  for (const auto& w : m.windows)
    windows.push_back({{"name", w.name},
                       {"t_begin_seconds", w.t_begin},
                       {"t_end_seconds", w.t_end},
                       {"v_min_pu", w.v_min},
                       {"v_max_pu", w.v_max},
                       {"f_min_hz", w.f_min},
                       {"f_max_hz", w.f_max},
                       {"q_units_peak_mvar", w.q_units_peak_mvar},
                       {"p_load_min_mw", w.p_load_min_mw},
                       {"p_load_max_mw", w.p_load_max_mw}});
  const json doc = {{"scenario", config.name},
                    {"status", std::string(to_string(r.status))},
                    {"diagnostic", r.diagnostic},
                    {"samples", r.trace.size()},
                    {"steps", m.steps},
                    {"f_min_hz", m.f_min},
                    {"f_max_hz", m.f_max},
                    {"v_min_pu", m.v_min},
                    {"v_max_pu", m.v_max},
                    {"max_p_tracking_error_mw", m.max_p_tracking_error_mw},
                    {"sharing_imbalance_pct", m.sharing_imbalance_pct},
                    {"max_kcl_residual_pu", m.max_kcl_residual_pu},
                    {"max_power_balance_residual_pu", m.max_power_balance_residual_pu},
                    {"p_sched_mw", m.p_sched_mw},
                    {"events", events},
                    {"windows", windows}};
  return doc.dump(2) + "\n";
}

std::string compare_to_json(const CompareReport& r) {
  using json = nlohmann::ordered_json;
  auto dev = [](const DeviationSet& d) {
    return json{{"under_frequency_hz", d.under_hz},
                {"over_frequency_hz", d.over_hz},
                {"voltage_dip_pu", d.v_dip_pu}};
  };
  const json doc = {{"with_bess", dev(r.with_bess)},
                    {"without_bess", dev(r.without_bess)},
                    {"under_frequency_reduction_pct", r.under_reduction_pct},
                    {"over_frequency_reduction_pct", r.over_reduction_pct},
                    {"voltage_dip_reduction_pct", r.v_dip_reduction_pct}};
  return doc.dump(2) + "\n";
}

}  // namespace gfmdc
