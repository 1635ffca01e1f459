#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "gfmdc/acceptance.hpp"
#include "gfmdc/config.hpp"
#include "gfmdc/gfm_control.hpp"
#include "gfmdc/pu_base.hpp"
#include "gfmdc/signal.hpp"
#include "gfmdc/sim_engine.hpp"
#include "gfmdc/trace_io.hpp"

namespace py = pybind11;
using namespace gfmdc;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<std::uint8_t> to_array(const std::vector<std::uint8_t>& v) {
  return py::array_t<std::uint8_t>(v.size(), v.data());
}

py::dict trace_dict(const SimTrace& tr) {
  py::dict d;
  d["t_s"] = to_array(tr.t);
  d["v_pcc_pu"] = to_array(tr.v_pcc);
  d["f_hz"] = to_array(tr.f_hz);
  for (std::size_t k = 0; k < tr.unit_count(); ++k) {
    d[py::str("p_unit" + std::to_string(k + 1) + "_mw")] = to_array(tr.p_unit_mw[k]);
    d[py::str("q_unit" + std::to_string(k + 1) + "_mvar")] = to_array(tr.q_unit_mvar[k]);
  }
  d["p_grid_mw"] = to_array(tr.p_grid_mw);
  d["p_load_mw"] = to_array(tr.p_load_mw);
  d["fault_active"] = to_array(tr.fault_active);
  d["breaker_closed"] = to_array(tr.breaker_closed);
  return d;
}

ScenarioConfig resolve(const std::string& config_json, const std::vector<std::string>& overrides,
                       const std::string& base_dir) {
  const ScenarioConfig base = parse_config(config_json, base_dir);
  std::vector<Override> parsed;
  for (const auto& o : overrides) parsed.push_back(parse_override(o));
  return apply_overrides(base, parsed, base_dir);
}

py::dict run_json(const std::string& config_json, const std::vector<std::string>& overrides,
                  const std::string& base_dir) {
  const ScenarioConfig cfg = resolve(config_json, overrides, base_dir);
  SimResult r;
  {
    py::gil_scoped_release release;
    r = run(cfg);
  }
  py::dict out;
  out["status"] = std::string(to_string(r.status));
  out["diagnostic"] = r.diagnostic;
  out["metrics_json"] = metrics_to_json(r, cfg);
  out["trace"] = trace_dict(r.trace);
  out["trace_csv"] = trace_to_csv(r.trace);
  return out;
}

SimTrace parse_csv(const std::string& text) {
  std::istringstream in(text);
  return read_trace_csv(in);
}

}  // namespace

PYBIND11_MODULE(_gfmdc, m) {
  m.doc() = "Grid-forming BESS and data-center load simulator core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<TraceFormatError>(m, "TraceFormatError", PyExc_ValueError);

  m.def("preset_names", &preset_names);
  m.def("preset_json", [](const std::string& name) { return config_to_json(preset(name)); }, py::arg("name"));
  m.def("default_json", [] { return config_to_json(default_scenario()); });
  m.def("normalize_json",
        [](const std::string& text, const std::vector<std::string>& overrides, const std::string& base_dir) {
          return config_to_json(resolve(text, overrides, base_dir));
        },
        py::arg("config_json"), py::arg("overrides") = std::vector<std::string>{}, py::arg("base_dir") = "");
  m.def("run_json", &run_json, py::arg("config_json"), py::arg("overrides") = std::vector<std::string>{},
        py::arg("base_dir") = "");

  m.def("compare_csv",
        [](const std::string& with_csv, const std::string& without_csv) {
          return compare_to_json(compare(parse_csv(with_csv), parse_csv(without_csv)));
        },
        py::arg("with_bess_csv"), py::arg("without_bess_csv"));
  m.def("roundtrip_csv", [](const std::string& text) { return trace_to_csv(parse_csv(text)); });

  m.def("check_preset",
        [](const std::string& name) {
          std::vector<py::tuple> out;
          for (const auto& c : acceptance::check_preset(name)) out.push_back(py::make_tuple(c.name, c.passed, c.measured));
          return out;
        },
        py::arg("name"));

  m.def("compute_base_impedance",
        [](double v, double s, double f) { return compute_base_impedance({v, s, f}); }, py::arg("v_nominal"),
        py::arg("s_nominal"), py::arg("f_nominal") = 60.0);
  m.def("design_filter",
        [](double z, double f, double l_g_ratio, double ratio) {
          const FilterParams p = design_filter(z, f, l_g_ratio, ratio);
          return py::make_tuple(p.l_f, p.c_f, p.l_g);
        },
        py::arg("z_base"), py::arg("f"), py::arg("l_g_ratio") = kDefaultGridSideRatio,
        py::arg("design_ratio") = kFilterDesignRatio);
  m.def("measure_power",
        [](std::pair<double, double> v, std::pair<double, double> i, bool exact) {
          const PowerPair s = measure_power({v.first, v.second}, {i.first, i.second},
                                            exact ? PowerMode::exact : PowerMode::approximate);
          return py::make_tuple(s.p, s.q);
        },
        py::arg("v"), py::arg("i"), py::arg("exact") = true);
  m.def("park",
        [](std::tuple<double, double, double> abc, double theta) {
          const DqPair dq = park({std::get<0>(abc), std::get<1>(abc), std::get<2>(abc)}, theta);
          return py::make_tuple(dq.d, dq.q);
        },
        py::arg("abc"), py::arg("theta"));
  m.def("inverse_park",
        [](std::pair<double, double> dq, double theta) {
          const AbcTriple abc = inverse_park({dq.first, dq.second}, theta);
          return py::make_tuple(abc.a, abc.b, abc.c);
        },
        py::arg("dq"), py::arg("theta"));
  m.def("sample_load",
        [](const std::string& config_json, double t) {
          return acceptance::demand_at(parse_config(config_json), t);
        },
        py::arg("config_json"), py::arg("t"));
}
