#include <doctest.h>

#include <filesystem>
#include <string>

#include "gfmdc/plot.hpp"
#include "gfmdc/trace_io.hpp"

using namespace gfmdc;

namespace {

SimTrace short_run() {
  ScenarioConfig c = preset("scenario_b");
  c.duration = 0.2;
  c.events.fault = FaultSpec{0.05, 0.15, 0.85};
  return run(c).trace;
}

std::size_t count(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (auto p = s.find(what); p != std::string::npos; p = s.find(what, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("svg structure") {
  const PlotPanel panel{"Title <&>", "y", {{"a", {1.0, 2.0, 3.0}}, {"b", {3.0, 2.0, 1.0}}}};
  const std::string svg = render_svg(panel, {0.0, 1.0, 2.0});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count(svg, "<polyline") == 2);
  CHECK(svg.find("Title &lt;&amp;&gt;") != std::string::npos);
}

TEST_CASE("degenerate inputs still render") {
  CHECK_NOTHROW(render_svg({"flat", "y", {{"c", {2.0, 2.0}}}}, {0.0, 1.0}));
  CHECK_NOTHROW(render_svg({"empty", "y", {}}, {}));
  CHECK_NOTHROW(render_svg({"nan", "y", {{"n", {NAN, 1.0}}}}, {0.0, 1.0}));
}

TEST_CASE("long series are thinned") {
  std::vector<double> t(100'000), y(100'000);
  for (std::size_t k = 0; k < t.size(); ++k) {
    t[k] = 1e-3 * static_cast<double>(k);
    y[k] = k == 54'321 ? 10.0 : 0.0;
  }
  const std::string svg = render_svg({"spike", "y", {{"s", y}}}, t);
  CHECK(svg.size() < 200'000);
  CHECK(count(svg, " ") < 10'000);
}

TEST_CASE("standard panels and files") {
  const SimTrace tr = short_run();
  const auto panels = standard_panels(tr);
  REQUIRE(panels.size() == 4);
  CHECK(panels[0].first == "v_pcc");
  CHECK(panels[1].first == "frequency");
  CHECK(panels[2].first == "active_power");
  CHECK(panels[3].first == "reactive_power");

  const std::string before = trace_to_csv(tr);
  const std::filesystem::path dir = GFMDC_TEST_TMP;
  std::filesystem::create_directories(dir);
  const auto files = write_plots(tr, dir);
  CHECK(files.size() == 4);
  for (const auto& f : files) CHECK(std::filesystem::file_size(f) > 500);
  CHECK(trace_to_csv(tr) == before);
}
