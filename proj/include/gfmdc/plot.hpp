#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gfmdc/sim_engine.hpp"

namespace gfmdc {

struct PlotSeries {
  std::string label;
  std::vector<double> y;
};

struct PlotPanel {
  std::string title;
  std::string y_label;
  std::vector<PlotSeries> series;
};

/// Static line chart sharing the trace time axis.
std::string render_svg(const PlotPanel& panel, const std::vector<double>& t);

/// PCC voltage, frequency, active power and reactive power panels.
std::vector<std::pair<std::string, PlotPanel>> standard_panels(const SimTrace& trace);

/// Writes one SVG per standard panel into `dir`; returns the written paths.
std::vector<std::filesystem::path> write_plots(const SimTrace& trace, const std::filesystem::path& dir);

}  // namespace gfmdc
