#include "gfmdc/plot.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace gfmdc {

namespace {

constexpr double kWidth = 900, kHeight = 360;
constexpr double kLeft = 70, kRight = 150, kTop = 36, kBottom = 48;
constexpr std::size_t kMaxBuckets = 1500;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

// Keeps the min and max of each bucket so narrow spikes survive thinning.
std::vector<std::size_t> thin(const std::vector<double>& y) {
  std::vector<std::size_t> idx;
  const std::size_t n = y.size();
  if (n <= 2 * kMaxBuckets) {
    idx.resize(n);
    for (std::size_t k = 0; k < n; ++k) idx[k] = k;
    return idx;
  }
  const double width = static_cast<double>(n) / kMaxBuckets;
  for (std::size_t b = 0; b < kMaxBuckets; ++b) {
    const auto lo = static_cast<std::size_t>(b * width);
    const auto hi = std::min(n, static_cast<std::size_t>((b + 1) * width));
    const auto [mn, mx] = std::minmax_element(y.begin() + lo, y.begin() + hi);
    auto a = static_cast<std::size_t>(mn - y.begin());
    auto c = static_cast<std::size_t>(mx - y.begin());
    if (a > c) std::swap(a, c);
    idx.push_back(a);
    if (c != a) idx.push_back(c);
  }
  return idx;
}

double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const PlotPanel& panel, const std::vector<double>& t) {
  double y_lo = INFINITY, y_hi = -INFINITY;
  for (const auto& s : panel.series)
    for (double v : s.y)
      if (std::isfinite(v)) {
        y_lo = std::min(y_lo, v);
        y_hi = std::max(y_hi, v);
      }
  if (!std::isfinite(y_lo)) y_lo = 0.0, y_hi = 1.0;
  if (y_hi - y_lo < 1e-9) y_lo -= 0.5, y_hi += 0.5;
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;
  const double t_lo = t.empty() ? 0.0 : t.front();
  const double t_hi = t.empty() || t.back() <= t_lo ? t_lo + 1.0 : t.back();

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - t_lo) / (t_hi - t_lo) * pw; };
  auto py = [&](double y) { return kTop + (y_hi - y) / (y_hi - y_lo) * ph; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"22\" font-size=\"15\">{3}</text>\n",
      kWidth, kHeight, kLeft, escape(panel.title));

  const double ys = nice_step(y_hi - y_lo);
  for (double y = std::ceil(y_lo / ys) * ys; y <= y_hi; y += ys) {
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" x2=\"{1:.1f}\" y1=\"{2:.1f}\" y2=\"{2:.1f}\" stroke=\"#ddd\"/>"
        "<text x=\"{3:.1f}\" y=\"{4:.1f}\" text-anchor=\"end\">{5:.4g}</text>\n",
        kLeft, kLeft + pw, py(y), kLeft - 6, py(y) + 4, std::abs(y) < 1e-12 ? 0.0 : y);
  }
  const double xs = nice_step(t_hi - t_lo);
  for (double x = std::ceil(t_lo / xs) * xs; x <= t_hi; x += xs) {
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" x2=\"{0:.1f}\" y1=\"{1:.1f}\" y2=\"{2:.1f}\" stroke=\"#eee\"/>"
        "<text x=\"{0:.1f}\" y=\"{3:.1f}\" text-anchor=\"middle\">{4:.4g}</text>\n",
        px(x), kTop, kTop + ph, kTop + ph + 16, x);
  }
  svg += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n"
      "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">time (s)</text>\n"
      "<text transform=\"translate(16 {:.1f}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
      kLeft, kTop, pw, ph, kLeft + pw / 2, kHeight - 10, kTop + ph / 2, escape(panel.y_label));

  for (std::size_t s = 0; s < panel.series.size(); ++s) {
    const auto& series = panel.series[s];
    const char* color = kColors[s % std::size(kColors)];
    std::string points;
    for (std::size_t k : thin(series.y)) {
      if (k >= t.size() || !std::isfinite(series.y[k])) continue;
      points += fmt::format("{:.2f},{:.2f} ", px(t[k]), py(series.y[k]));
    }
    svg += fmt::format(
        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.4\" points=\"{}\"/>\n", color,
        points);
    const double ly = kTop + 14 + 18 * static_cast<double>(s);
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" x2=\"{1:.1f}\" y1=\"{2:.1f}\" y2=\"{2:.1f}\" stroke=\"{3}\" "
        "stroke-width=\"2\"/><text x=\"{4:.1f}\" y=\"{5:.1f}\">{6}</text>\n",
        kLeft + pw + 10, kLeft + pw + 30, ly, color, kLeft + pw + 36, ly + 4, escape(series.label));
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::pair<std::string, PlotPanel>> standard_panels(const SimTrace& tr) {
  std::vector<double> p_units(tr.size()), q_units(tr.size());
  for (std::size_t k = 0; k < tr.size(); ++k) {
    p_units[k] = tr.p_units_total(k);
    q_units[k] = tr.q_units_total(k);
  }
  std::vector<std::pair<std::string, PlotPanel>> out;
  out.push_back({"v_pcc", {"PCC voltage", "|v| (pu)", {{"v_pcc", tr.v_pcc}}}});
  out.push_back({"frequency", {"Frequency", "f (Hz)", {{"f", tr.f_hz}}}});
  out.push_back({"active_power",
                 {"Active power", "P (MW)",
                  {{"inverters", p_units}, {"grid import", tr.p_grid_mw}, {"load", tr.p_load_mw}}}});
  out.push_back({"reactive_power", {"Reactive power", "Q (MVar)", {{"inverters", q_units}}}});
  return out;
}

std::vector<std::filesystem::path> write_plots(const SimTrace& trace, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  for (const auto& [name, panel] : standard_panels(trace)) {
    const auto path = dir / (name + ".svg");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << render_svg(panel, trace.t);
    written.push_back(path);
  }
  return written;
}

}  // namespace gfmdc
