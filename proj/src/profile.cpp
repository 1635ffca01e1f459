#include "gfmdc/profile.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string_view>

namespace gfmdc {

void validate(const WorkloadProfile& p) {
  if (!(p.p_idle >= 0.0)) throw std::domain_error("profile: p_idle must be non-negative");
  if (!(p.p_train >= p.p_idle)) throw std::domain_error("profile: p_train must be >= p_idle");
  if (!(p.ramp_rate > 0.0)) throw std::domain_error("profile: ramp_rate must be positive");
  if (!(p.train_duration > 0.0) || !(p.checkpoint_duration > 0.0))
    throw std::domain_error("profile: durations must be positive");
  if (!(p.noise_amp >= 0.0)) throw std::domain_error("profile: noise_amp must be non-negative");
  if (p.noise_amp > 0.0 && !(p.noise_bandwidth > 0.0))
    throw std::domain_error("profile: noise_bandwidth must be positive");
}

double load_envelope(const WorkloadProfile& p, double t) {
  const double ramp = p.ramp_time();
  double tau = std::fmod(std::max(t, 0.0), p.cycle_period());
  if (tau < p.checkpoint_duration) return p.p_idle;
  tau -= p.checkpoint_duration;
  if (tau < ramp) return p.p_idle + p.ramp_rate * tau;
  tau -= ramp;
  if (tau < p.train_duration) return p.p_train;
  tau -= p.train_duration;
  return std::max(p.p_idle, p.p_train - p.ramp_rate * tau);
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Uniform on [-1, 1).
double uniform_symmetric(std::uint64_t& state) {
  const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

}  // namespace

LoadSampler::LoadSampler(WorkloadProfile profile) : profile_(profile) {
  validate(profile_);
  if (profile_.noise_amp > 0.0) {
    grid_step_ = std::min(0.01, 1.0 / (20.0 * profile_.noise_bandwidth));
    pole_ = std::exp(-2.0 * std::numbers::pi * profile_.noise_bandwidth * grid_step_);
    // Stationary variance of the filtered sequence is (1-a)/(1+a)/3.
    const double sigma = std::sqrt((1.0 - pole_) / (1.0 + pole_) / 3.0);
    gain_ = (1.0 / 3.0) / sigma;
    rng_state_ = profile_.seed;
    filter_state_ = uniform_symmetric(rng_state_) * std::sqrt((1.0 - pole_) / (1.0 + pole_));
    noise_.push_back(std::clamp(gain_ * filter_state_, -1.0, 1.0));
  }
}

void LoadSampler::extend_to(std::size_t index) const {
  while (noise_.size() <= index) {
    filter_state_ = pole_ * filter_state_ + (1.0 - pole_) * uniform_symmetric(rng_state_);
    noise_.push_back(std::clamp(gain_ * filter_state_, -1.0, 1.0));
  }
}

double LoadSampler::noise(double t) const {
  if (profile_.noise_amp <= 0.0) return 0.0;
  const double x = std::max(t, 0.0) / grid_step_;
  const auto k = static_cast<std::size_t>(x);
  extend_to(k + 1);
  const double frac = x - static_cast<double>(k);
  return noise_[k] + frac * (noise_[k + 1] - noise_[k]);
}

double LoadSampler::sample(double t) const {
  return load_envelope(profile_, t) + profile_.noise_amp * noise(t);
}

double sample_load(const WorkloadProfile& profile, double t) {
  return LoadSampler(profile).sample(t);
}

SampledTrace::SampledTrace(std::vector<std::pair<double, double>> points)
    : points_(std::move(points)) {
  if (points_.empty()) throw TraceParseError(0, "trace has no samples");
  for (std::size_t k = 0; k < points_.size(); ++k) {
    if (!std::isfinite(points_[k].first) || !std::isfinite(points_[k].second))
      throw TraceParseError(k + 1, "non-finite value");
    if (k > 0 && !(points_[k].first > points_[k - 1].first))
      throw TraceParseError(k + 1, "time must be strictly increasing");
  }
}

double SampledTrace::sample(double t) const {
  if (t <= points_.front().first) return points_.front().second;
  if (t >= points_.back().first) return points_.back().second;
  const auto it = std::upper_bound(points_.begin(), points_.end(), t,
                                   [](double x, const auto& p) { return x < p.first; });
  const auto& [t1, p1] = *it;
  const auto& [t0, p0] = *(it - 1);
  return p0 + (p1 - p0) * (t - t0) / (t1 - t0);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

SampledTrace parse_load_trace(std::istream& in) {
  std::vector<std::pair<double, double>> points;
  std::string line;
  std::size_t row = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++row;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto comma = view.find(',');
    double t = 0.0, p = 0.0;
    const bool ok = comma != std::string_view::npos &&
                    view.find(',', comma + 1) == std::string_view::npos &&
                    parse_double(view.substr(0, comma), t) &&
                    parse_double(view.substr(comma + 1), p);
    if (!ok) {
      // A single leading non-numeric line is a header.
      if (!seen_content && comma != std::string_view::npos && !parse_double(view.substr(0, comma), t)) {
        seen_content = true;
        continue;
      }
      throw TraceParseError(row, "expected two numeric columns 't_seconds,p_megawatts'");
    }
    seen_content = true;
    if (!std::isfinite(t) || !std::isfinite(p)) throw TraceParseError(row, "non-finite value");
    if (!points.empty() && !(t > points.back().first))
      throw TraceParseError(row, "time must be strictly increasing");
    points.emplace_back(t, p);
  }
  if (points.empty()) throw TraceParseError(row, "trace has no samples");
  return SampledTrace(std::move(points));
}

SampledTrace load_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceParseError(0, "cannot open load trace '" + path.string() + "'");
  return parse_load_trace(in);
}

}  // namespace gfmdc
