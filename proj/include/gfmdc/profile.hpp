#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gfmdc {

/// Synthetic model-training workload: repeating cycle of checkpoint (idle) plateau,
/// ramp up, training plateau, ramp down; plus clipped band-limited noise.
struct WorkloadProfile {
  double p_idle = 15.0;               // MW
  double p_train = 48.0;              // MW
  double ramp_rate = 10.0;            // MW/s
  double train_duration = 60.0;       // s
  double checkpoint_duration = 15.0;  // s
  double noise_amp = 1.0;             // MW
  double noise_bandwidth = 0.5;       // Hz
  std::uint64_t seed = 1;

  double ramp_time() const { return (p_train - p_idle) / ramp_rate; }
  double cycle_period() const { return checkpoint_duration + train_duration + 2.0 * ramp_time(); }
};

void validate(const WorkloadProfile& profile);

/// Noise-free piecewise-linear cycle.
double load_envelope(const WorkloadProfile& profile, double t);

/// Samples a profile. The noise sequence is generated on a fixed time grid
/// from the seed (splitmix64 -> uniform), low-pass filtered, normalized to a
/// standard deviation of noise_amp/3 and clipped at +-noise_amp; values
/// between grid points are linearly interpolated. Sampling is a pure
/// function of (profile, t); the sampler only caches the sequence.
class LoadSampler {
 public:
  explicit LoadSampler(WorkloadProfile profile);

  double sample(double t) const;
  const WorkloadProfile& profile() const { return profile_; }

 private:
  double noise(double t) const;
  void extend_to(std::size_t index) const;

  WorkloadProfile profile_;
  double grid_step_ = 0.01;
  double pole_ = 0.0;
  double gain_ = 0.0;
  mutable std::vector<double> noise_;
  mutable double filter_state_ = 0.0;
  mutable std::uint64_t rng_state_ = 0;
};

double sample_load(const WorkloadProfile& profile, double t);

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::size_t row, const std::string& what)
      : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

/// Measured (t_seconds, p_megawatts) trace with linear interpolation and
/// flat extrapolation.
class SampledTrace {
 public:
  SampledTrace() = default;
  explicit SampledTrace(std::vector<std::pair<double, double>> points);

  double sample(double t) const;
  const std::vector<std::pair<double, double>>& points() const { return points_; }

 private:
  std::vector<std::pair<double, double>> points_;
};

/// Two-column CSV; an optional non-numeric header line, blank lines and
/// '#' comments are skipped. Row numbers in errors are 1-based file lines.
SampledTrace parse_load_trace(std::istream& in);
SampledTrace load_trace_csv(const std::filesystem::path& path);

}  // namespace gfmdc
