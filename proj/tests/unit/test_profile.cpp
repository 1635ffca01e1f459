#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gfmdc/profile.hpp"

using namespace gfmdc;

namespace {

WorkloadProfile quiet() {
  WorkloadProfile p;
  p.noise_amp = 0.0;
  return p;
}

}  // namespace

TEST_CASE("noise-free profile examples") {
  const WorkloadProfile p = quiet();
  const double ramp = p.ramp_time();
  const double train_mid = p.checkpoint_duration + ramp + 0.5 * p.train_duration;
  CHECK(sample_load(p, train_mid) == p.p_train);
  CHECK(sample_load(p, p.checkpoint_duration + 0.5 * ramp) ==
        doctest::Approx(0.5 * (p.p_idle + p.p_train)));
  CHECK(sample_load(p, 0.5 * p.checkpoint_duration) == p.p_idle);
  const double down_mid = p.checkpoint_duration + 1.5 * ramp + p.train_duration;
  CHECK(sample_load(p, down_mid) == doctest::Approx(0.5 * (p.p_idle + p.p_train)));
}

TEST_CASE("full-cycle mean is the duty-weighted plateau average") {
  const WorkloadProfile p = quiet();
  const double period = p.cycle_period();
  const int n = 200'000;
  double integral = 0.0;
  const double h = period / n;
  // Composite Simpson's rule.
  for (int k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    integral += w * sample_load(p, k * h);
  }
  integral *= h / 3.0;
  const double ramp = p.ramp_time();
  const double closed = (p.p_idle * p.checkpoint_duration + p.p_train * p.train_duration +
                         (p.p_idle + p.p_train) * ramp) /
                        period;
  CHECK(integral / period == doctest::Approx(closed).epsilon(1e-6));
}

TEST_CASE("profile is periodic") {
  const WorkloadProfile p = quiet();
  for (double t : {1.0, 17.3, 40.0, 80.1})
    CHECK(sample_load(p, t) == doctest::Approx(sample_load(p, t + 3.0 * p.cycle_period())));
}

TEST_CASE("noise-free output equals the envelope exactly") {
  const WorkloadProfile p = quiet();
  for (int k = 0; k < 2000; ++k) {
    const double t = 0.137 * k;
    CHECK(sample_load(p, t) == load_envelope(p, t));
  }
}

TEST_CASE("noisy samples are deterministic and bounded") {
  WorkloadProfile p;
  p.noise_amp = 2.0;
  p.seed = 42;
  const LoadSampler a(p), b(p);
  bool any_noise = false;
  for (int k = 0; k < 20'000; ++k) {
    const double t = 0.0101 * k;
    const double x = a.sample(t);
    CHECK(x == b.sample(t));
    CHECK(x == sample_load(p, t));
    CHECK(x >= p.p_idle - p.noise_amp);
    CHECK(x <= p.p_train + p.noise_amp);
    any_noise = any_noise || x != load_envelope(p, t);
  }
  CHECK(any_noise);

  // Query order does not matter.
  const LoadSampler c(p);
  const double late = c.sample(150.0);
  CHECK(late == LoadSampler(p).sample(150.0));

  WorkloadProfile other = p;
  other.seed = 43;
  CHECK(LoadSampler(other).sample(12.34) != a.sample(12.34));
}

TEST_CASE("noise amplitude statistics") {
  WorkloadProfile p;
  p.noise_amp = 3.0;
  const LoadSampler s(p);
  double sum = 0.0, sq = 0.0;
  const int n = 100'000;
  for (int k = 0; k < n; ++k) {
    const double t = 0.01 * k;
    const double x = s.sample(t) - load_envelope(p, t);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n, sd = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean) < 0.2);
  CHECK(sd == doctest::Approx(p.noise_amp / 3.0).epsilon(0.2));
}

TEST_CASE("profile validation") {
  WorkloadProfile p = quiet();
  p.p_train = p.p_idle - 1.0;
  CHECK_THROWS_AS(validate(p), std::domain_error);
  p = quiet();
  p.ramp_rate = 0.0;
  CHECK_THROWS_AS(validate(p), std::domain_error);
  p = quiet();
  p.noise_amp = 1.0;
  p.noise_bandwidth = 0.0;
  CHECK_THROWS_AS(LoadSampler{p}, std::domain_error);
}

TEST_CASE("sampled trace examples") {
  const SampledTrace flat({{0.0, 10.0}, {10.0, 10.0}});
  CHECK(flat.sample(5.0) == 10.0);
  const SampledTrace ramp({{0.0, 0.0}, {10.0, 50.0}});
  CHECK(ramp.sample(5.0) == doctest::Approx(25.0));
  CHECK(ramp.sample(20.0) == 50.0);
  CHECK(ramp.sample(-3.0) == 0.0);
  CHECK_THROWS_AS(SampledTrace({{1.0, 0.0}, {1.0, 2.0}}), TraceParseError);
  CHECK_THROWS_AS(SampledTrace(std::vector<std::pair<double, double>>{}), TraceParseError);
}

TEST_CASE("load trace csv parsing") {
  std::istringstream good("t_seconds,p_megawatts\n# comment\n0,0\n\n10,50\n");
  const SampledTrace t = parse_load_trace(good);
  REQUIRE(t.points().size() == 2);
  CHECK(t.sample(5.0) == doctest::Approx(25.0));

  std::istringstream bad("0,1\n1,abc\n");
  try {
    parse_load_trace(bad);
    FAIL("expected a parse error");
  } catch (const TraceParseError& e) {
    CHECK(e.row() == 2);
  }

  std::istringstream backwards("0,1\n2,1\n1,1\n");
  CHECK_THROWS_AS(parse_load_trace(backwards), TraceParseError);
}

TEST_CASE("load trace csv from file") {
  const std::filesystem::path dir = GFMDC_TEST_TMP;
  std::filesystem::create_directories(dir);
  const auto path = dir / "trace.csv";
  std::ofstream(path) << "0,10\n10,10\n";
  CHECK(load_trace_csv(path).sample(5.0) == 10.0);
  CHECK_THROWS_AS(load_trace_csv(dir / "missing.csv"), TraceParseError);
}
