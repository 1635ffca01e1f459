#include "gfmdc/cli.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gfmdc/acceptance.hpp"
#include "gfmdc/config.hpp"
#include "gfmdc/plot.hpp"
#include "gfmdc/sim_engine.hpp"
#include "gfmdc/trace_io.hpp"

namespace gfmdc {

namespace fs = std::filesystem;

namespace {

struct RunRequest {
  std::string preset;
  std::string config_path;
  std::string out_dir;
  std::optional<double> dt;
  std::optional<double> duration;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  bool plot = false;
  bool check = false;
};

struct CompareRequest {
  std::string with_path;
  std::string without_path;
  std::string out_dir;
};

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("GFMDC_OUT_DIR"); env && *env) return env;
  return "out";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
}

int print_checks(const std::string& title, const std::vector<acceptance::Check>& checks,
                 std::ostream& out) {
  fmt::print(out, "{}\n", title);
  for (const auto& c : checks)
    fmt::print(out, "  [{}] {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.measured);
  const bool ok = acceptance::all_passed(checks);
  if (!ok) {
    fmt::print(out, "failed:\n");
    for (const auto& c : checks)
      if (!c.passed) fmt::print(out, "  - {}\n", c.name);
  }
  return ok ? kExitOk : kExitCheckFailed;
}

ScenarioConfig resolve_config(const RunRequest& req) {
  ScenarioConfig cfg;
  fs::path base_dir;
  if (!req.preset.empty()) {
    cfg = preset(req.preset);
  } else {
    cfg = load_config(req.config_path);
    base_dir = fs::path(req.config_path).parent_path();
  }
  std::vector<Override> overrides;
  if (req.dt) overrides.push_back({"dt", fmt::format("{}", *req.dt)});
  if (req.duration) overrides.push_back({"duration", fmt::format("{}", *req.duration)});
  if (req.seed) overrides.push_back({"seed", std::to_string(*req.seed)});
  for (const auto& s : req.sets) overrides.push_back(parse_override(s));
  return apply_overrides(cfg, overrides, base_dir);
}

int cmd_run(const RunRequest& req, std::ostream& out, std::ostream& err) {
  ScenarioConfig cfg;
  try {
    cfg = resolve_config(req);
  } catch (const ConfigError& e) {
    fmt::print(err, "error: invalid config: {}\n", e.what());
    return kExitBadInput;
  } catch (const std::invalid_argument& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitBadInput;
  }

  const fs::path dir = output_dir(req.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    fmt::print(err, "error: cannot create output directory '{}': {}\n", dir.string(), ec.message());
    return kExitBadInput;
  }

  const SimResult result = run(cfg);
  try {
    save_trace_csv(dir / "trace.csv", result.trace);
    write_text(dir / "metrics.json", metrics_to_json(result, cfg));
    write_text(dir / "config.json", config_to_json(cfg));
    if (req.plot) write_plots(result.trace, dir);
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitBadInput;
  }

  const SummaryMetrics& m = result.metrics;
  fmt::print(out, "{}: {} samples, status {}\n", cfg.name, result.trace.size(), to_string(result.status));
  fmt::print(out, "  f [{:.4f}, {:.4f}] Hz, v_pcc [{:.4f}, {:.4f}] pu\n", m.f_min, m.f_max, m.v_min, m.v_max);
  fmt::print(out, "  wrote {}\n", (dir / "trace.csv").string());
  if (!result.ok()) {
    fmt::print(err, "error: simulation fault: {}\n", result.diagnostic);
    return kExitSimulationFault;
  }
  if (req.check) {
    if (req.preset.empty()) {
      fmt::print(err, "error: --check requires --preset\n");
      return kExitBadInput;
    }
    return print_checks("check " + req.preset, acceptance::check_preset(req.preset), out);
  }
  return kExitOk;
}

int cmd_compare(const CompareRequest& req, std::ostream& out, std::ostream& err) {
  CompareReport rep;
  try {
    const SimTrace with = load_trace_file(req.with_path);
    const SimTrace without = load_trace_file(req.without_path);
    rep = compare(with, without);
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitBadInput;
  }
  fmt::print(out, "                      with BESS   without BESS   reduction\n");
  fmt::print(out, "under-frequency (Hz)  {:9.4f}   {:12.4f}   {:8.1f}%\n", rep.with_bess.under_hz,
             rep.without_bess.under_hz, rep.under_reduction_pct);
  fmt::print(out, "over-frequency (Hz)   {:9.4f}   {:12.4f}   {:8.1f}%\n", rep.with_bess.over_hz,
             rep.without_bess.over_hz, rep.over_reduction_pct);
  fmt::print(out, "voltage dip (pu)      {:9.4f}   {:12.4f}   {:8.1f}%\n", rep.with_bess.v_dip_pu,
             rep.without_bess.v_dip_pu, rep.v_dip_reduction_pct);
  const fs::path dir = output_dir(req.out_dir);
  try {
    fs::create_directories(dir);
    write_text(dir / "compare.json", compare_to_json(rep));
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitBadInput;
  }
  fmt::print(out, "wrote {}\n", (dir / "compare.json").string());
  return kExitOk;
}

int cmd_check(const std::string& name, std::ostream& out, std::ostream& err) {
  std::vector<acceptance::Check> checks;
  try {
    checks = acceptance::check_preset(name);
  } catch (const std::invalid_argument& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitBadInput;
  }
  return print_checks("check " + name, checks, out);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grid-forming BESS and data-center load dynamics simulator", "gfmdc"};
  app.require_subcommand(1);

  RunRequest run_req;
  auto* run_cmd = app.add_subcommand("run", "Simulate a preset or config file");
  auto* preset_opt = run_cmd->add_option("--preset", run_req.preset, "Preset scenario name");
  auto* config_opt = run_cmd->add_option("--config", run_req.config_path, "Scenario JSON file");
  preset_opt->excludes(config_opt);
  run_cmd->add_option("--out", run_req.out_dir, "Output directory (default $GFMDC_OUT_DIR or ./out)");
  run_cmd->add_option("--dt", run_req.dt, "Step size in seconds");
  run_cmd->add_option("--duration", run_req.duration, "Simulated time in seconds");
  run_cmd->add_option("--seed", run_req.seed, "Load-noise seed");
  run_cmd->add_option("--set", run_req.sets, "Override a config field: key=value (repeatable)");
  run_cmd->add_flag("--plot", run_req.plot, "Write SVG panels next to the trace");
  run_cmd->add_flag("--check", run_req.check, "Run the preset's acceptance checks afterwards");

  CompareRequest cmp_req;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare a with-BESS trace against a without-BESS trace");
  cmp_cmd->add_option("with_bess", cmp_req.with_path, "Trace CSV with BESS")->required();
  cmp_cmd->add_option("without_bess", cmp_req.without_path, "Trace CSV without BESS")->required();
  cmp_cmd->add_option("--out", cmp_req.out_dir, "Directory for compare.json");

  std::string check_name;
  auto* check_cmd = app.add_subcommand("check", "Run the acceptance checks of a preset");
  check_cmd->add_option("preset", check_name, "Preset name")->required();

  auto* preset_cmd = app.add_subcommand("preset", "Inspect presets");
  preset_cmd->require_subcommand(1);
  auto* list_cmd = preset_cmd->add_subcommand("list", "List preset names");
  std::string show_name;
  auto* show_cmd = preset_cmd->add_subcommand("show", "Print a preset as config JSON");
  show_cmd->add_option("name", show_name, "Preset name")->required();

  try {
    app.parse(argc, argv);
    if (run_cmd->parsed() && run_req.preset.empty() && run_req.config_path.empty())
      throw CLI::RequiredError("exactly one of --preset or --config");
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  if (run_cmd->parsed()) return cmd_run(run_req, out, err);
  if (cmp_cmd->parsed()) return cmd_compare(cmp_req, out, err);
  if (check_cmd->parsed()) return cmd_check(check_name, out, err);
  if (list_cmd->parsed()) {
    for (const auto& n : preset_names()) fmt::print(out, "{}\n", n);
    return kExitOk;
  }
  if (show_cmd->parsed()) {
    try {
      out << config_to_json(preset(show_name));
    } catch (const std::invalid_argument& e) {
      fmt::print(err, "error: {}\n", e.what());
      return kExitBadInput;
    }
    return kExitOk;
  }
  return kExitBadInput;
}

}  // namespace gfmdc
