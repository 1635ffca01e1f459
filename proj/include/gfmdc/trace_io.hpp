#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "gfmdc/sim_engine.hpp"

namespace gfmdc {

inline constexpr const char* kTraceVersionLine = "# gfmdc trace v1";

class TraceFormatError : public std::runtime_error {
 public:
  TraceFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Writes the version line, the header and one row per sample. Numbers use
/// the shortest representation that round-trips; flags are 0/1.
void write_trace_csv(std::ostream& out, const SimTrace& trace);
std::string trace_to_csv(const SimTrace& trace);
void save_trace_csv(const std::filesystem::path& path, const SimTrace& trace);

/// Inverse of write_trace_csv (the version line is optional). The command
/// series is not part of the file and comes back empty.
SimTrace read_trace_csv(std::istream& in);
SimTrace load_trace_file(const std::filesystem::path& path);

std::string metrics_to_json(const SimResult& result, const ScenarioConfig& config);
std::string compare_to_json(const CompareReport& report);

}  // namespace gfmdc
