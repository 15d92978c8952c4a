#pragma once

#include "hmm/reference.hpp"

#include <iosfwd>
#include <optional>

namespace hmm {

// Comma-separated state names; a trailing '*' matches by prefix. Unknown
// names throw ConfigError. An empty string selects nothing.
std::vector<std::size_t> select_states(const StateLayout& layout, const std::string& selection);

// time,resolution,<selected names...>; values in %.16e.
void write_trajectory_csv(const SimulationResult& r, const std::vector<std::size_t>& selection,
                          std::ostream& os);

struct TrajectoryTable {
  std::vector<std::string> columns;  // selected state names
  std::vector<double> times;
  std::vector<char> tags;
  std::vector<std::vector<double>> rows;
};
TrajectoryTable read_trajectory_csv(std::istream& is);

void write_step_trace_csv(const SimulationResult& r, std::ostream& os);
void write_error_csv(const ErrorReport& e, std::ostream& os);
void write_speedup_csv(const SpeedupTable& t, std::ostream& os);
std::string format_speedup_table(const SpeedupTable& t);

struct SummaryRow {
  std::string label;
  double seconds = 0.0;
  double avg_macro_step = 0.0;
  std::optional<double> integral_error;
  std::optional<double> speedup;
};

// Plain-text table with columns Config, Execution Time(s),
// Avg. Macro Step-size, Integral Error, Speedup; blanks for missing values.
std::string format_summary(const std::vector<SummaryRow>& rows);
void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& os);

// Writes to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace hmm
