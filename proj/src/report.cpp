#include "hmm/report.hpp"

#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace hmm {

std::vector<std::size_t> select_states(const StateLayout& layout, const std::string& selection) {
  std::vector<std::size_t> out;
  std::stringstream ss(selection);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    if (b == std::string::npos) continue;
    item = item.substr(b, item.find_last_not_of(' ') - b + 1);
    if (item.back() == '*') {
      const std::string prefix = item.substr(0, item.size() - 1);
      bool any = false;
      for (std::size_t i = 0; i < layout.size(); ++i)
        if (layout.name_of(i).rfind(prefix, 0) == 0) {
          out.push_back(i);
          any = true;
        }
      if (!any) throw ConfigError(fmt::format("selection '{}' matches no state", item));
    } else {
      if (!layout.contains(item)) throw ConfigError(fmt::format("unknown state '{}'", item));
      out.push_back(layout.index_of(item));
    }
  }
  return out;
}

void write_trajectory_csv(const SimulationResult& r, const std::vector<std::size_t>& sel,
                          std::ostream& os) {
  os << "time,resolution";
  for (auto i : sel) os << ',' << r.state_names[i];
  os << '\n';
  std::string line;
  for (std::size_t k = 0; k < r.size(); ++k) {
    line = fmt::format("{:.16e},{}", r.times[k], r.tags[k] == Resolution::micro ? "micro" : "macro");
    for (auto i : sel) line += fmt::format(",{:.16e}", r.states[k][static_cast<Eigen::Index>(i)]);
    line += '\n';
    os << line;
  }
}

TrajectoryTable read_trajectory_csv(std::istream& is) {
  TrajectoryTable t;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty trajectory file");
  std::stringstream hs(line);
  std::string cell;
  int col = 0;
  while (std::getline(hs, cell, ',')) {
    if (col++ >= 2) t.columns.push_back(cell);
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::getline(ls, cell, ',');
    t.times.push_back(std::stod(cell));
    std::getline(ls, cell, ',');
    t.tags.push_back(cell == "micro" ? 'm' : 'M');
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_step_trace_csv(const SimulationResult& r, std::ostream& os) {
  os << "t_prime,mh,r,e,rho,mh_next,rejections,truncated\n";
  for (const auto& s : r.step_trace)
    os << fmt::format("{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n", s.t, s.mh, s.r, s.e,
                      s.rho, s.mh_next, s.rejections, s.truncated ? 1 : 0);
}

void write_error_csv(const ErrorReport& e, std::ostream& os) {
  os << "metric,value\n";
  os << fmt::format("integral_error,{:.16e}\n", e.integral_error);
  for (const auto& [fam, v] : e.family_error) os << fmt::format("integral_error.{},{:.16e}\n", fam, v);
  os << fmt::format("max_abs_error,{:.16e}\n", e.max_abs_error);
  os << fmt::format("max_normalized_error_pct,{:.16e}\n", e.max_normalized_pct);
  os << fmt::format("compared_samples,{}\n", e.compared_samples);
  os << fmt::format("candidate_seconds,{:.6f}\n", e.candidate_seconds);
  os << fmt::format("reference_seconds,{:.6f}\n", e.reference_seconds);
  os << fmt::format("speedup,{:.6f}\n", e.speedup());
}

void write_speedup_csv(const SpeedupTable& t, std::ostream& os) {
  os << "config,predicted_ratio,seconds,speedup\n";
  for (const auto& r : t.rows)
    os << fmt::format("{},{:.6f},{:.6f},{:.6f}\n", r.label, r.ratio, r.seconds, r.speedup);
  os << fmt::format("# slope={:.6f} intercept={:.6f} r_squared={:.6f} monotone={}\n", t.slope,
                    t.intercept, t.r_squared, t.monotone ? 1 : 0);
}

std::string format_speedup_table(const SpeedupTable& t) {
  std::string s = fmt::format("{:<14} {:>10} {:>12} {:>10}\n", "Config", "H/eta", "Time(s)", "Speedup");
  for (const auto& r : t.rows)
    s += fmt::format("{:<14} {:>10.4f} {:>12.3f} {:>10.3f}\n", r.label, r.ratio, r.seconds, r.speedup);
  s += fmt::format("linear fit: speedup = {:.4f} * H/eta + {:.4f}, R^2 = {:.4f}; monotone: {}\n",
                   t.slope, t.intercept, t.r_squared, t.monotone ? "yes" : "no");
  return s;
}

std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::string s = fmt::format("{:<22} {:>18} {:>22} {:>16} {:>10}\n", "Config", "Execution Time(s)",
                              "Avg. Macro Step-size", "Integral Error", "Speedup");
  for (const auto& r : rows) {
    const std::string err = r.integral_error ? fmt::format("{:.4e}", *r.integral_error) : "";
    const std::string sp = r.speedup ? fmt::format("{:.3f}", *r.speedup) : "";
    const std::string mh = r.avg_macro_step > 0 ? fmt::format("{:.5f}", r.avg_macro_step) : "";
    s += fmt::format("{:<22} {:>18.3f} {:>22} {:>16} {:>10}\n", r.label, r.seconds, mh, err, sp);
  }
  return s;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& os) {
  os << "config,execution_time_s,avg_macro_step_s,integral_error,speedup\n";
  for (const auto& r : rows)
    os << fmt::format("{},{:.6f},{},{},{}\n", r.label, r.seconds,
                      r.avg_macro_step > 0 ? fmt::format("{:.16e}", r.avg_macro_step) : "",
                      r.integral_error ? fmt::format("{:.16e}", *r.integral_error) : "",
                      r.speedup ? fmt::format("{:.6f}", *r.speedup) : "");
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp));
    out << content;
    if (!out) throw std::runtime_error(fmt::format("write failed: {}", tmp));
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace hmm
