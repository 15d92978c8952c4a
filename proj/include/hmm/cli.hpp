#pragma once

#include "hmm/engine.hpp"

#include <iosfwd>

namespace hmm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitUsage = 2;

// Settings of one `run`/`compare`/`sweep` invocation after defaults are
// applied.
struct RunConfig {
  std::string case_path;
  std::string scenario_path;
  std::string out_dir;
  HmmConfig hmm;
  bool reference = false;
  double reference_step = 5e-6;
  std::uint64_t seed = 1;
  std::string selection;
};

// "2.625eta" -> 2.625 * eta; a bare number is taken in seconds.
double parse_time_with_eta(const std::string& text, double eta);
std::vector<std::string> split_list(const std::string& text);

// Entry point behind the hmmsim executable. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hmm
