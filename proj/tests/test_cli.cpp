#include "support.hpp"

#include "hmm/cli.hpp"
#include "hmm/report.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hmm;
using namespace hmm::test;

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out, err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hmmsim_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) { return read_text_file(p.string()); }

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  const std::string desk = case_path("desk.yaml");
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"run"}).code == kExitUsage);
  const CliRun both = cli({"run", "--case", desk, "--H", "2eta", "--tol", "1e-2"});
  CHECK(both.code == kExitUsage);
  CHECK(both.err.find("mutually exclusive") != std::string::npos);
  CHECK(cli({"run", "--case", desk, "--h", "1e-4", "--eps1", "1e-6"}).code == kExitUsage);
  CHECK(cli({"run", "--case", desk, "--mode", "hmm-variable", "--H", "2eta"}).code == kExitUsage);
  CHECK(cli({"run", "--case", desk, "--mode", "sideways"}).code == kExitUsage);
  CHECK(cli({"run", "--case", desk, "--mode", "hmm-fixed", "--H", "0.5eta"}).code == kExitUsage);
  const CliRun missing = cli({"run", "--case", case_path("absent.yaml")});
  CHECK(missing.code == kExitUsage);
  CHECK(missing.err.find("absent.yaml") != std::string::npos);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("numerical failure exits with code 1") {
  const fs::path dir = scratch_dir("diverge");
  // Fourth-order series with a 20 ms step on a network resonating near 1 kHz.
  const CliRun r = cli({"run", "--case", case_path("desk.yaml"), "--mode", "micro-only", "--h", "0.02",
                        "--L", "4", "--t-end", "3", "--out", dir.string()});
  CHECK(r.code == kExitNumerical);
  CHECK(r.err.find("numerical failure") != std::string::npos);
}

TEST_CASE("validate-case reports counts and dumps matrices") {
  const fs::path dir = scratch_dir("validate");
  const std::string dump = (dir / "m.txt").string();
  const CliRun r = cli({"validate-case", case_path("two_area_ibr.yaml"), "--dump-matrices", dump});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("11 buses") != std::string::npos);
  CHECK(r.out.find("ok") != std::string::npos);
  const std::string m = slurp(dump);
  for (const char* block : {"C ", "G ", "L ", "R ", "B3 ", "A_eq ", "B_eq "})
    CHECK(("\n" + m).find(std::string("\n") + block) != std::string::npos);
}

TEST_CASE("parsing of time values and lists") {
  CHECK(parse_time_with_eta("2.625eta", 0.0264) == doctest::Approx(2.625 * 0.0264).epsilon(1e-15));
  CHECK(parse_time_with_eta("3*eta", 0.02) == doctest::Approx(0.06).epsilon(1e-15));
  CHECK(parse_time_with_eta("eta", 0.02) == 0.02);
  CHECK(parse_time_with_eta("0.05", 0.02) == 0.05);
  CHECK_THROWS_AS(parse_time_with_eta("fast", 0.02), ConfigError);
  CHECK_THROWS_AS(parse_time_with_eta("2etas", 0.02), ConfigError);
  CHECK(split_list("1.5eta,2eta,,3eta") == std::vector<std::string>{"1.5eta", "2eta", "3eta"});
}

TEST_CASE("state selection") {
  const System sys(load_case(case_path("two_area_ibr.yaml")));
  const StateLayout& l = sys.layout();
  CHECK(select_states(l, "").empty());
  const auto one = select_states(l, "line_7_8.w_a");
  REQUIRE(one.size() == 1);
  CHECK(l.name_of(one[0]) == "line_7_8.w_a");
  CHECK(select_states(l, "bus1.*").size() == 3);
  CHECK(select_states(l, "bus1*").size() == 9);
  CHECK(select_states(l, "G2.delta, G3.delta").size() == 2);
  CHECK(select_states(l, "*").size() == l.size());
  CHECK_THROWS_AS(select_states(l, "bus99.v_a"), ConfigError);
  CHECK_THROWS_AS(select_states(l, "nothing*"), ConfigError);
}

TEST_CASE("trajectory CSV round trip") {
  Loaded s = load_initialized("desk.yaml");
  HmmConfig cfg;
  cfg.mode = RunMode::hmm_fixed;
  cfg.warmup = 0.05;
  cfg.t_end = 0.2;
  cfg.micro.order = 12;
  const SimulationResult r = run_simulation(s.sys, s.x0, EventSchedule{}, cfg);
  const auto sel = select_states(s.sys.layout(), "G1.delta,bus3.v_b,line_2_3.w_c");
  std::stringstream ss;
  write_trajectory_csv(r, sel, ss);
  const TrajectoryTable t = read_trajectory_csv(ss);
  REQUIRE(t.times.size() == r.size());
  CHECK(t.columns == std::vector<std::string>{"G1.delta", "bus3.v_b", "line_2_3.w_c"});
  bool both_tags = false;
  for (std::size_t k = 0; k < r.size(); ++k) {
    CHECK(t.times[k] == doctest::Approx(r.times[k]).epsilon(1e-12));
    CHECK(t.tags[k] == static_cast<char>(r.tags[k]));
    both_tags = both_tags || r.tags[k] == Resolution::macro;
    for (std::size_t j = 0; j < sel.size(); ++j)
      CHECK(t.rows[k][j] == doctest::Approx(r.states[k][static_cast<Eigen::Index>(sel[j])]).epsilon(1e-12));
  }
  CHECK(both_tags);
}

TEST_CASE("summary with a missing speedup") {
  const std::vector<SummaryRow> rows{{"Tol=1e-02", 1.5, 0.012, 3.2e-4, {}}, {"micro-only", 2.0, 0.0, {}, {}}};
  const std::string table = format_summary(rows);
  CHECK(table.find("Execution Time(s)") != std::string::npos);
  CHECK(table.find("Avg. Macro Step-size") != std::string::npos);
  CHECK(table.find("3.2000e-04") != std::string::npos);
  std::stringstream csv;
  write_summary_csv(rows, csv);
  std::string header, first, second;
  std::getline(csv, header);
  std::getline(csv, first);
  std::getline(csv, second);
  CHECK(header == "config,execution_time_s,avg_macro_step_s,integral_error,speedup");
  CHECK(first.back() == ',');
  CHECK(second == "micro-only,2.000000,,,");
}

TEST_CASE("run writes deterministic outputs") {
  const fs::path a = scratch_dir("run_a"), b = scratch_dir("run_b");
  const std::vector<std::string> base{"run", "--case", case_path("desk.yaml"), "--scenario",
                                      case_path("desk_fault.yaml"), "--mode", "hmm-fixed", "--H",
                                      "2eta", "--warmup", "0.05", "--L", "12", "--t-end", "0.3",
                                      "--select", "G1.*"};
  auto args_a = base, args_b = base;
  args_a.insert(args_a.end(), {"--out", a.string()});
  args_b.insert(args_b.end(), {"--out", b.string()});
  const CliRun ra = cli(args_a);
  const CliRun rb = cli(args_b);
  REQUIRE(ra.code == kExitOk);
  REQUIRE(rb.code == kExitOk);
  for (const char* f : {"trajectory.csv", "steps.csv", "events.csv", "summary.csv", "summary.txt"})
    CHECK(fs::exists(a / f));
  CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
  CHECK(slurp(a / "steps.csv") == slurp(b / "steps.csv"));
  std::ifstream in(a / "trajectory.csv");
  const TrajectoryTable t = read_trajectory_csv(in);
  // Ten machine states and the three terminal currents.
  CHECK(t.columns.size() == kGeneratorStates + 3);
  const std::string events = slurp(a / "events.csv");
  CHECK(events.find("fault 3") != std::string::npos);
  CHECK(events.find("clear_fault 3") != std::string::npos);
}
