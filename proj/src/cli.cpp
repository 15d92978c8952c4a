#include "hmm/cli.hpp"

#include "hmm/case_io.hpp"
#include "hmm/initialize.hpp"
#include "hmm/report.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace hmm {

double parse_time_with_eta(const std::string& text, double eta) {
  std::string s = text;
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  double scale = 1.0;
  if (s.size() >= 3 && s.compare(s.size() - 3, 3, "eta") == 0) {
    scale = eta;
    s.resize(s.size() - 3);
    if (s.empty()) return eta;
    if (s.back() == '*') s.pop_back();
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("cannot parse time value '{}'", text));
  }
  if (used != s.size()) throw ConfigError(fmt::format("cannot parse time value '{}'", text));
  return v * scale;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

namespace {

struct Flags {
  std::string case_path, scenario_path, mode, out, select, frame = "global";
  std::string h_text, tol_text;  // --H and --tol, lists allowed for sweep
  double h = 330e-6, eps1 = 0.0, eta = 0.0264, warmup = 1.0, kernel_d = 1.25, t_end = 0.0;
  double reference_step = 5e-6;
  int order = 30;
  std::uint64_t seed = 1;
  bool averaged = false, reference = false;
  CLI::Option *o_h = nullptr, *o_eps1 = nullptr, *o_H = nullptr, *o_tol = nullptr,
              *o_mode = nullptr, *o_t_end = nullptr, *o_ref = nullptr;
};

void add_common(CLI::App* s, Flags& f) {
  s->add_option("--case", f.case_path, "case file (YAML)")->required();
  s->add_option("--scenario", f.scenario_path, "scenario file with an events section");
  f.o_mode = s->add_option("--mode", f.mode, "hmm-fixed | hmm-variable | micro-only");
  f.o_h = s->add_option("--h", f.h, "fixed micro step (s)");
  s->add_option("--L", f.order, "DT order");
  s->add_option("--eta", f.eta, "micro window (s)");
  f.o_H = s->add_option("--H", f.h_text, "macro period, seconds or multiple of eta (e.g. 2.625eta)");
  f.o_tol = s->add_option("--tol", f.tol_text, "macro tolerance (variable mode)");
  f.o_eps1 = s->add_option("--eps1", f.eps1, "micro defect tolerance; selects variable micro steps");
  s->add_option("--warmup", f.warmup, "micro-only span after start and each event (s)");
  s->add_option("--kernel-D", f.kernel_d, "bump kernel shape D");
  f.o_t_end = s->add_option("--t-end", f.t_end, "simulated horizon (s)");
  s->add_option("--out", f.out, "output directory (default $HMMSIM_OUT or ./hmmsim_out)");
  f.o_ref = s->add_option("--reference-step", f.reference_step, "RK4 reference step (s)");
  s->add_option("--select", f.select, "comma-separated state names for the trajectory CSV");
  s->add_option("--frame", f.frame, "global | local Park frame for source currents");
  s->add_option("--seed", f.seed, "random seed");
  s->add_flag("--averaged-fast", f.averaged, "use the kernel-averaged fast state in the macro step");
}

RunConfig resolve(const Flags& f, bool allow_lists) {
  RunConfig rc;
  rc.case_path = f.case_path;
  rc.scenario_path = f.scenario_path;
  rc.selection = f.select;
  rc.seed = f.seed;
  rc.reference_step = f.reference_step;
  auto& h = rc.hmm;
  if (f.o_H->count() && f.o_tol->count()) throw ConfigError("--H and --tol are mutually exclusive");
  if (f.o_h->count() && f.o_eps1->count()) throw ConfigError("--h and --eps1 are mutually exclusive");
  if (f.o_mode->count()) {
    h.mode = parse_run_mode(f.mode);
    if (h.mode == RunMode::hmm_fixed && f.o_tol->count())
      throw ConfigError("--tol applies to hmm-variable mode only");
    if (h.mode == RunMode::hmm_variable && f.o_H->count())
      throw ConfigError("--H applies to hmm-fixed mode only");
    if (h.mode == RunMode::micro_only && (f.o_H->count() || f.o_tol->count()))
      throw ConfigError("--H/--tol do not apply to micro-only mode");
  } else {
    h.mode = f.o_H->count() ? RunMode::hmm_fixed : RunMode::hmm_variable;
  }
  h.eta = f.eta;
  h.micro.order = f.order;
  h.micro.fixed_step = f.h;
  h.micro.eps1 = f.o_eps1->count() ? f.eps1 : 0.0;
  h.micro.h_max = f.eta / 4.0;
  h.warmup = f.warmup;
  h.kernel_d = f.kernel_d;
  h.averaged_fast_state = f.averaged;
  if (f.frame == "local")
    h.frame = FrameMode::per_device_local;
  else if (f.frame != "global")
    throw ConfigError(fmt::format("unknown frame '{}' (global, local)", f.frame));
  if (!allow_lists) {
    if (f.o_H->count()) h.macro_period = parse_time_with_eta(f.h_text, f.eta);
    if (f.o_tol->count()) h.tol = parse_time_with_eta(f.tol_text, 1.0);
  } else {
    h.macro_period = 2.625 * f.eta;
  }
  if (f.o_t_end->count()) h.t_end = f.t_end;
  rc.reference = f.o_ref->count() > 0;
  if (!f.out.empty())
    rc.out_dir = f.out;
  else if (const char* env = std::getenv("HMMSIM_OUT"); env && *env)
    rc.out_dir = env;
  else
    rc.out_dir = "hmmsim_out";
  return rc;
}

struct Loaded {
  PowerSystemCase c;
  EventSchedule schedule;
};

Loaded load_inputs(RunConfig& rc, bool t_end_given) {
  Loaded l;
  l.c = load_case(rc.case_path);
  l.schedule = load_schedule(rc.scenario_path.empty() ? rc.case_path : rc.scenario_path, l.c);
  if (!t_end_given && l.schedule.horizon > 0) rc.hmm.t_end = l.schedule.horizon;
  rc.hmm.validate();
  return l;
}

std::string out_path(const RunConfig& rc, const std::string& name) {
  std::filesystem::create_directories(rc.out_dir);
  return (std::filesystem::path(rc.out_dir) / name).string();
}

template <class Writer>
void emit(const RunConfig& rc, const std::string& name, Writer w) {
  std::ostringstream os;
  w(os);
  write_file_atomic(out_path(rc, name), os.str());
}

struct Prepared {
  System sys;
  Vector x0;
};

Prepared prepare(const Loaded& l) {
  System sys(l.c);
  const InitResult init = initialize(sys);
  return {std::move(sys), init.x};
}

std::string label_of(const HmmConfig& h) {
  switch (h.mode) {
    case RunMode::hmm_fixed: return fmt::format("H={:.4g}eta", h.macro_period / h.eta);
    case RunMode::hmm_variable: return fmt::format("Tol={:.0e}", h.tol);
    case RunMode::micro_only: return "micro-only";
  }
  return "?";
}

void write_run_outputs(const RunConfig& rc, const System& sys, const SimulationResult& r) {
  const auto sel = select_states(sys.layout(), rc.selection.empty() ? "*" : rc.selection);
  emit(rc, "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(r, sel, os); });
  emit(rc, "steps.csv", [&](std::ostream& os) { write_step_trace_csv(r, os); });
  emit(rc, "events.csv", [&](std::ostream& os) {
    os << "time,event\n";
    for (const auto& e : r.events) os << fmt::format("{:.16e},{}\n", e.time, e.text);
  });
}

int cmd_run(RunConfig rc, bool t_end_given, std::ostream& out) {
  const Loaded l = load_inputs(rc, t_end_given);
  const Prepared p = prepare(l);
  const SimulationResult r = run_simulation(p.sys, p.x0, l.schedule, rc.hmm);
  write_run_outputs(rc, p.sys, r);
  const std::vector<SummaryRow> rows{{label_of(rc.hmm), r.timers.total, r.average_macro_step(), {}, {}}};
  emit(rc, "summary.csv", [&](std::ostream& os) { write_summary_csv(rows, os); });
  const std::string table = format_summary(rows);
  emit(rc, "summary.txt", [&](std::ostream& os) { os << table; });
  out << table;
  out << fmt::format("windows {}  macro steps {}  rejected {}  micro steps {}  outputs in {}\n",
                     r.windows, r.macro_steps, r.rejected_steps, r.micro_stats.steps, rc.out_dir);
  return kExitOk;
}

int cmd_compare(RunConfig rc, bool t_end_given, std::ostream& out) {
  const Loaded l = load_inputs(rc, t_end_given);
  const Prepared p = prepare(l);
  const SimulationResult cand = run_simulation(p.sys, p.x0, l.schedule, rc.hmm);
  Rk4Options ro;
  ro.step = rc.reference_step;
  ro.t_end = rc.hmm.t_end;
  ro.output_times = micro_sample_times(cand);
  const SimulationResult ref = rk4_simulate(p.sys, p.x0, l.schedule, ro);
  const ErrorReport e = integral_error(cand, ref, rc.hmm.t_end, p.sys.layout());
  write_run_outputs(rc, p.sys, cand);
  emit(rc, "errors.csv", [&](std::ostream& os) { write_error_csv(e, os); });
  const std::vector<SummaryRow> rows{
      {label_of(rc.hmm), cand.timers.total, cand.average_macro_step(), e.integral_error, e.speedup()}};
  emit(rc, "summary.csv", [&](std::ostream& os) { write_summary_csv(rows, os); });
  const std::string table = format_summary(rows);
  emit(rc, "summary.txt", [&](std::ostream& os) { os << table; });
  out << table;
  out << fmt::format("max abs error {:.3e} ({} at t = {:.6f} s), max normalized error {:.4f} %\n",
                     e.max_abs_error, e.max_abs_state, e.max_abs_time, e.max_normalized_pct);
  return kExitOk;
}

int cmd_sweep(RunConfig rc, const Flags& f, bool t_end_given, std::ostream& out) {
  const bool by_h = f.o_H->count() > 0, by_tol = f.o_tol->count() > 0;
  if (!by_h && !by_tol) throw ConfigError("sweep needs --H or --tol with a comma-separated list");
  const Loaded l = load_inputs(rc, t_end_given);
  const Prepared p = prepare(l);
  HmmConfig base = rc.hmm;
  base.mode = RunMode::micro_only;
  const SimulationResult micro = run_simulation(p.sys, p.x0, l.schedule, base);

  if (by_h) {
    std::vector<SpeedupRun> runs;
    for (const auto& item : split_list(f.h_text)) {
      HmmConfig h = rc.hmm;
      h.mode = RunMode::hmm_fixed;
      h.macro_period = parse_time_with_eta(item, h.eta);
      const SimulationResult r = run_simulation(p.sys, p.x0, l.schedule, h);
      runs.push_back({label_of(h), h.macro_period / h.eta, r.timers.total});
    }
    const SpeedupTable t = speedup_report(runs, micro.timers.total);
    emit(rc, "speedup.csv", [&](std::ostream& os) { write_speedup_csv(t, os); });
    out << fmt::format("micro-only baseline: {:.3f} s\n", micro.timers.total) << format_speedup_table(t);
    return kExitOk;
  }

  std::optional<SimulationResult> ref;
  std::vector<SummaryRow> rows;
  for (const auto& item : split_list(f.tol_text)) {
    HmmConfig h = rc.hmm;
    h.mode = RunMode::hmm_variable;
    h.tol = parse_time_with_eta(item, 1.0);
    const SimulationResult r = run_simulation(p.sys, p.x0, l.schedule, h);
    SummaryRow row{label_of(h), r.timers.total, r.average_macro_step(), {}, micro.timers.total / r.timers.total};
    if (rc.reference) {
      Rk4Options ro;
      ro.step = rc.reference_step;
      ro.t_end = h.t_end;
      ro.output_times = micro_sample_times(r);
      const SimulationResult rr = rk4_simulate(p.sys, p.x0, l.schedule, ro);
      const ErrorReport e = integral_error(r, rr, h.t_end, p.sys.layout());
      row.integral_error = e.integral_error;
      row.speedup = e.speedup();
    }
    rows.push_back(row);
  }
  emit(rc, "summary.csv", [&](std::ostream& os) { write_summary_csv(rows, os); });
  const std::string table = format_summary(rows);
  emit(rc, "summary.txt", [&](std::ostream& os) { os << table; });
  out << table;
  out << (rc.reference ? "speedup relative to the RK4 reference\n"
                       : fmt::format("speedup relative to micro-only ({:.3f} s)\n", micro.timers.total));
  return kExitOk;
}

int cmd_validate(const std::string& path, const std::string& dump, std::ostream& out) {
  const PowerSystemCase c = load_case(path);
  const System sys(c);
  const auto& lay = sys.layout();
  out << fmt::format("{}: {} buses, {} lines, {} loads, {} generators, {} IBRs\n", c.name,
                     c.buses.size(), c.lines.size(), c.loads.size(), c.generators.size(), c.ibrs.size());
  out << fmt::format("states: {} slow + {} fast = {}\n", lay.slow_size, lay.fast_size(), lay.size());
  if (!dump.empty()) {
    std::ostringstream os;
    write_matrix_dump(sys.network(), os);
    write_file_atomic(dump, os.str());
  }
  out << "ok\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hmmsim: two-timescale EMT simulation with DT micro-steps and kernel-averaged macro-steps"};
  app.set_help_flag("--help", "print this help and exit");  // -h would clash with --h
  app.require_subcommand(1);
  Flags run_f, cmp_f, sweep_f;
  auto* run = app.add_subcommand("run", "simulate and write trajectory, step trace and summary");
  add_common(run, run_f);
  auto* cmp = app.add_subcommand("compare", "simulate, run the RK4 reference and report errors");
  add_common(cmp, cmp_f);
  auto* sweep = app.add_subcommand("sweep", "H or Tol sweep with speedup table");
  add_common(sweep, sweep_f);
  std::string validate_path, dump_path;
  auto* val = app.add_subcommand("validate-case", "load and check a case file");
  val->add_option("case", validate_path, "case file")->required();
  val->add_option("--dump-matrices", dump_path, "write the assembled network matrices here");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*val) return cmd_validate(validate_path, dump_path, out);
    if (*run) return cmd_run(resolve(run_f, false), run_f.o_t_end->count() > 0, out);
    if (*cmp) {
      RunConfig rc = resolve(cmp_f, false);
      rc.reference = true;
      return cmd_compare(rc, cmp_f.o_t_end->count() > 0, out);
    }
    if (*sweep) return cmd_sweep(resolve(sweep_f, true), sweep_f, sweep_f.o_t_end->count() > 0, out);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CaseError& e) {
    err << "case error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << fmt::format("numerical failure at t = {:.6f} s: {}\n", e.time(), e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace hmm
