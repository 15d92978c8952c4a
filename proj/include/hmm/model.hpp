#pragma once

#include "hmm/common.hpp"

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace hmm {

// All electrical quantities below are per-unit on the case MVA base and the
// bus kV base. Time is in seconds, so inductances and capacitances are stored
// as pu*s (reactance or susceptance divided by the nominal angular frequency).

enum class Timescale { slow, fast };

struct Bus {
  int id = 0;
  double nominal_kv = 1.0;
  double shunt_capacitance = 0.0;  // line charging is added separately at assembly
  double shunt_conductance = 0.0;
};

struct Line {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double resistance = 0.0;
  double inductance = 0.0;
  double charging = 0.0;  // total pi-model capacitance, split between the ends
  std::string name;
};

enum class LoadKind { rl, rc };

// R-L loads are series branches to ground; R-C loads are parallel shunts.
struct Load {
  int id = 0;
  int bus = 0;
  LoadKind kind = LoadKind::rl;
  double resistance = 0.0;   // rl
  double inductance = 0.0;   // rl
  double conductance = 0.0;  // rc
  double capacitance = 0.0;  // rc
  std::string name;
};

struct Tgov1 {
  double r = 0.05;  // droop
  double t1 = 0.5;
  double t2 = 1.0;
  double t3 = 2.0;
  double dt = 0.0;
  double vmin = 0.0;
  double vmax = 10.0;
  double p_ref = 0.0;  // set at initialization
};

struct Sexs {
  double ta = 1.0;
  double tb = 10.0;
  double k = 100.0;
  double te = 0.05;
  double emin = -10.0;
  double emax = 10.0;
  double v_ref = 1.0;  // set at initialization
};

struct SynchronousGenerator {
  int id = 0;
  std::string name;
  int bus = 0;
  double mva = 100.0;
  double h = 5.0;
  double d = 0.0;
  double ra = 0.0;
  double lls = 0.0;
  double lmd = 0.0;
  double lmq = 0.0;
  double llfd = 0.0;
  double ll1d = 0.0;
  double ll1q = 0.0;
  double ll2q = 0.0;
  double rfd = 0.0;
  double r1d = 0.0;
  double r1q = 0.0;
  double r2q = 0.0;
  double p_set = 0.0;
  double v_set = 1.0;
  bool slack = false;
  bool has_governor = true;
  bool has_exciter = true;
  Tgov1 gov;
  Sexs exc;

  // Derived subtransient quantities, filled by finalize().
  double lpp_ad = 0.0;
  double lpp_aq = 0.0;
  double lpp_d = 0.0;
  double lpp_q = 0.0;
  double efd_scale = 0.0;  // r_fd / x_md, maps exciter output to field voltage

  void finalize(double omega0);
};

struct GridFollowingIbr {
  int id = 0;
  std::string name;
  int bus = 0;
  double mva = 100.0;
  double rf = 0.0;
  double lf = 0.0;
  double kp_pll = 50.0;
  double ki_pll = 900.0;
  double kp_p = 0.5;
  double ki_p = 20.0;
  double kp_q = 0.5;
  double ki_q = 20.0;
  double kp_c = 0.0;
  double ki_c = 0.0;
  double kf = 0.0;  // frequency droop, pu power per pu frequency
  double kv = 0.0;  // voltage droop, pu reactive power per pu voltage
  double p_ref = 0.0;
  double q_ref = 0.0;
  double v_ref = 1.0;   // set at initialization
  double v_set = -1.0;  // > 0: voltage-controlled in the power flow, else q_ref is fixed
};

struct ReferenceSelection {
  enum class Kind { generator, ibr };
  Kind kind = Kind::generator;
  int id = 0;
};

struct PowerSystemCase {
  std::string name;
  double frequency_hz = 60.0;
  double omega0 = 2.0 * kPi * 60.0;
  double base_mva = 100.0;
  double default_fault_conductance_siemens = 1.0e4;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Load> loads;
  std::vector<SynchronousGenerator> generators;
  std::vector<GridFollowingIbr> ibrs;
  ReferenceSelection reference;

  std::size_t bus_index(int id) const;
  std::size_t generator_index(int id) const;
  std::size_t ibr_index(int id) const;
  std::size_t load_index(int id) const;
  std::size_t line_index(int id) const;
  double impedance_base(int bus_id) const;
  std::size_t source_count() const { return generators.size() + ibrs.size(); }
  // Bus of source k, where generators come first, then IBRs.
  int source_bus(std::size_t k) const;
  std::string source_name(std::size_t k) const;

  // Checks every invariant; throws CaseError naming the offending element.
  void validate() const;
};

struct StateInfo {
  std::string name;
  std::string device;
  std::string family;
  Timescale scale = Timescale::slow;
};

inline constexpr std::size_t kGeneratorStates = 10;
inline constexpr std::size_t kIbrStates = 6;

namespace gen_state {
inline constexpr std::size_t delta = 0, dw = 1, psi_fd = 2, psi_1d = 3, psi_1q = 4, psi_2q = 5,
                             valve = 6, gov_lead = 7, exc_lead = 8, efd = 9;
}
namespace ibr_state {
inline constexpr std::size_t delta = 0, phi = 1, xi_p = 2, xi_q = 3, xi_d = 4, xi_qc = 5;
}

class StateLayout {
 public:
  std::vector<StateInfo> states;
  std::size_t slow_size = 0;
  std::size_t n_bus = 0;
  std::size_t n_line = 0;
  std::size_t n_edge = 0;  // lines followed by R-L load branches
  std::size_t n_source = 0;
  std::vector<std::size_t> generator_offset;
  std::vector<std::size_t> ibr_offset;
  std::vector<int> edge_load;  // load id per edge, -1 for lines

  std::size_t size() const { return states.size(); }
  std::size_t fast_offset() const { return slow_size; }
  std::size_t fast_size() const { return size() - slow_size; }
  std::size_t v_offset() const { return slow_size; }
  std::size_t w_offset() const { return slow_size + 3 * n_bus; }
  std::size_t i_offset() const { return w_offset() + 3 * n_edge; }
  std::size_t network_size() const { return 3 * (n_bus + n_edge); }
  std::size_t source_offset(std::size_t k) const { return i_offset() + 3 * k; }

  std::size_t index_of(const std::string& name) const;
  const std::string& name_of(std::size_t index) const { return states.at(index).name; }
  bool contains(const std::string& name) const { return lookup_.count(name) != 0; }

  void add(StateInfo info);

 private:
  std::unordered_map<std::string, std::size_t> lookup_;
};

StateLayout build_layout(const PowerSystemCase& c);

std::string bus_state_prefix(const Bus& b);
std::string line_state_prefix(const PowerSystemCase& c, const Line& l);

// Per-run status that device equations depend on besides the state vector.
struct DeviceStatus {
  std::vector<bool> source_active;
  double extra_damping = 0.0;  // added to every generator's D (pu), used while settling
};

DeviceStatus default_device_status(const PowerSystemCase& c);

// Derivatives of all slow states and of every source's terminal current. The
// network block of dx is left untouched.
void device_rhs(const PowerSystemCase& c, const StateLayout& layout, const Vector& x, double t,
                const DeviceStatus& status, Vector& dx);

// Projects limited states back into their bounds and freezes tripped sources.
void clamp_states(const PowerSystemCase& c, const StateLayout& layout, const DeviceStatus& status,
                  Vector& x);

// Rotor (or PLL) electrical angle of device k in the source ordering.
double source_angle(const PowerSystemCase& c, const StateLayout& layout, const Vector& x, double t,
                    std::size_t k);

// Electrical speed (rad/s) of source k.
double source_speed(const PowerSystemCase& c, const StateLayout& layout, const Vector& x, double t,
                    std::size_t k);

std::size_t reference_source(const PowerSystemCase& c);

// Intermediate quantities of one machine evaluation, exposed for tests and
// diagnostics.
struct GeneratorSnapshot {
  double theta = 0.0;
  double omega = 0.0;
  double id = 0.0, iq = 0.0;
  double vd = 0.0, vq = 0.0;
  double psi_d = 0.0, psi_q = 0.0;
  double pe = 0.0;
  double pm = 0.0;
  double vt = 0.0;
};

GeneratorSnapshot generator_snapshot(const PowerSystemCase& c, const StateLayout& layout,
                                     const Vector& x, double t, std::size_t g);

struct IbrSnapshot {
  double theta = 0.0;
  double omega = 0.0;
  double vd = 0.0, vq = 0.0;
  double id = 0.0, iq = 0.0;
  double p = 0.0, q = 0.0;
  double id_ref = 0.0, iq_ref = 0.0;
};

IbrSnapshot ibr_snapshot(const PowerSystemCase& c, const StateLayout& layout, const Vector& x,
                         double t, std::size_t k);

}  // namespace hmm
