#include "hmm/micro_solver.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace hmm {

MicroSolver::MicroSolver(const System& sys, MicroConfig cfg)
    : sys_(sys), cfg_(cfg), dts_(sys, cfg.order) {
  if (!cfg_.variable() && !(cfg_.fixed_step > 0))
    throw ConfigError("micro solver needs a fixed step h > 0 or a defect tolerance eps1 > 0");
  if (!(cfg_.h_max > 0)) throw ConfigError("micro solver h_max must be > 0");
}

double MicroSolver::choose_step(double q_l, double remaining) const {
  double h;
  if (cfg_.variable()) {
    // No lower clamp here: steps below h_min are counted as underflow
    // instead, so every accepted step honors the defect tolerance.
    h = q_l > 0 ? std::min(std::pow(cfg_.eps1 / q_l, 1.0 / cfg_.order), cfg_.h_max) : cfg_.h_max;
  } else {
    h = cfg_.fixed_step;
  }
  // Land exactly on the target; absorb slivers into the last step.
  if (remaining <= h * (1.0 + 1e-6)) return remaining;
  return h;
}

void MicroSolver::advance(double& t, Vector& x, double t_end, const StepObserver& observer) {
  while (t < t_end) {
    const double q = dts_.compute(t, x, series_);
    last_q_ = q;
    const double remaining = t_end - t;
    const double h = choose_step(q, remaining);
    if (cfg_.variable() && h < cfg_.h_min && h < remaining) {
      ++stats_.underflow_steps;
      if (++consecutive_underflow_ > cfg_.underflow_limit || !(h > 1e-15))
        throw StiffFailure(fmt::format("micro step underflow: h = {:.3e} s below h_min = {:.3e} s "
                                       "for {} consecutive steps",
                                       h, cfg_.h_min, consecutive_underflow_),
                           t, x);
    } else {
      consecutive_underflow_ = 0;
    }
    const double defect = defect_from_norm(q, h, cfg_.order);
    series_.evaluate_into(h, x);
    if (cfg_.global_defect_check) {
      scratch_.resize(x.size());
      scratch2_.resize(x.size());
      series_.derivative_into(h, scratch_);
      sys_.rhs(x, t + h, scratch2_);
      stats_.max_global_defect =
          std::max(stats_.max_global_defect, (scratch_ - scratch2_).lpNorm<Eigen::Infinity>());
    }
    sys_.project(x);
    const bool last = (h == remaining);
    t = last ? t_end : t + h;
    if (!x.allFinite()) throw StiffFailure("non-finite state after micro step", t, x);
    ++stats_.steps;
    stats_.max_defect = std::max(stats_.max_defect, defect);
    stats_.min_step = stats_.steps == 1 ? h : std::min(stats_.min_step, h);
    stats_.max_step = std::max(stats_.max_step, h);
    if (observer) observer(t, h, x, series_);
  }
}

MicroWindowResult MicroSolver::run_window(const Vector& x0, double t_n, double eta) {
  if (!(eta > 0)) throw std::invalid_argument("window length must be > 0");
  const int points = cfg_.dense_points;
  MicroWindowResult r;
  r.dense.resize(x0.size(), points);
  r.dense_times.resize(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) r.dense_times[static_cast<std::size_t>(i)] = t_n + eta * i / (points - 1);
  r.dense.col(0) = x0;
  int next = 1;
  double t = t_n;
  Vector x = x0;
  const double t_end = t_n + eta;
  double t_prev = t_n;
  auto observer = [&](double t_new, double h, const Vector& xn, const DtSeries& s) {
    r.times.push_back(t_new);
    r.steps.push_back(h);
    r.states.push_back(xn);
    while (next < points) {
      const double tau = r.dense_times[static_cast<std::size_t>(next)];
      if (next == points - 1) {
        if (t_new != t_end) break;
        r.dense.col(next) = xn;
      } else {
        if (tau > t_new) break;
        auto col = r.dense.col(next);
        s.evaluate_into(std::min(tau - t_prev, h), col);
      }
      ++next;
    }
    t_prev = t_new;
  };
  advance(t, x, t_end, observer);
  r.t_end = t_end;
  r.x_end = x;
  r.f_slow_end = sys_.slow_rhs(x, t_end);
  return r;
}

}  // namespace hmm
