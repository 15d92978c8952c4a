#include "hmm/power_flow.hpp"

#include <fmt/format.h>

#include <cmath>

namespace hmm {

ComplexVector edge_admittance(const NetworkMatrices& m, double omega0) {
  const Eigen::Index e = m.l.size() / 3;
  ComplexVector y = ComplexVector::Zero(e);
  for (Eigen::Index k = 0; k < e; ++k)
    if (m.edge_active[static_cast<std::size_t>(k)]) y[k] = 1.0 / Complex(m.r[3 * k], omega0 * m.l[3 * k]);
  return y;
}

namespace {

// Phase-a incidence block of B3 (N x E).
Matrix phase_a_incidence(const NetworkMatrices& m) {
  const Eigen::Index n = m.c.size() / 3, e = m.l.size() / 3;
  Matrix b = Matrix::Zero(n, e);
  for (Eigen::Index row = 0; row < m.b3.outerSize(); ++row)
    for (SparseMatrix::InnerIterator it(m.b3, row); it; ++it)
      if (row % 3 == 0 && it.col() % 3 == 0) b(row / 3, it.col() / 3) = it.value();
  return b;
}

}  // namespace

ComplexMatrix admittance_matrix(const NetworkMatrices& m, double omega0) {
  const Eigen::Index n = m.c.size() / 3;
  const Matrix b = phase_a_incidence(m);
  const ComplexVector y = edge_admittance(m, omega0);
  ComplexMatrix ybus = b.cast<Complex>() * y.asDiagonal() * b.transpose().cast<Complex>();
  for (Eigen::Index i = 0; i < n; ++i) ybus(i, i) += Complex(m.g[3 * i], omega0 * m.c[3 * i]);
  return ybus;
}

PowerFlowResult solve_power_flow(const PowerSystemCase& c, const NetworkMatrices& m, double tol,
                                 int max_iter) {
  const std::size_t n = c.buses.size();
  const ComplexMatrix ybus = admittance_matrix(m, c.omega0);
  PowerFlowResult r;
  r.type.assign(n, BusType::pq);
  Vector p_spec = Vector::Zero(static_cast<Eigen::Index>(n));
  Vector q_spec = Vector::Zero(static_cast<Eigen::Index>(n));
  Vector v_mag = Vector::Ones(static_cast<Eigen::Index>(n));

  std::size_t slack_source = reference_source(c);
  for (std::size_t g = 0; g < c.generators.size(); ++g)
    if (c.generators[g].slack) slack_source = g;
  for (std::size_t k = 0; k < c.source_count(); ++k) {
    if (!m.topology.source_active[k]) continue;
    const std::size_t b = c.bus_index(c.source_bus(k));
    const auto bi = static_cast<Eigen::Index>(b);
    if (k < c.generators.size()) {
      const auto& g = c.generators[k];
      r.type[b] = BusType::pv;
      p_spec[bi] += g.p_set;
      v_mag[bi] = g.v_set;
    } else {
      const auto& d = c.ibrs[k - c.generators.size()];
      p_spec[bi] += d.p_ref;
      if (d.v_set > 0) {
        r.type[b] = BusType::pv;
        v_mag[bi] = d.v_set;
      } else {
        q_spec[bi] += d.q_ref;
      }
    }
  }
  const std::size_t slack_bus = c.bus_index(c.source_bus(slack_source));
  r.type[slack_bus] = BusType::slack;

  std::vector<Eigen::Index> ang_idx, mag_idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (r.type[i] != BusType::slack) ang_idx.push_back(static_cast<Eigen::Index>(i));
    if (r.type[i] == BusType::pq) mag_idx.push_back(static_cast<Eigen::Index>(i));
  }
  const Eigen::Index na = static_cast<Eigen::Index>(ang_idx.size());
  const Eigen::Index nm = static_cast<Eigen::Index>(mag_idx.size());

  Vector va = Vector::Zero(static_cast<Eigen::Index>(n));
  ComplexVector v(static_cast<Eigen::Index>(n));
  auto rebuild = [&] {
    for (std::size_t i = 0; i < n; ++i)
      v[static_cast<Eigen::Index>(i)] = std::polar(v_mag[static_cast<Eigen::Index>(i)], va[static_cast<Eigen::Index>(i)]);
  };
  rebuild();

  Vector f(na + nm);
  auto mismatch = [&] {
    const ComplexVector s = v.cwiseProduct((ybus * v).conjugate());
    for (Eigen::Index k = 0; k < na; ++k) f[k] = s[ang_idx[static_cast<std::size_t>(k)]].real() - p_spec[ang_idx[static_cast<std::size_t>(k)]];
    for (Eigen::Index k = 0; k < nm; ++k) f[na + k] = s[mag_idx[static_cast<std::size_t>(k)]].imag() - q_spec[mag_idx[static_cast<std::size_t>(k)]];
    return f.size() ? f.lpNorm<Eigen::Infinity>() : 0.0;
  };

  double err = mismatch();
  int it = 0;
  while (err > tol) {
    if (++it > max_iter || !std::isfinite(err))
      throw InitializationError(
          fmt::format("power flow did not converge (mismatch {:.3e} after {} iterations); "
                      "the operating point may be infeasible",
                      err, it - 1),
          0.0);
    // dS/dVa and dS/dVm in the usual complex form.
    const ComplexVector ib = ybus * v;
    const ComplexVector vn = v.cwiseQuotient(v.cwiseAbs().cast<Complex>());
    const ComplexMatrix ds_da = Complex(0, 1) * v.asDiagonal() *
                                (ComplexMatrix(ib.asDiagonal()) - ybus * v.asDiagonal()).conjugate();
    const ComplexMatrix ds_dm = v.asDiagonal() * (ybus * vn.asDiagonal()).conjugate() +
                                ComplexMatrix(ib.conjugate().asDiagonal()) * vn.asDiagonal();
    Matrix j(na + nm, na + nm);
    for (Eigen::Index a = 0; a < na; ++a) {
      const auto ra = ang_idx[static_cast<std::size_t>(a)];
      for (Eigen::Index b = 0; b < na; ++b) j(a, b) = ds_da(ra, ang_idx[static_cast<std::size_t>(b)]).real();
      for (Eigen::Index b = 0; b < nm; ++b) j(a, na + b) = ds_dm(ra, mag_idx[static_cast<std::size_t>(b)]).real();
    }
    for (Eigen::Index a = 0; a < nm; ++a) {
      const auto rm = mag_idx[static_cast<std::size_t>(a)];
      for (Eigen::Index b = 0; b < na; ++b) j(na + a, b) = ds_da(rm, ang_idx[static_cast<std::size_t>(b)]).imag();
      for (Eigen::Index b = 0; b < nm; ++b) j(na + a, na + b) = ds_dm(rm, mag_idx[static_cast<std::size_t>(b)]).imag();
    }
    const Vector dx = j.partialPivLu().solve(-f);
    for (Eigen::Index k = 0; k < na; ++k) va[ang_idx[static_cast<std::size_t>(k)]] += dx[k];
    for (Eigen::Index k = 0; k < nm; ++k) v_mag[mag_idx[static_cast<std::size_t>(k)]] += dx[na + k];
    rebuild();
    err = mismatch();
  }

  r.iterations = it;
  r.mismatch = err;
  r.voltage = v;
  const ComplexVector s_bus = v.cwiseProduct((ybus * v).conjugate());
  const Matrix b = phase_a_incidence(m);
  r.edge_current = edge_admittance(m, c.omega0).cwiseProduct(b.transpose().cast<Complex>() * v);

  // Split each bus injection among its sources: P by setpoint, the
  // remaining Q to the single voltage-controlling source (one source per bus).
  r.source_power = ComplexVector::Zero(static_cast<Eigen::Index>(c.source_count()));
  r.source_current = ComplexVector::Zero(static_cast<Eigen::Index>(c.source_count()));
  for (std::size_t k = 0; k < c.source_count(); ++k) {
    if (!m.topology.source_active[k]) continue;
    const auto bi = static_cast<Eigen::Index>(c.bus_index(c.source_bus(k)));
    const auto ki = static_cast<Eigen::Index>(k);
    r.source_power[ki] = s_bus[bi];
    r.source_current[ki] = std::conj(s_bus[bi] / v[bi]);
  }
  return r;
}

}  // namespace hmm
