#pragma once

#include "hmm/network.hpp"

#include <complex>

namespace hmm {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

enum class BusType { pq, pv, slack };

// Phasors are peak values with v_a(t) = Re(V e^{j w0 t}).
struct PowerFlowResult {
  ComplexVector voltage;       // per bus
  ComplexVector edge_current;  // per edge, oriented as in B3
  ComplexVector source_power;  // per source, S = V conj(I)
  ComplexVector source_current;
  std::vector<BusType> type;
  int iterations = 0;
  double mismatch = 0.0;
};

// Positive-sequence admittance matrix at w0 built from the assembled
// network (phase-a rows), so shunts, charging and topology match exactly.
ComplexMatrix admittance_matrix(const NetworkMatrices& m, double omega0);
// Per-edge series admittance; zero for removed branches.
ComplexVector edge_admittance(const NetworkMatrices& m, double omega0);

// Newton-Raphson in polar form. The slack is the generator flagged `slack`,
// else the reference source; other generators and IBRs with v_set > 0 are
// PV, remaining IBRs PQ. Throws InitializationError when it does not converge.
PowerFlowResult solve_power_flow(const PowerSystemCase& c, const NetworkMatrices& m,
                                 double tol = 1e-11, int max_iter = 30);

}  // namespace hmm
