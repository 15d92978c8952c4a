#pragma once

// Small stationary/rotating frame helpers shared by the pointwise and
// Taylor-series device evaluations.

#include <cmath>

namespace hmm::frames {

inline constexpr double kInvSqrt3 = 0.57735026918962576451;
inline constexpr double kSqrt3Over2 = 0.86602540378443864676;

struct AlphaBeta0 {
  double alpha, beta, zero;
};

inline AlphaBeta0 clarke(double a, double b, double c) {
  return {(2.0 * a - b - c) / 3.0, (b - c) * kInvSqrt3, (a + b + c) / 3.0};
}

inline void inverse_clarke(double alpha, double beta, double zero, double* abc) {
  abc[0] = alpha + zero;
  abc[1] = -0.5 * alpha + kSqrt3Over2 * beta + zero;
  abc[2] = -0.5 * alpha - kSqrt3Over2 * beta + zero;
}

// alpha/beta -> d/q for a frame at angle theta (cos, sin given).
inline void to_dq(double alpha, double beta, double c, double s, double& d, double& q) {
  d = alpha * c + beta * s;
  q = -alpha * s + beta * c;
}

inline void from_dq(double d, double q, double c, double s, double& alpha, double& beta) {
  alpha = d * c - q * s;
  beta = d * s + q * c;
}

}  // namespace hmm::frames
