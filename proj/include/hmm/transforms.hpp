#pragma once

#include "hmm/model.hpp"

namespace hmm {

// P(theta) maps [a, b, c] to [0, d, q] (amplitude-invariant, 2/3 scaled).
Mat3 park_matrix(double theta);
Mat3 inverse_park_matrix(double theta);

// Row-sum infinity norm bound of P(theta) over all theta.
inline constexpr double kParkNormBound = 4.0 / 3.0;

enum class FrameMode {
  global_reference,  // every fast triplet rotated by theta_global
  per_device_local,  // source currents use their own device angle
  identity,          // no rotation; generic HMM regression configuration
};

struct ParkAngleSource {
  FrameMode mode = FrameMode::global_reference;
  std::size_t reference = 0;  // source index supplying theta_global
  double theta = 0.0;
  double rate = 0.0;
  std::vector<double> source_theta;  // per-device angles, used in local mode
};

// Angles implied by the slow block of x (or of a macro state, whose slow
// block is identical) at time t.
ParkAngleSource angles_at(const PowerSystemCase& c, const StateLayout& layout, const Vector& x,
                          double t, FrameMode mode);

// Macro state: same layout as x, fast triplets expressed as [0, d, q].
using MacroState = Vector;

MacroState compress(const Vector& x, const StateLayout& layout, const ParkAngleSource& angles);
Vector reconstruct(const MacroState& u, const StateLayout& layout, const ParkAngleSource& angles);

// In-place variants used on hot paths; out may not alias in.
void compress_into(const Eigen::Ref<const Vector>& x, const StateLayout& layout,
                   const ParkAngleSource& angles, Eigen::Ref<Vector> out);
void reconstruct_into(const Eigen::Ref<const Vector>& u, const StateLayout& layout,
                      const ParkAngleSource& angles, Eigen::Ref<Vector> out);

}  // namespace hmm
