#include "hmm/transforms.hpp"

#include <cmath>

namespace hmm {

Mat3 park_matrix(double theta) {
  // Wrap first so the three shifted phase angles round consistently.
  theta = std::remainder(theta, 2.0 * kPi);
  Mat3 p;
  const double third = 1.0 / 3.0, two3 = 2.0 / 3.0;
  for (int k = 0; k < 3; ++k) {
    const double a = theta - k * kTwoPiOver3;
    // Phase c sits at theta + 2pi/3, i.e. theta - 4pi/3.
    p(0, k) = third;
    p(1, k) = two3 * std::cos(a);
    p(2, k) = -two3 * std::sin(a);
  }
  return p;
}

Mat3 inverse_park_matrix(double theta) {
  theta = std::remainder(theta, 2.0 * kPi);
  Mat3 p;
  for (int k = 0; k < 3; ++k) {
    const double a = theta - k * kTwoPiOver3;
    p(k, 0) = 1.0;
    p(k, 1) = std::cos(a);
    p(k, 2) = -std::sin(a);
  }
  return p;
}

ParkAngleSource angles_at(const PowerSystemCase& c, const StateLayout& layout, const Vector& x,
                          double t, FrameMode mode) {
  ParkAngleSource a;
  a.mode = mode;
  if (c.source_count() == 0 || mode == FrameMode::identity) {
    a.theta = c.omega0 * t;
    a.rate = c.omega0;
    return a;
  }
  a.reference = reference_source(c);
  a.theta = source_angle(c, layout, x, t, a.reference);
  a.rate = a.reference < c.generators.size()
               ? c.omega0 + x[static_cast<Eigen::Index>(layout.generator_offset[a.reference] + gen_state::dw)]
               : c.omega0;
  if (mode == FrameMode::per_device_local) {
    a.source_theta.resize(c.source_count());
    for (std::size_t k = 0; k < c.source_count(); ++k)
      a.source_theta[k] = source_angle(c, layout, x, t, k);
  }
  return a;
}

namespace {

template <bool Forward>
void transform(const Eigen::Ref<const Vector>& in, const StateLayout& layout,
               const ParkAngleSource& angles, Eigen::Ref<Vector> out) {
  const auto slow = static_cast<Eigen::Index>(layout.slow_size);
  out.head(slow) = in.head(slow);
  const Eigen::Index n = in.size();
  if (angles.mode == FrameMode::identity) {
    out.tail(n - slow) = in.tail(n - slow);
    return;
  }
  const Mat3 global = Forward ? park_matrix(angles.theta) : inverse_park_matrix(angles.theta);
  const auto i_off = static_cast<Eigen::Index>(layout.i_offset());
  for (Eigen::Index j = slow; j < n; j += 3) {
    if (angles.mode == FrameMode::per_device_local && j >= i_off) {
      const double th = angles.source_theta[static_cast<std::size_t>((j - i_off) / 3)];
      const Mat3 local = Forward ? park_matrix(th) : inverse_park_matrix(th);
      out.segment<3>(j).noalias() = local * in.segment<3>(j);
    } else {
      out.segment<3>(j).noalias() = global * in.segment<3>(j);
    }
  }
}

}  // namespace

void compress_into(const Eigen::Ref<const Vector>& x, const StateLayout& layout,
                   const ParkAngleSource& angles, Eigen::Ref<Vector> out) {
  transform<true>(x, layout, angles, out);
}

void reconstruct_into(const Eigen::Ref<const Vector>& u, const StateLayout& layout,
                      const ParkAngleSource& angles, Eigen::Ref<Vector> out) {
  transform<false>(u, layout, angles, out);
}

MacroState compress(const Vector& x, const StateLayout& layout, const ParkAngleSource& angles) {
  Vector u(x.size());
  compress_into(x, layout, angles, u);
  return u;
}

Vector reconstruct(const MacroState& u, const StateLayout& layout, const ParkAngleSource& angles) {
  Vector x(u.size());
  reconstruct_into(u, layout, angles, x);
  return x;
}

}  // namespace hmm
