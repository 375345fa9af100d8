#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "swarmlearn/errors.hpp"

namespace swarmlearn {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// One row per robot. 2D rows are [rx, ry, vx, vy]; 3D rows are
// [rx, ry, rz, hx, hy, hz] with h a unit heading.
using SwarmState = Matrix;

enum class Space { planar, spatial };

std::string_view to_string(Space space);
Space parse_space(std::string_view tag);

constexpr Index state_dim(Space space) { return space == Space::planar ? 4 : 6; }
constexpr Index position_dim(Space space) { return space == Space::planar ? 2 : 3; }

inline auto positions(const SwarmState& z) { return z.leftCols(z.cols() / 2); }

bool all_finite(const Matrix& m);

struct Trajectory {
  std::vector<SwarmState> snapshots;
  double dt = 0.01;
  double t0 = 0.0;
  Space space = Space::planar;

  std::size_t length() const { return snapshots.size(); }
  Index robots() const { return snapshots.empty() ? 0 : snapshots.front().rows(); }
  Index dim() const { return snapshots.empty() ? 0 : snapshots.front().cols(); }

  // Throws ValidationError when snapshots disagree in shape or hold
  // non-finite entries.
  void validate() const;
};

// Largest deviation of a 3D heading norm from 1 over all robots.
double max_heading_defect(const SwarmState& z);

struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

// Counter-based generator: draw number c of stream (seed, stream_id) is a
// pure function of the triple, so substreams can be consumed in any order
// or in parallel without changing values.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(RngSpec spec, std::uint64_t counter = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  static std::uint64_t draw(RngSpec spec, std::uint64_t counter);

  result_type operator()() { return mix(key_ + (counter_++ + 1) * kGolden); }

  // [0, 1)
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Box-Muller; consumes two draws.
  double normal();

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  static std::uint64_t mix(std::uint64_t x);

  std::uint64_t key_;
  std::uint64_t counter_;
};

// Standard RK4 update z + h/6 (k1 + 2 k2 + 2 k3 + k4). `step` only labels
// the error raised when a stage derivative is not finite.
template <class Deriv>
SwarmState rk4_step(Deriv&& deriv, const SwarmState& z, double h, std::size_t step = 0) {
  if (!(h > 0.0)) throw ValidationError("rk4_step: step size must be positive");
  auto stage = [&](const SwarmState& at) {
    SwarmState k = deriv(at);
    if (k.rows() != z.rows() || k.cols() != z.cols())
      throw ValidationError("rk4_step: derivative shape differs from state shape");
    if (!all_finite(k)) throw IntegrationError(step, "non-finite derivative");
    return k;
  };
  const SwarmState k1 = stage(z);
  const SwarmState k2 = stage(z + (0.5 * h) * k1);
  const SwarmState k3 = stage(z + (0.5 * h) * k2);
  const SwarmState k4 = stage(z + h * k3);
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <class Deriv>
Trajectory rollout(Deriv&& deriv, const SwarmState& z0, std::size_t steps, double h,
                   Space space = Space::planar) {
  if (steps < 1) throw ValidationError("rollout: steps must be >= 1");
  Trajectory traj;
  traj.dt = h;
  traj.space = space;
  traj.snapshots.reserve(steps + 1);
  traj.snapshots.push_back(z0);
  for (std::size_t s = 0; s < steps; ++s)
    traj.snapshots.push_back(rk4_step(deriv, traj.snapshots.back(), h, s));
  return traj;
}

// Adds i.i.d. N(0, variance) to every entry. Entry e of the flattened
// trajectory always uses draws 2e and 2e+1 of `rng`.
Trajectory add_stabilization_noise(const Trajectory& traj, double variance, RngSpec rng);

}  // namespace swarmlearn
