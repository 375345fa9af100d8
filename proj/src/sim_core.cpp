#include "swarmlearn/sim_core.hpp"

#include <numbers>

namespace swarmlearn {

std::string_view to_string(Space space) { return space == Space::planar ? "2d" : "3d"; }

Space parse_space(std::string_view tag) {
  if (tag == "2d") return Space::planar;
  if (tag == "3d") return Space::spatial;
  throw ValidationError("unknown space tag '" + std::string(tag) + "' (expected 2d or 3d)");
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

void Trajectory::validate() const {
  if (snapshots.empty()) throw ValidationError("trajectory has no snapshots");
  const Index n = robots();
  const Index d = dim();
  if (d != state_dim(space))
    throw ValidationError("trajectory state dimension " + std::to_string(d) +
                          " does not match space " + std::string(to_string(space)));
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    if (snapshots[s].rows() != n || snapshots[s].cols() != d)
      throw ValidationError("snapshot " + std::to_string(s) + " has inconsistent shape");
    if (!snapshots[s].allFinite())
      throw ValidationError("snapshot " + std::to_string(s) + " holds non-finite entries");
  }
  if (!(dt > 0.0)) throw ValidationError("trajectory dt must be positive");
}

double max_heading_defect(const SwarmState& z) {
  if (z.cols() != 6) return 0.0;
  double worst = 0.0;
  for (Index i = 0; i < z.rows(); ++i)
    worst = std::max(worst, std::abs(z.row(i).tail<3>().norm() - 1.0));
  return worst;
}

std::uint64_t CounterRng::mix(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

CounterRng::CounterRng(RngSpec spec, std::uint64_t counter)
    : key_(mix(spec.seed ^ mix(spec.stream_id + 0x632BE59BD9B4E019ull))), counter_(counter) {}

std::uint64_t CounterRng::draw(RngSpec spec, std::uint64_t counter) {
  CounterRng rng(spec, counter);
  return rng();
}

double CounterRng::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double CounterRng::normal() {
  // u1 in (0, 1] keeps the log finite.
  const double u1 = static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Trajectory add_stabilization_noise(const Trajectory& traj, double variance, RngSpec rng) {
  if (!(variance >= 0.0)) throw ValidationError("noise variance must be nonnegative");
  Trajectory noisy = traj;
  if (variance == 0.0 || traj.snapshots.empty()) return noisy;
  const double sigma = std::sqrt(variance);
  const auto per_snapshot = static_cast<std::uint64_t>(traj.robots() * traj.dim());
  const auto count = static_cast<std::int64_t>(noisy.snapshots.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < count; ++s) {
    auto& z = noisy.snapshots[static_cast<std::size_t>(s)];
    double* data = z.data();
    const std::uint64_t base = static_cast<std::uint64_t>(s) * per_snapshot;
    for (std::uint64_t e = 0; e < per_snapshot; ++e) {
      CounterRng gen(rng, 2 * (base + e));
      data[e] += sigma * gen.normal();
    }
  }
  return noisy;
}

}  // namespace swarmlearn
