#include "swarmlearn/groundtruth.hpp"

#include <cstdio>
#include <numbers>

namespace swarmlearn {
namespace {

void check_planar(const SwarmState& z, const char* who) {
  if (z.cols() != 4) throw ValidationError(std::string(who) + ": expected 2D state rows");
}

Eigen::Vector3d clamp_magnitude(const Eigen::Vector3d& v, double max_norm) {
  const double norm = v.norm();
  return norm > max_norm ? Eigen::Vector3d(v * (max_norm / norm)) : v;
}

Eigen::Vector3d random_unit3(CounterRng& gen) {
  const double zc = gen.uniform(-1.0, 1.0);
  const double phi = gen.uniform(0.0, 2.0 * std::numbers::pi);
  const double rho = std::sqrt(std::max(0.0, 1.0 - zc * zc));
  return {rho * std::cos(phi), rho * std::sin(phi), zc};
}

}  // namespace

Eigen::Vector2d tanner_control(Index i, const SwarmState& z) {
  check_planar(z, "tanner_control");
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  const Eigen::Vector2d ri = z.row(i).head<2>().transpose();
  const Eigen::Vector2d vi = z.row(i).tail<2>().transpose();
  for (Index j = 0; j < z.rows(); ++j) {
    if (j == i) continue;
    const Eigen::Vector2d diff = ri - z.row(j).head<2>().transpose();
    const double d = diff.norm();
    if (d == 0.0)
      throw SingularConfiguration("robots " + std::to_string(i) + " and " + std::to_string(j) +
                                  " coincide");
    u -= vi - z.row(j).tail<2>().transpose();
    u -= TannerPotential::slope(d) * diff / d;
  }
  return u;
}

SwarmState tanner_derivative(const SwarmState& z) {
  check_planar(z, "tanner_derivative");
  SwarmState out(z.rows(), 4);
  const Index n = z.rows();
  // Exceptions may not cross the parallel region boundary.
  bool singular = false;
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    out(i, 0) = z(i, 2);
    out(i, 1) = z(i, 3);
    double ux = 0.0, uy = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = z(i, 0) - z(j, 0);
      const double dy = z(i, 1) - z(j, 1);
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d == 0.0) {
#pragma omp atomic write
        singular = true;
        continue;
      }
      const double s = TannerPotential::slope(d) / d;
      ux -= (z(i, 2) - z(j, 2)) + s * dx;
      uy -= (z(i, 3) - z(j, 3)) + s * dy;
    }
    out(i, 2) = ux;
    out(i, 3) = uy;
  }
  if (singular) throw SingularConfiguration("tanner_derivative: coincident robots");
  return out;
}

SwarmState tanner_derivative_serial(const SwarmState& z) {
  check_planar(z, "tanner_derivative_serial");
  const Index n = z.rows();
  SwarmState out = SwarmState::Zero(n, 4);
  out.leftCols(2) = z.rightCols(2);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const Eigen::Vector2d diff = (z.row(i).head<2>() - z.row(j).head<2>()).transpose();
      const double d = diff.norm();
      if (d == 0.0) throw SingularConfiguration("tanner_derivative_serial: coincident robots");
      const Eigen::Vector2d dv = (z.row(i).tail<2>() - z.row(j).tail<2>()).transpose();
      const Eigen::Vector2d f = dv + TannerPotential::slope(d) * diff / d;
      out.row(i).tail<2>() -= f.transpose();
      out.row(j).tail<2>() += f.transpose();
    }
  }
  return out;
}

SwarmState init_2d_swarm(Index n, RngSpec rng, Range speed, Range bias) {
  if (n < 1) throw ValidationError("init_2d_swarm: n must be >= 1");
  CounterRng gen(rng);
  SwarmState z(n, 4);
  const double radius = std::sqrt(static_cast<double>(n));
  const double two_pi = 2.0 * std::numbers::pi;
  for (Index i = 0; i < n; ++i) {
    const double r = radius * std::sqrt(gen.uniform());
    const double a = gen.uniform(0.0, two_pi);
    z(i, 0) = r * std::cos(a);
    z(i, 1) = r * std::sin(a);
    const double s = gen.uniform(speed.lo, speed.hi);
    const double b = gen.uniform(0.0, two_pi);
    z(i, 2) = s * std::cos(b);
    z(i, 3) = s * std::sin(b);
  }
  const double bs = gen.uniform(bias.lo, bias.hi);
  const double ba = gen.uniform(0.0, two_pi);
  z.col(2).array() += bs * std::cos(ba);
  z.col(3).array() += bs * std::sin(ba);
  return z;
}

void BoidsParams::validate() const {
  if (!(min_speed > 0.0 && min_speed <= max_speed))
    throw ValidationError("boids: need 0 < min_speed <= max_speed");
  if (!(comm_radius > 0.0 && avoid_radius > 0.0 && scout_radius > 0.0 && max_search_dist > 0.0))
    throw ValidationError("boids: radii must be positive");
  if (!(cube_half_side > 0.0 && dt > 0.0)) throw ValidationError("boids: bad cube or dt");
}

BoidsState boids_step(const BoidsState& s, const BoidsParams& p) {
  const Index n = s.position.rows();
  if (s.position.cols() != 3 || s.velocity.cols() != 3 || s.velocity.rows() != n)
    throw ValidationError("boids_step: expected n x 3 position and velocity");
  BoidsState next{Matrix(n, 3), Matrix(n, 3)};
  const double comm2 = p.comm_radius * p.comm_radius;
  const double avoid2 = p.avoid_radius * p.avoid_radius;
  const double inner = p.cube_half_side - p.scout_radius;

#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    const Eigen::Vector3d pos = s.position.row(i).transpose();
    const Eigen::Vector3d vel = s.velocity.row(i).transpose();
    const double speed = vel.norm();
    const Eigen::Vector3d forward = speed > 0.0 ? Eigen::Vector3d(vel / speed) : Eigen::Vector3d::UnitX();

    auto steer = [&](const Eigen::Vector3d& target) -> Eigen::Vector3d {
      const double norm = target.norm();
      if (norm == 0.0) return Eigen::Vector3d::Zero();
      return clamp_magnitude(target * (p.max_speed / norm) - vel, p.max_steer);
    };

    Eigen::Vector3d heading_sum = Eigen::Vector3d::Zero();
    Eigen::Vector3d centre = Eigen::Vector3d::Zero();
    Eigen::Vector3d separation = Eigen::Vector3d::Zero();
    int mates = 0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const Eigen::Vector3d offset = s.position.row(j).transpose() - pos;
      const double d2 = offset.squaredNorm();
      if (d2 > comm2) continue;
      const double vj = s.velocity.row(j).norm();
      if (vj > 0.0) heading_sum += s.velocity.row(j).transpose() / vj;
      centre += s.position.row(j).transpose();
      ++mates;
      if (d2 < avoid2 && d2 > 0.0) separation -= offset / d2;
    }

    Eigen::Vector3d accel = Eigen::Vector3d::Zero();
    if (mates > 0) {
      centre /= static_cast<double>(mates);
      accel += p.w_alignment * steer(heading_sum);
      accel += p.w_cohesion * steer(centre - pos);
      accel += p.w_separation * steer(separation);
    }

    // Scout ray: a probe of length max_search_dist along the heading that
    // leaves the cube shrunk by the scout radius means a wall is ahead.
    const Eigen::Vector3d probe = pos + p.max_search_dist * forward;
    if ((probe.array().abs() > inner).any()) {
      Eigen::Vector3d away = Eigen::Vector3d::Zero();
      for (int axis = 0; axis < 3; ++axis) {
        for (double side : {-1.0, 1.0}) {
          const double gap = p.cube_half_side - side * pos[axis];
          if (gap > p.max_search_dist) continue;
          away[axis] -= side / std::max(gap, 1e-6);
        }
      }
      accel += p.w_obstacle * steer(away);
    }

    Eigen::Vector3d v = vel + p.dt * accel;
    double vn = v.norm();
    const Eigen::Vector3d dir = vn > 0.0 ? Eigen::Vector3d(v / vn) : forward;
    vn = std::clamp(vn, p.min_speed, p.max_speed);
    v = dir * vn;
    next.velocity.row(i) = v.transpose();
    next.position.row(i) = (pos + p.dt * v).transpose();
  }

  const double limit = 3.0 * p.cube_half_side;
  if ((next.position.array().abs() > limit).any())
    throw NumericalError("boids_step: a boid left the cube by more than one side length");
  return next;
}

SwarmState boids_observation(const BoidsState& s) {
  const Index n = s.position.rows();
  SwarmState z(n, 6);
  for (Index i = 0; i < n; ++i) {
    z.row(i).head<3>() = s.position.row(i);
    z.row(i).tail<3>() = s.velocity.row(i).normalized();
  }
  return z;
}

BoidsState boids_from_observation(const SwarmState& z, double speed) {
  if (z.cols() != 6) throw ValidationError("boids_from_observation: expected 3D state rows");
  BoidsState s{z.leftCols(3), speed * z.rightCols(3)};
  return s;
}

SwarmState init_3d_swarm(Index n, RngSpec rng, double radius) {
  if (n < 1) throw ValidationError("init_3d_swarm: n must be >= 1");
  CounterRng gen(rng);
  SwarmState z(n, 6);
  for (Index i = 0; i < n; ++i) {
    const double r = radius * std::cbrt(gen.uniform());
    z.row(i).head<3>() = (r * random_unit3(gen)).transpose();
    z.row(i).tail<3>() = random_unit3(gen).transpose();
  }
  return z;
}

Trajectory simulate_tanner(const SwarmState& z0, std::size_t steps, double dt) {
  return rollout([](const SwarmState& z) { return tanner_derivative(z); }, z0, steps, dt,
                 Space::planar);
}

Trajectory simulate_boids(const SwarmState& z0, std::size_t frames, std::size_t discard,
                          const BoidsParams& p) {
  p.validate();
  if (frames <= discard + 1) throw ValidationError("simulate_boids: too few frames after discard");
  Trajectory traj;
  traj.space = Space::spatial;
  traj.dt = p.dt;
  traj.snapshots.reserve(frames - discard);
  BoidsState s = boids_from_observation(z0, kInitialBoidSpeed);
  for (std::size_t f = 0; f < frames; ++f) {
    s = boids_step(s, p);
    if (f >= discard) traj.snapshots.push_back(boids_observation(s));
  }
  return traj;
}

void DatasetSpec::validate() const {
  if (n < 2) throw ValidationError("dataset: n must be >= 2");
  if (traj_count < 1) throw ValidationError("dataset: traj_count must be >= 1");
  if (train_count > traj_count) throw ValidationError("dataset: train_count exceeds traj_count");
  if (steps < 1) throw ValidationError("dataset: steps must be >= 1");
  if (!(noise_var >= 0.0)) throw ValidationError("dataset: noise_var must be >= 0");
  if (!(dt > 0.0)) throw ValidationError("dataset: dt must be positive");
  if (space == Space::spatial) {
    boids.validate();
    if (steps <= discard + 1) throw ValidationError("dataset: discard leaves fewer than 2 frames");
  }
}

std::vector<Trajectory> Dataset::train() const {
  std::vector<Trajectory> out;
  for (std::size_t k = 0; k < trajectories.size(); ++k)
    if (entries[k].train) out.push_back(trajectories[k]);
  return out;
}

std::vector<Trajectory> Dataset::test() const {
  std::vector<Trajectory> out;
  for (std::size_t k = 0; k < trajectories.size(); ++k)
    if (!entries[k].train) out.push_back(trajectories[k]);
  return out;
}

Dataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.spec = spec;
  ds.trajectories.resize(spec.traj_count);
  ds.entries.resize(spec.traj_count);
  BoidsParams boids = spec.boids;
  boids.dt = spec.dt;

  const auto count = static_cast<std::int64_t>(spec.traj_count);
  std::vector<std::string> failures(spec.traj_count);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t kk = 0; kk < count; ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    DatasetEntry& e = ds.entries[k];
    char name[32];
    std::snprintf(name, sizeof name, "traj_%03zu.csv", k);
    e.name = name;
    e.init_stream = 2 * k;
    e.noise_stream = 2 * k + 1;
    e.train = k < spec.train_count;
    e.noise_var = e.train ? spec.noise_var : 0.0;
    try {
      const RngSpec init{spec.seed, e.init_stream};
      Trajectory t = spec.space == Space::planar
                         ? simulate_tanner(init_2d_swarm(spec.n, init), spec.steps, spec.dt)
                         : simulate_boids(init_3d_swarm(spec.n, init), spec.steps, spec.discard, boids);
      if (e.train) t = add_stabilization_noise(t, spec.noise_var, {spec.seed, e.noise_stream});
      ds.trajectories[k] = std::move(t);
    } catch (const std::exception& ex) {
      failures[k] = ex.what();
    }
  }
  for (std::size_t k = 0; k < failures.size(); ++k)
    if (!failures[k].empty())
      throw NumericalError("trajectory " + std::to_string(k) + ": " + failures[k]);
  return ds;
}

}  // namespace swarmlearn
