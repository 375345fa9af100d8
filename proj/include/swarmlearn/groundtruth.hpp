#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swarmlearn/sim_core.hpp"

namespace swarmlearn {

// Pairwise potential V(d) = 1/d^2 + log d^2 used by the global 2D flocking
// controller. Minimum at d = 1.
struct TannerPotential {
  static double value(double d) { return 1.0 / (d * d) + std::log(d * d); }
  static double slope(double d) { return -2.0 / (d * d * d) + 2.0 / d; }
};

// u_i = -sum_j (v_i - v_j) - sum_j grad_{r_i} V(|r_i - r_j|), over all robots.
Eigen::Vector2d tanner_control(Index i, const SwarmState& z);

// [r_dot, v_dot] = [v, u] for every robot. Parallel over robots.
SwarmState tanner_derivative(const SwarmState& z);

// Reference: visits each unordered pair once and applies equal and
// opposite contributions.
SwarmState tanner_derivative_serial(const SwarmState& z);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Positions uniform on the disk of radius sqrt(n); each robot gets a
// velocity with uniform direction and magnitude in `speed`, plus one shared
// bias velocity with magnitude in `bias`.
SwarmState init_2d_swarm(Index n, RngSpec rng, Range speed = {0.0, 3.0}, Range bias = {0.0, 3.0});

struct BoidsParams {
  double min_speed = 2.0;
  double max_speed = 5.0;
  double comm_radius = 2.5;
  double avoid_radius = 1.0;
  double max_steer = 3.0;
  double w_cohesion = 1.0;
  double w_alignment = 1.0;
  double w_separation = 1.0;
  double scout_radius = 0.27;
  double max_search_dist = 5.0;
  double w_obstacle = 10.0;
  double cube_half_side = 5.0;
  double dt = 0.02;

  void validate() const;
};

// Boids carry a full velocity; observations only expose the unit heading.
struct BoidsState {
  Matrix position;  // n x 3
  Matrix velocity;  // n x 3
};

BoidsState boids_step(const BoidsState& s, const BoidsParams& p);

// [position, unit heading] rows.
SwarmState boids_observation(const BoidsState& s);
BoidsState boids_from_observation(const SwarmState& z, double speed);

constexpr double kInitialBoidSpeed = 3.5;

// Positions uniform in the ball of radius 5, headings uniform on the sphere.
SwarmState init_3d_swarm(Index n, RngSpec rng, double radius = 5.0);

Trajectory simulate_tanner(const SwarmState& z0, std::size_t steps, double dt);

// Records the observation after each of `frames` updates and drops the
// first `discard` of them.
Trajectory simulate_boids(const SwarmState& z0, std::size_t frames, std::size_t discard,
                          const BoidsParams& p);

struct DatasetSpec {
  Space space = Space::planar;
  Index n = 10;
  std::size_t traj_count = 50;
  std::size_t train_count = 30;
  std::size_t steps = 2000;
  std::size_t discard = 0;
  double dt = 0.01;
  double noise_var = 0.001;
  std::uint64_t seed = 1;
  BoidsParams boids;

  void validate() const;
};

struct DatasetEntry {
  std::string name;
  std::uint64_t init_stream = 0;
  std::uint64_t noise_stream = 0;
  bool train = false;
  double noise_var = 0.0;
};

struct Dataset {
  DatasetSpec spec;
  std::vector<Trajectory> trajectories;
  std::vector<DatasetEntry> entries;

  std::vector<Trajectory> train() const;
  std::vector<Trajectory> test() const;
};

// Trajectory k uses init stream 2k and noise stream 2k + 1 of spec.seed.
// The first train_count trajectories form the (noisy) training split.
Dataset generate_dataset(const DatasetSpec& spec);

}  // namespace swarmlearn
