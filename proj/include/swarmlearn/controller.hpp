#pragma once

#include <array>
#include <optional>
#include <vector>

#include "swarmlearn/info_network.hpp"
#include "swarmlearn/knowledge.hpp"
#include "swarmlearn/sim_core.hpp"

namespace swarmlearn {

struct ControllerMeta {
  Space space = Space::planar;
  Index k = 6;
  double d_cr = 5.0;
  std::size_t tau = 0;
  PotentialSpec neighbor{1.0, GainForm::offset_square, 0.5};
  PotentialSpec wall{1.0, GainForm::square, 0.5};
  double half_side = 5.0;

  Index d() const { return state_dim(space); }
  Index input_dim() const { return k * d(); }
  Index output_dim() const { return position_dim(space); }
  void validate() const;
};

// One-hidden-layer tanh network plus the two repulsion gain parameters.
// Flat layout used by the optimizer: w1 (row-major), b1, w2 (row-major),
// b2, phi_neighbor, phi_wall. phi_wall is inert in 2D.
struct ControllerParams {
  ControllerMeta meta;
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
  double phi_neighbor = 0.0;
  double phi_wall = 0.0;

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
  static ControllerParams initialize(const ControllerMeta& meta, Index hidden, RngSpec rng,
                                     double phi0 = 0.1);
  static ControllerParams zeros(const ControllerMeta& meta, Index hidden);

  Index hidden() const { return w1.rows(); }
  Index parameter_count() const;
  Vector pack() const;
  void unpack(const Eigen::Ref<const Vector>& flat);
  RepulsionGains gains() const { return {meta.neighbor, meta.wall, phi_neighbor, phi_wall}; }
  void validate() const;

  std::size_t offset_b1() const { return static_cast<std::size_t>(w1.size()); }
  std::size_t offset_w2() const { return offset_b1() + static_cast<std::size_t>(b1.size()); }
  std::size_t offset_b2() const { return offset_w2() + static_cast<std::size_t>(w2.size()); }
  std::size_t offset_phi() const { return offset_b2() + static_cast<std::size_t>(b2.size()); }
};

// W2 tanh(W1 y + b1) + b2
Vector mlp_forward(const ControllerParams& p, const Eigen::Ref<const Vector>& y);

struct MlpGradients {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
  Vector input;
};

// Reverse-mode gradients of upstream . mlp_forward(p, y).
MlpGradients controller_gradients(const ControllerParams& p, const Eigen::Ref<const Vector>& y,
                                  const Eigen::Ref<const Vector>& upstream);

// Same as controller_gradients but accumulates parameter gradients into a
// flat vector laid out like ControllerParams::pack. Returns d/dy.
Vector accumulate_mlp_vjp(const ControllerParams& p, const Eigen::Ref<const Vector>& y,
                          const Eigen::Ref<const Vector>& upstream, Eigen::Ref<Vector> grad);

// ---- single-robot one-step predictors ----------------------------------
//
// 2D: the robot integrates r' = v, v' = u(Y) - lambda grad U over one RK4
// step. Row 0 of Y tracks the robot's own stage state; neighbor rows and
// the avoided neighbor's position are held for the step.

struct PlanarContext {
  Vector info;                      // flattened Y, row 0 overwritten per stage
  std::optional<Vector> obstacle;   // closest neighbor within d0, if any
};

Vector planar_robot_derivative(const ControllerParams& p, const Vector& s, const PlanarContext& ctx);

struct PlanarTape {
  std::array<Vector, 4> stage_state;
};

Vector planar_one_step(const ControllerParams& p, const Vector& z, const PlanarContext& ctx,
                       double h, PlanarTape* tape = nullptr);

// Accumulates d(pred_bar . prediction)/d(params) into grad.
void planar_one_step_vjp(const ControllerParams& p, const PlanarContext& ctx, double h,
                         const PlanarTape& tape, const Vector& pred_bar, Eigen::Ref<Vector> grad);

// 3D: the network output is a velocity command. Next position is
// r + h r', next heading is r' / |r'| (the previous heading when r' = 0).

struct SpatialContext {
  Vector info;
  std::optional<Vector> obstacle;
  std::vector<Vector> walls;
};

Vector spatial_velocity(const ControllerParams& p, const Vector& z, const SpatialContext& ctx);

Vector spatial_one_step(const ControllerParams& p, const Vector& z, const SpatialContext& ctx,
                        double h);

void spatial_one_step_vjp(const ControllerParams& p, const Vector& z, const SpatialContext& ctx,
                          double h, const Vector& pred_bar, Eigen::Ref<Vector> grad);

// Builds the per-robot contexts for one time index from the observed
// current and delayed snapshots.
std::vector<PlanarContext> planar_contexts(const ControllerParams& p, const SwarmState& now,
                                           const SwarmState& delayed);
std::vector<SpatialContext> spatial_contexts(const ControllerParams& p, const SwarmState& now,
                                             const SwarmState& delayed);

// ---- swarm level --------------------------------------------------------

// Per robot: r' = v, v' = u(flatten(Y_i)) - lambda grad U(closest neighbor).
SwarmState hybrid_derivative_2d(const SwarmState& z, const std::vector<InfoStructure>& infos,
                                const ControllerParams& p);

// Per robot velocity command plus neighbor and wall repulsion, n x 3.
Matrix hybrid_derivative_3d(const SwarmState& z, const std::vector<InfoStructure>& infos,
                            const ControllerParams& p);

// Closed loop: neighbors and info structures are rebuilt once per step from
// the simulated history (delay clamped at the initial snapshot).
Trajectory predict_rollout(const ControllerParams& p, const SwarmState& z0, std::size_t steps,
                           double h);

}  // namespace swarmlearn
