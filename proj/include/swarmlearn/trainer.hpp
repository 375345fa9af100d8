#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "swarmlearn/controller.hpp"

namespace swarmlearn {

struct TrainConfig {
  double lr = 1e-3;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  std::optional<double> gradient_clip;
  // Upper bound on held-out pairs scored after each epoch.
  std::size_t heldout_cap = 2048;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> heldout_loss;
  std::vector<double> phi_neighbor;
  std::vector<double> phi_wall;
  std::vector<double> seconds;

  std::size_t epochs() const { return train_loss.size(); }
};

struct AdamState {
  Vector m;
  Vector v;
  std::uint64_t t = 0;
};

// Snapshot needed to continue training where a run stopped.
struct TrainState {
  ControllerParams current;
  ControllerParams best;
  double best_loss = 0.0;
  AdamState adam;
  TrainHistory history;
};

// One teacher-forced sample: current snapshot, its delay context and the
// observed successor. Borrows from the trajectory it was built from.
struct StepPair {
  const SwarmState* now = nullptr;
  const SwarmState* delayed = nullptr;
  const SwarmState* target = nullptr;
  double dt = 0.0;
};

std::vector<StepPair> one_step_pairs(const Trajectory& traj, std::size_t tau);

// Squared prediction error summed over robots for one pair.
double pair_loss(const ControllerParams& p, const StepPair& pair);

// Mean over pairs of the per-pair summed squared error.
double loss(const ControllerParams& p, std::span<const StepPair> pairs);

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

// Pairs are evaluated in parallel inside fixed-size chunks; per-pair
// gradients are then reduced in pair order, so the result is independent
// of the thread count.
LossGrad loss_and_grad(const ControllerParams& p, std::span<const StepPair> pairs);

// Reference: accumulates pair by pair on one thread.
LossGrad loss_and_grad_serial(const ControllerParams& p, std::span<const StepPair> pairs);

Vector grad(const ControllerParams& p, std::span<const StepPair> pairs);

struct TrainResult {
  ControllerParams params;  // lowest held-out loss seen
  TrainHistory history;
  TrainState state;
};

// Adam over shuffled mini-batches of time indices (all robots of an index
// go into the same batch). Without held-out data, selection uses the
// training loss. `resume` continues a previous run's epochs and optimizer
// state; cfg.epochs counts the additional epochs.
TrainResult train(const TrainConfig& cfg, const ControllerParams& init,
                  std::span<const Trajectory> train_set, std::span<const Trajectory> heldout,
                  const TrainState* resume = nullptr,
                  const std::function<void(std::size_t, const TrainHistory&)>& on_epoch = {});

// Largest relative difference between `analytic` and central differences of
// f over at most max_coords coordinates (evenly strided, always including
// the last ones). Relative error uses max(|a|, |fd|, floor) as scale.
double fd_check(const std::function<double(const Vector&)>& f, const Vector& x, const Vector& analytic,
                double eps, std::size_t max_coords = 200, double floor = 1e-6);

double fd_check(const ControllerParams& p, std::span<const StepPair> pairs, double eps,
                std::size_t max_coords = 200);

}  // namespace swarmlearn
