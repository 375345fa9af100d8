#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "swarmlearn/controller.hpp"
#include "swarmlearn/groundtruth.hpp"
#include "swarmlearn/trainer.hpp"

namespace swarmlearn {

// Every hyperparameter of one experiment. Persisted as a flat YAML mapping
// with a nested `train` block; see load_config for the key list.
struct ExperimentConfig {
  Space space = Space::planar;
  Index n = 10;
  double d_cr = 5.0;
  Index k = 6;
  std::size_t tau = 0;
  Index hidden = 128;
  double noise_var = 0.001;
  std::size_t steps = 2000;
  std::size_t discard = 0;
  std::size_t traj_count = 50;
  std::size_t train_count = 30;
  double dt = 0.01;
  double d0_neighbor = 1.0;
  double d0_wall = 1.0;
  GainForm gain_form = GainForm::offset_square;
  double a = 0.5;
  std::uint64_t seed = 1;

  double lr = 1e-3;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  std::uint64_t train_seed = 0;
  std::optional<double> gradient_clip;

  static ExperimentConfig defaults(Space space);

  void validate() const;
  DatasetSpec dataset_spec() const;
  ControllerMeta controller_meta() const;
  TrainConfig train_config() const;

  bool operator==(const ExperimentConfig&) const = default;
};

// Reads a YAML config. Keys not given take the defaults of the declared
// space; unknown keys and malformed values raise ValidationError naming the
// offending line.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config");
std::string emit_config(const ExperimentConfig& cfg);

}  // namespace swarmlearn
