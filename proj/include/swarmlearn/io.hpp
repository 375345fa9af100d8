#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "swarmlearn/groundtruth.hpp"
#include "swarmlearn/metrics.hpp"
#include "swarmlearn/trainer.hpp"

namespace swarmlearn {

// Shortest decimal that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view text);

// Trajectory CSV:
//   # swarmlearn-traj v1
//   # n=<n> d=<d> dt=<dt> space=<2d|3d>
//   step,robot,c0,...,c{d-1}
//   one row per (step, robot), steps ascending, robots ascending.
void write_trajectory(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory(std::istream& in, const std::string& origin = "trajectory");
void save_trajectory(const std::string& path, const Trajectory& traj);
Trajectory load_trajectory(const std::string& path);

// JSON checkpoint with format/version fields, controller metadata, flat
// row-major weights, gains and (optionally) the state needed to resume.
std::string emit_checkpoint(const ControllerParams& best, const TrainState* state = nullptr);
struct Checkpoint {
  ControllerParams params;
  std::optional<TrainState> state;
};
Checkpoint parse_checkpoint(const std::string& text, const std::string& origin = "checkpoint");
void save_checkpoint(const std::string& path, const ControllerParams& best, const TrainState* state = nullptr);
Checkpoint load_checkpoint(const std::string& path);

// Dataset manifest (JSON) listing every trajectory file, its RNG streams,
// split membership and the generating spec.
std::string emit_manifest(const Dataset& ds);
struct Manifest {
  DatasetSpec spec;
  std::vector<DatasetEntry> entries;
};
Manifest parse_manifest(const std::string& text, const std::string& origin = "manifest");

constexpr const char* kManifestName = "manifest.json";

// Writes trajectory files plus manifest.json into dir.
void save_dataset(const std::string& dir, const Dataset& ds);
// Loads train/test trajectories listed in dir/manifest.json.
Dataset load_dataset(const std::string& dir);

void write_history_csv(std::ostream& out, const TrainHistory& h);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace swarmlearn
