#pragma once

#include <cstdint>
#include <vector>

#include "swarmlearn/sim_core.hpp"

namespace swarmlearn {

// Radius graph over robot positions. S(i, j) = 1 iff |r_i - r_j| <= d_cr,
// so the diagonal is always set.
struct ShiftOperator {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> adjacency;
  std::size_t t = 0;

  Index size() const { return adjacency.rows(); }
  bool linked(Index i, Index j) const { return adjacency(i, j) != 0; }
};

ShiftOperator shift_operator(const Matrix& positions, double d_cr, std::size_t t = 0);

// Linked robots sorted by distance to i (i itself first), ties by lower
// index, truncated to k entries.
std::vector<Index> active_neighbors(const ShiftOperator& s, Index i, const Matrix& positions,
                                    Index k);

// Local information Y_i(t) of one robot: k x d rows, row 0 is the robot's
// current state, rows 1..valid_count-1 are delayed neighbor states ordered
// by delayed distance, the rest is zero padding.
struct InfoStructure {
  Matrix rows;
  Index valid_count = 1;

  // Row-major k*d vector, the controller input layout.
  Vector flatten() const { return Eigen::Map<const Vector>(rows.data(), rows.size()); }
};

// `s_delayed` must be built from the positions of `delayed`.
InfoStructure info_structure(const SwarmState& now, const SwarmState& delayed,
                             const ShiftOperator& s_delayed, Index i, Index k);

// All Y_i(t) of a trajectory for every time index t in [tau, m - 2], i.e.
// every index that has both delay context and a successor.
class InfoBatch {
 public:
  InfoBatch(std::size_t first_t, std::size_t steps, Index n, Index k, Index d);

  std::size_t first_t() const { return first_t_; }
  std::size_t steps() const { return steps_; }
  Index robots() const { return n_; }
  Index k() const { return k_; }
  Index d() const { return d_; }

  // Flattened Y_i(t) for absolute time index t.
  Eigen::Map<const Vector> flat(std::size_t t, Index i) const;
  Eigen::Map<Vector> flat(std::size_t t, Index i);
  Index valid_count(std::size_t t, Index i) const { return valid_[slot(t, i)]; }
  void set_valid_count(std::size_t t, Index i, Index v) { valid_[slot(t, i)] = v; }
  InfoStructure at(std::size_t t, Index i) const;

  std::size_t storage_doubles() const { return data_.size(); }

  bool operator==(const InfoBatch& o) const = default;

 private:
  std::size_t slot(std::size_t t, Index i) const {
    return (t - first_t_) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
  }

  std::size_t first_t_;
  std::size_t steps_;
  Index n_, k_, d_;
  std::vector<double> data_;
  std::vector<Index> valid_;
};

// Parallel over time indices; one distance matrix per delayed snapshot.
InfoBatch batch_info(const Trajectory& traj, double d_cr, Index k, std::size_t tau);

// Reference: one info_structure call per (t, i).
InfoBatch batch_info_serial(const Trajectory& traj, double d_cr, Index k, std::size_t tau);

}  // namespace swarmlearn
