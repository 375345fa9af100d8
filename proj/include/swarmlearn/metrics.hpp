#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swarmlearn/controller.hpp"

namespace swarmlearn {

// Mean over unordered pairs of |v_i - v_j| at every snapshot (2D only).
std::vector<double> avd(const Trajectory& traj);

// Mean over robots of the distance to the nearest other robot.
std::vector<double> amd(const Trajectory& traj);

// Same series computed with straightforward per-snapshot loops, no
// threading; kept for cross-checking the parallel versions.
std::vector<double> avd_serial(const Trajectory& traj);
std::vector<double> amd_serial(const Trajectory& traj);

// Leading r squared singular values of the mean-removed m x (n d) snapshot
// matrix, normalized by the total. A trajectory with no variation yields
// [1, 0, ...].
Vector pod_energies(const Trajectory& traj, Index r);

// sum p log(p / q) after flooring both at 1e-12 and renormalizing.
double kl_divergence(const Vector& p, const Vector& q);

// D(pred || truth) between the first-r POD energy distributions.
double pod_kld(const Trajectory& pred, const Trajectory& truth, Index r);

double tail_mean(const std::vector<double>& series, std::size_t window);

struct SeriesBand {
  std::vector<double> mean;
  std::vector<double> lower;  // 95% Student-t interval
  std::vector<double> upper;
};

// Pointwise mean and 95% confidence band across runs of equal length.
SeriesBand confidence_band(const std::vector<std::vector<double>>& runs);

struct BoxStats {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  std::size_t count = 0;
};

// Quartiles by linear interpolation between order statistics.
BoxStats box_stats(std::vector<double> values);

struct MetricsReport {
  std::vector<double> avd_series;
  std::vector<double> amd_series;
  Vector pod_energies;
  std::optional<double> pod_kld;
  std::uint64_t seed = 0;
  Index swarm_size = 0;
  std::string controller_id;
};

struct GridSpec {
  std::vector<double> d_cr;
  std::vector<Index> k;
  std::size_t seeds_per_cell = 20;
  std::size_t steps = 2000;
  std::size_t tail_window = 10;

  void validate() const;
};

// Tail-window metric values of every run in one cell.
struct CellRuns {
  std::vector<double> avd;
  std::vector<double> amd;
};

struct CellResult {
  double d_cr = 0.0;
  Index k = 0;
  bool ok = false;
  std::string error;
  double avd_mean = 0.0, avd_median = 0.0;
  double amd_mean = 0.0, amd_median = 0.0;
  std::size_t runs = 0;

  // Cells whose mean amd exceeds this are rendered as out of range.
  static constexpr double kAmdFlag = 3.0;
  bool amd_flagged() const { return ok && amd_mean > kAmdFlag; }
};

CellResult summarize_cell(double d_cr, Index k, const CellRuns& runs);

using CellPipeline = std::function<CellRuns(double d_cr, Index k)>;

// Evaluates every (d_cr, k) cell, in parallel across cells. A cell whose
// pipeline throws is reported with ok = false. Result order is k-major,
// then d_cr, independent of evaluation order.
std::vector<CellResult> grid_search(const GridSpec& gs, const CellPipeline& pipeline);

struct ScalingRow {
  Index size = 0;
  std::vector<double> avd_tail;  // empty in 3D
  std::vector<double> amd_tail;
  BoxStats avd;
  BoxStats amd;
};

// Density-preserving initial conditions per size (disk radius sqrt(n) in
// 2D, ball radius 5 (n / 10)^(1/3) in 3D), closed-loop rollouts, tail-mean
// metrics and their box statistics.
std::vector<ScalingRow> scaling_eval(const ControllerParams& p, const std::vector<Index>& sizes,
                                     std::size_t runs, std::size_t steps, double h, std::size_t tail_window,
                                     std::uint64_t seed);

}  // namespace swarmlearn
