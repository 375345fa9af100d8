#include "swarmlearn/info_network.hpp"

#include <algorithm>
#include <numeric>

namespace swarmlearn {

ShiftOperator shift_operator(const Matrix& positions, double d_cr, std::size_t t) {
  if (!(d_cr > 0.0)) throw ValidationError("shift_operator: d_cr must be positive");
  const Index n = positions.rows();
  ShiftOperator s;
  s.t = t;
  s.adjacency.setZero(n, n);
  const double r2 = d_cr * d_cr;
  for (Index i = 0; i < n; ++i) {
    s.adjacency(i, i) = 1;
    for (Index j = i + 1; j < n; ++j) {
      const std::uint8_t link = (positions.row(i) - positions.row(j)).squaredNorm() <= r2 ? 1 : 0;
      s.adjacency(i, j) = link;
      s.adjacency(j, i) = link;
    }
  }
  return s;
}

std::vector<Index> active_neighbors(const ShiftOperator& s, Index i, const Matrix& positions,
                                    Index k) {
  if (k < 1) throw ValidationError("active_neighbors: k must be >= 1");
  std::vector<std::pair<double, Index>> linked;
  for (Index j = 0; j < s.size(); ++j)
    if (s.linked(i, j))
      linked.emplace_back(j == i ? 0.0 : (positions.row(i) - positions.row(j)).squaredNorm(), j);
  // Self sorts first even if another robot sits exactly on top of it.
  std::sort(linked.begin(), linked.end(), [i](const auto& a, const auto& b) {
    if ((a.second == i) != (b.second == i)) return a.second == i;
    return a < b;
  });
  std::vector<Index> out;
  for (std::size_t q = 0; q < linked.size() && static_cast<Index>(q) < k; ++q)
    out.push_back(linked[q].second);
  return out;
}

InfoStructure info_structure(const SwarmState& now, const SwarmState& delayed,
                             const ShiftOperator& s_delayed, Index i, Index k) {
  if (now.rows() != delayed.rows() || now.cols() != delayed.cols())
    throw ValidationError("info_structure: current and delayed states differ in shape");
  InfoStructure y;
  y.rows = Matrix::Zero(k, now.cols());
  y.rows.row(0) = now.row(i);
  const auto order = active_neighbors(s_delayed, i, positions(delayed), k);
  y.valid_count = static_cast<Index>(order.size());
  for (std::size_t q = 1; q < order.size(); ++q) y.rows.row(static_cast<Index>(q)) = delayed.row(order[q]);
  return y;
}

InfoBatch::InfoBatch(std::size_t first_t, std::size_t steps, Index n, Index k, Index d)
    : first_t_(first_t),
      steps_(steps),
      n_(n),
      k_(k),
      d_(d),
      data_(steps * static_cast<std::size_t>(n * k * d), 0.0),
      valid_(steps * static_cast<std::size_t>(n), 0) {}

Eigen::Map<const Vector> InfoBatch::flat(std::size_t t, Index i) const {
  return Eigen::Map<const Vector>(data_.data() + slot(t, i) * static_cast<std::size_t>(k_ * d_), k_ * d_);
}

Eigen::Map<Vector> InfoBatch::flat(std::size_t t, Index i) {
  return Eigen::Map<Vector>(data_.data() + slot(t, i) * static_cast<std::size_t>(k_ * d_), k_ * d_);
}

InfoStructure InfoBatch::at(std::size_t t, Index i) const {
  InfoStructure y;
  y.rows = Eigen::Map<const Matrix>(flat(t, i).data(), k_, d_);
  y.valid_count = valid_count(t, i);
  return y;
}

namespace {

std::size_t usable_steps(const Trajectory& traj, std::size_t tau) {
  if (traj.length() < tau + 2)
    throw ValidationError("batch_info: trajectory too short for the requested delay");
  return traj.length() - 1 - tau;
}

}  // namespace

InfoBatch batch_info(const Trajectory& traj, double d_cr, Index k, std::size_t tau) {
  if (k < 1) throw ValidationError("batch_info: k must be >= 1");
  if (!(d_cr > 0.0)) throw ValidationError("batch_info: d_cr must be positive");
  const std::size_t steps = usable_steps(traj, tau);
  const Index n = traj.robots();
  const Index d = traj.dim();
  InfoBatch batch(tau, steps, n, k, d);
  const double r2 = d_cr * d_cr;

  const auto count = static_cast<std::int64_t>(steps);
#pragma omp parallel
  {
    Matrix dist2(n, n);
    std::vector<Index> order(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
    for (std::int64_t s = 0; s < count; ++s) {
      const std::size_t t = tau + static_cast<std::size_t>(s);
      const SwarmState& now = traj.snapshots[t];
      const SwarmState& del = traj.snapshots[t - tau];
      const auto pos = positions(del);
      for (Index i = 0; i < n; ++i) {
        dist2(i, i) = 0.0;
        for (Index j = i + 1; j < n; ++j) dist2(i, j) = dist2(j, i) = (pos.row(i) - pos.row(j)).squaredNorm();
      }
      for (Index i = 0; i < n; ++i) {
        Index m = 0;
        for (Index j = 0; j < n; ++j)
          if (j != i && dist2(i, j) <= r2) order[static_cast<std::size_t>(m++)] = j;
        const Index take = std::min(m, k - 1);
        std::partial_sort(order.begin(), order.begin() + take, order.begin() + m,
                          [&](Index a, Index b) {
                            return dist2(i, a) != dist2(i, b) ? dist2(i, a) < dist2(i, b) : a < b;
                          });
        auto y = batch.flat(t, i);
        y.head(d) = now.row(i).transpose();
        for (Index q = 0; q < take; ++q) y.segment((q + 1) * d, d) = del.row(order[static_cast<std::size_t>(q)]).transpose();
        batch.set_valid_count(t, i, take + 1);
      }
    }
  }
  return batch;
}

InfoBatch batch_info_serial(const Trajectory& traj, double d_cr, Index k, std::size_t tau) {
  const std::size_t steps = usable_steps(traj, tau);
  InfoBatch batch(tau, steps, traj.robots(), k, traj.dim());
  for (std::size_t t = tau; t < tau + steps; ++t) {
    const SwarmState& del = traj.snapshots[t - tau];
    const ShiftOperator s = shift_operator(positions(del), d_cr, t - tau);
    for (Index i = 0; i < traj.robots(); ++i) {
      const InfoStructure y = info_structure(traj.snapshots[t], del, s, i, k);
      batch.flat(t, i) = y.flatten();
      batch.set_valid_count(t, i, y.valid_count);
    }
  }
  return batch;
}

}  // namespace swarmlearn
