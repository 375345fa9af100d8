#include "swarmlearn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <Eigen/SVD>

#include "swarmlearn/groundtruth.hpp"

namespace swarmlearn {
namespace {

void need_pairs(const Trajectory& traj, const char* who) {
  if (traj.robots() < 2) throw ValidationError(std::string(who) + ": need at least two robots");
}

double snapshot_avd(const SwarmState& z) {
  const Index n = z.rows();
  double sum = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) sum += (z.row(i).tail<2>() - z.row(j).tail<2>()).norm();
  return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

double snapshot_amd(const SwarmState& z) {
  const Index n = z.rows();
  const auto pos = positions(z);
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j)
      if (j != i) best = std::min(best, (pos.row(i) - pos.row(j)).squaredNorm());
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(n);
}

template <class F>
std::vector<double> per_snapshot(const Trajectory& traj, F f) {
  std::vector<double> out(traj.length());
  const auto m = static_cast<std::int64_t>(traj.length());
#pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < m; ++s) out[static_cast<std::size_t>(s)] = f(traj.snapshots[static_cast<std::size_t>(s)]);
  return out;
}

}  // namespace

std::vector<double> avd(const Trajectory& traj) {
  need_pairs(traj, "avd");
  if (traj.dim() != 4) throw ValidationError("avd: requires 2D states with velocities");
  return per_snapshot(traj, snapshot_avd);
}

std::vector<double> amd(const Trajectory& traj) {
  need_pairs(traj, "amd");
  return per_snapshot(traj, snapshot_amd);
}

std::vector<double> avd_serial(const Trajectory& traj) {
  need_pairs(traj, "avd");
  if (traj.dim() != 4) throw ValidationError("avd: requires 2D states with velocities");
  std::vector<double> out;
  const double n = static_cast<double>(traj.robots());
  for (const SwarmState& z : traj.snapshots) {
    // Ordered-pair sum halved.
    double sum = 0.0;
    for (Index i = 0; i < z.rows(); ++i)
      for (Index j = 0; j < z.rows(); ++j)
        if (i != j) sum += std::hypot(z(i, 2) - z(j, 2), z(i, 3) - z(j, 3));
    out.push_back(sum / (n * (n - 1.0)));
  }
  return out;
}

std::vector<double> amd_serial(const Trajectory& traj) {
  need_pairs(traj, "amd");
  std::vector<double> out;
  const Index p = traj.dim() / 2;
  for (const SwarmState& z : traj.snapshots) {
    double sum = 0.0;
    for (Index i = 0; i < z.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < z.rows(); ++j) {
        if (i == j) continue;
        double d2 = 0.0;
        for (Index c = 0; c < p; ++c) d2 += (z(i, c) - z(j, c)) * (z(i, c) - z(j, c));
        best = std::min(best, std::sqrt(d2));
      }
      sum += best;
    }
    out.push_back(sum / static_cast<double>(z.rows()));
  }
  return out;
}

Vector pod_energies(const Trajectory& traj, Index r) {
  const auto m = static_cast<Index>(traj.length());
  const Index cols = traj.robots() * traj.dim();
  if (r < 1 || r > std::min(m, cols)) throw ValidationError("pod_energies: mode count out of range");
  Eigen::MatrixXd x(m, cols);
  for (Index s = 0; s < m; ++s)
    x.row(s) = Eigen::Map<const Eigen::RowVectorXd>(traj.snapshots[static_cast<std::size_t>(s)].data(), cols);
  x.rowwise() -= x.colwise().mean();
  Vector out = Vector::Zero(r);
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(x);
  const Vector energy = svd.singularValues().array().square();
  const double total = energy.sum();
  if (!(total > 0.0)) {
    out[0] = 1.0;
    return out;
  }
  out = energy.head(r) / total;
  return out;
}

double kl_divergence(const Vector& p, const Vector& q) {
  if (p.size() != q.size() || p.size() == 0) throw ValidationError("kl_divergence: size mismatch");
  constexpr double kFloor = 1e-12;
  Vector a = p.cwiseMax(kFloor);
  Vector b = q.cwiseMax(kFloor);
  a /= a.sum();
  b /= b.sum();
  double d = 0.0;
  for (Index i = 0; i < a.size(); ++i) d += a[i] * std::log(a[i] / b[i]);
  return std::max(d, 0.0);
}

double pod_kld(const Trajectory& pred, const Trajectory& truth, Index r) {
  if (pred.robots() != truth.robots() || pred.dim() != truth.dim())
    throw ValidationError("pod_kld: trajectories differ in shape");
  return kl_divergence(pod_energies(pred, r), pod_energies(truth, r));
}

double tail_mean(const std::vector<double>& series, std::size_t window) {
  if (series.empty() || window == 0) throw ValidationError("tail_mean: empty series or window");
  const std::size_t w = std::min(window, series.size());
  return std::accumulate(series.end() - static_cast<std::ptrdiff_t>(w), series.end(), 0.0) / static_cast<double>(w);
}

SeriesBand confidence_band(const std::vector<std::vector<double>>& runs) {
  if (runs.empty()) throw ValidationError("confidence_band: no runs");
  const std::size_t len = runs.front().size();
  for (const auto& r : runs)
    if (r.size() != len) throw ValidationError("confidence_band: runs differ in length");
  const double count = static_cast<double>(runs.size());
  double tcrit = 0.0;
  if (runs.size() > 1) {
    const boost::math::students_t dist(count - 1.0);
    tcrit = boost::math::quantile(boost::math::complement(dist, 0.025));
  }
  SeriesBand band;
  band.mean.resize(len);
  band.lower.resize(len);
  band.upper.resize(len);
  for (std::size_t s = 0; s < len; ++s) {
    double mean = 0.0;
    for (const auto& r : runs) mean += r[s];
    mean /= count;
    double var = 0.0;
    for (const auto& r : runs) var += (r[s] - mean) * (r[s] - mean);
    const double half = runs.size() > 1 ? tcrit * std::sqrt(var / (count - 1.0) / count) : 0.0;
    band.mean[s] = mean;
    band.lower[s] = mean - half;
    band.upper[s] = mean + half;
  }
  return band;
}

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw ValidationError("box_stats: no values");
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {values.front(), quantile(0.25), quantile(0.5), quantile(0.75), values.back(), values.size()};
}

void GridSpec::validate() const {
  if (d_cr.empty() || k.empty()) throw ValidationError("grid: both axes must be nonempty");
  if (seeds_per_cell < 1 || steps < 1 || tail_window < 1) throw ValidationError("grid: counts must be positive");
}

CellResult summarize_cell(double d_cr, Index k, const CellRuns& runs) {
  CellResult c;
  c.d_cr = d_cr;
  c.k = k;
  c.ok = true;
  c.runs = runs.amd.size();
  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                     : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  auto median = [](const std::vector<double>& v) {
    return v.empty() ? std::numeric_limits<double>::quiet_NaN() : box_stats(v).median;
  };
  c.avd_mean = mean(runs.avd);
  c.avd_median = median(runs.avd);
  c.amd_mean = mean(runs.amd);
  c.amd_median = median(runs.amd);
  return c;
}

std::vector<CellResult> grid_search(const GridSpec& gs, const CellPipeline& pipeline) {
  gs.validate();
  std::vector<std::pair<double, Index>> cells;
  for (Index k : gs.k)
    for (double d : gs.d_cr) cells.emplace_back(d, k);
  std::vector<CellResult> out(cells.size());
  const auto count = static_cast<std::int64_t>(cells.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t c = 0; c < count; ++c) {
    const auto [d, k] = cells[static_cast<std::size_t>(c)];
    CellResult& r = out[static_cast<std::size_t>(c)];
    try {
      r = summarize_cell(d, k, pipeline(d, k));
    } catch (const std::exception& e) {
      r.d_cr = d;
      r.k = k;
      r.ok = false;
      r.error = e.what();
    }
  }
  return out;
}

std::vector<ScalingRow> scaling_eval(const ControllerParams& p, const std::vector<Index>& sizes, std::size_t runs,
                                     std::size_t steps, double h, std::size_t tail_window, std::uint64_t seed) {
  if (runs < 1) throw ValidationError("scaling_eval: runs must be >= 1");
  std::vector<ScalingRow> rows;
  const bool planar = p.meta.space == Space::planar;
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    const Index n = sizes[si];
    if (n < 2) throw ValidationError("scaling_eval: sizes must be >= 2");
    ScalingRow row;
    row.size = n;
    row.amd_tail.resize(runs);
    if (planar) row.avd_tail.resize(runs);
    for (std::size_t r = 0; r < runs; ++r) {
      const RngSpec rng{seed, 1000003ull * static_cast<std::uint64_t>(n) + r};
      const SwarmState z0 = planar ? init_2d_swarm(n, rng)
                                   : init_3d_swarm(n, rng, 5.0 * std::cbrt(static_cast<double>(n) / 10.0));
      const Trajectory t = predict_rollout(p, z0, steps, h);
      row.amd_tail[r] = tail_mean(amd(t), tail_window);
      if (planar) row.avd_tail[r] = tail_mean(avd(t), tail_window);
    }
    row.amd = box_stats(row.amd_tail);
    if (planar) row.avd = box_stats(row.avd_tail);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace swarmlearn
