#include "swarmlearn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include <spdlog/spdlog.h>

namespace swarmlearn {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ValidationError("train: lr must be positive");
  if (epochs < 1) throw ValidationError("train: epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (gradient_clip && !(*gradient_clip > 0.0)) throw ValidationError("train: gradient_clip must be positive");
}

std::vector<StepPair> one_step_pairs(const Trajectory& traj, std::size_t tau) {
  if (traj.length() < tau + 2)
    throw ValidationError("one_step_pairs: trajectory of length " + std::to_string(traj.length()) +
                          " too short for delay " + std::to_string(tau));
  std::vector<StepPair> pairs;
  pairs.reserve(traj.length() - tau - 1);
  for (std::size_t j = tau; j + 1 < traj.length(); ++j)
    pairs.push_back({&traj.snapshots[j], &traj.snapshots[j - tau], &traj.snapshots[j + 1], traj.dt});
  return pairs;
}

namespace {

void check_pair(const ControllerParams& p, const StepPair& pair) {
  if (pair.now->cols() != p.meta.d() || pair.target->rows() != pair.now->rows())
    throw ValidationError("training pair does not match the model's state layout");
}

// Loss of one pair; when grad is non-null also accumulates the gradient of
// that loss scaled by `weight`.
double pair_loss_grad(const ControllerParams& p, const StepPair& pair, double weight, Vector* grad) {
  check_pair(p, pair);
  const SwarmState& now = *pair.now;
  const SwarmState& target = *pair.target;
  double total = 0.0;
  if (p.meta.space == Space::planar) {
    const auto ctx = planar_contexts(p, now, *pair.delayed);
    PlanarTape tape;
    for (Index i = 0; i < now.rows(); ++i) {
      const auto& c = ctx[static_cast<std::size_t>(i)];
      const Vector pred = planar_one_step(p, now.row(i).transpose(), c, pair.dt, grad ? &tape : nullptr);
      const Vector err = pred - target.row(i).transpose();
      total += err.squaredNorm();
      if (grad) planar_one_step_vjp(p, c, pair.dt, tape, (2.0 * weight) * err, *grad);
    }
  } else {
    const auto ctx = spatial_contexts(p, now, *pair.delayed);
    for (Index i = 0; i < now.rows(); ++i) {
      const auto& c = ctx[static_cast<std::size_t>(i)];
      const Vector zi = now.row(i).transpose();
      const Vector err = spatial_one_step(p, zi, c, pair.dt) - target.row(i).transpose();
      total += err.squaredNorm();
      if (grad) spatial_one_step_vjp(p, zi, c, pair.dt, (2.0 * weight) * err, *grad);
    }
  }
  return total;
}

constexpr std::size_t kChunk = 64;

}  // namespace

double pair_loss(const ControllerParams& p, const StepPair& pair) { return pair_loss_grad(p, pair, 0.0, nullptr); }

double loss(const ControllerParams& p, std::span<const StepPair> pairs) {
  if (pairs.empty()) throw ValidationError("loss: empty batch");
  std::vector<double> per(pairs.size());
  std::vector<std::string> errors(pairs.size());
  const auto count = static_cast<std::int64_t>(pairs.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t q = 0; q < count; ++q) {
    try {
      per[static_cast<std::size_t>(q)] = pair_loss(p, pairs[static_cast<std::size_t>(q)]);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(q)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw NumericalError(e);
  double sum = 0.0;
  for (double v : per) sum += v;
  return sum / static_cast<double>(pairs.size());
}

LossGrad loss_and_grad(const ControllerParams& p, std::span<const StepPair> pairs) {
  if (pairs.empty()) throw ValidationError("loss_and_grad: empty batch");
  const Index np = p.parameter_count();
  const double weight = 1.0 / static_cast<double>(pairs.size());
  LossGrad out{0.0, Vector::Zero(np)};
  Matrix buffers(static_cast<Index>(std::min(kChunk, pairs.size())), np);
  std::vector<double> losses(kChunk);
  std::vector<std::string> errors(kChunk);

  for (std::size_t start = 0; start < pairs.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, pairs.size() - start);
    buffers.setZero();
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t q = 0; q < static_cast<std::int64_t>(len); ++q) {
      const auto uq = static_cast<std::size_t>(q);
      Vector g = Vector::Zero(np);
      try {
        losses[uq] = pair_loss_grad(p, pairs[start + uq], weight, &g);
        errors[uq].clear();
      } catch (const std::exception& e) {
        errors[uq] = e.what();
      }
      buffers.row(q) = g.transpose();
    }
    for (std::size_t q = 0; q < len; ++q) {
      if (!errors[q].empty()) throw NumericalError(errors[q]);
      out.loss += losses[q];
      out.grad += buffers.row(static_cast<Index>(q)).transpose();
    }
  }
  out.loss *= weight;
  return out;
}

LossGrad loss_and_grad_serial(const ControllerParams& p, std::span<const StepPair> pairs) {
  if (pairs.empty()) throw ValidationError("loss_and_grad: empty batch");
  const Index np = p.parameter_count();
  const double weight = 1.0 / static_cast<double>(pairs.size());
  LossGrad out{0.0, Vector::Zero(np)};
  for (const StepPair& pair : pairs) {
    Vector g = Vector::Zero(np);
    out.loss += pair_loss_grad(p, pair, weight, &g);
    out.grad += g;
  }
  out.loss *= weight;
  return out;
}

Vector grad(const ControllerParams& p, std::span<const StepPair> pairs) { return loss_and_grad(p, pairs).grad; }

TrainResult train(const TrainConfig& cfg, const ControllerParams& init, std::span<const Trajectory> train_set,
                  std::span<const Trajectory> heldout, const TrainState* resume,
                  const std::function<void(std::size_t, const TrainHistory&)>& on_epoch) {
  cfg.validate();
  init.validate();
  if (train_set.empty()) throw ValidationError("train: no training trajectories");
  std::vector<StepPair> pairs;
  for (const Trajectory& t : train_set) {
    if (t.space != init.meta.space || t.dim() != init.meta.d())
      throw ValidationError("train: dataset space does not match the model");
    auto ps = one_step_pairs(t, init.meta.tau);
    pairs.insert(pairs.end(), ps.begin(), ps.end());
  }
  std::vector<StepPair> held;
  {
    std::vector<StepPair> all;
    for (const Trajectory& t : heldout) {
      auto ps = one_step_pairs(t, init.meta.tau);
      all.insert(all.end(), ps.begin(), ps.end());
    }
    const std::size_t take = std::min(cfg.heldout_cap, all.size());
    for (std::size_t q = 0; q < take; ++q) held.push_back(all[q * all.size() / take]);
  }

  TrainState st;
  if (resume) {
    st = *resume;
  } else {
    st.current = init;
    st.best = init;
    st.best_loss = std::numeric_limits<double>::infinity();
    st.adam = {Vector::Zero(init.parameter_count()), Vector::Zero(init.parameter_count()), 0};
  }
  Vector theta = st.current.pack();
  const std::size_t first_epoch = st.history.epochs();

  std::vector<std::size_t> order(pairs.size());
  for (std::size_t e = first_epoch; e < first_epoch + cfg.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng shuffle({cfg.seed, 0x5eed0000ull + e});
    for (std::size_t q = order.size(); q > 1; --q) std::swap(order[q - 1], order[shuffle() % q]);

    double epoch_loss = 0.0;
    std::vector<StepPair> batch;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      batch.clear();
      for (std::size_t q = 0; q < len; ++q) batch.push_back(pairs[order[start + q]]);
      LossGrad lg = loss_and_grad(st.current, batch);
      if (!std::isfinite(lg.loss) || !lg.grad.allFinite())
        throw DivergenceError("training diverged at epoch " + std::to_string(e) + " (batch loss " +
                              std::to_string(lg.loss) + ", |grad| " + std::to_string(lg.grad.norm()) + ")");
      if (cfg.gradient_clip) {
        const double norm = lg.grad.norm();
        if (norm > *cfg.gradient_clip) lg.grad *= *cfg.gradient_clip / norm;
      }
      epoch_loss += lg.loss * static_cast<double>(len);

      AdamState& a = st.adam;
      ++a.t;
      a.m = cfg.beta1 * a.m + (1.0 - cfg.beta1) * lg.grad;
      a.v = cfg.beta2 * a.v + (1.0 - cfg.beta2) * lg.grad.cwiseProduct(lg.grad);
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(a.t));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(a.t));
      theta.array() -= cfg.lr * (a.m.array() / c1) / ((a.v.array() / c2).sqrt() + cfg.eps);
      st.current.unpack(theta);
    }
    epoch_loss /= static_cast<double>(order.size());
    const double held_loss = held.empty() ? epoch_loss : loss(st.current, held);
    if (!std::isfinite(held_loss)) throw DivergenceError("held-out loss is not finite at epoch " + std::to_string(e));
    if (held_loss < st.best_loss) {
      st.best_loss = held_loss;
      st.best = st.current;
    }
    TrainHistory& h = st.history;
    h.train_loss.push_back(epoch_loss);
    h.heldout_loss.push_back(held_loss);
    h.phi_neighbor.push_back(st.current.phi_neighbor);
    h.phi_wall.push_back(st.current.phi_wall);
    h.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    spdlog::debug("epoch {} train {:.6g} heldout {:.6g}", e, epoch_loss, held_loss);
    if (on_epoch) on_epoch(e, h);
  }
  return {st.best, st.history, st};
}

double fd_check(const std::function<double(const Vector&)>& f, const Vector& x, const Vector& analytic,
                double eps, std::size_t max_coords, double floor) {
  if (!(eps > 0.0)) throw ValidationError("fd_check: eps must be positive");
  const auto n = static_cast<std::size_t>(x.size());
  const std::size_t take = std::min(max_coords, n);
  double worst = 0.0;
  Vector probe = x;
  for (std::size_t q = 0; q < take; ++q) {
    // Strided from the end so trailing entries (the gain parameters) are
    // always covered.
    const auto c = static_cast<Index>(n - 1 - q * n / take);
    const double saved = probe[c];
    probe[c] = saved + eps;
    const double up = f(probe);
    probe[c] = saved - eps;
    const double down = f(probe);
    probe[c] = saved;
    const double fd = (up - down) / (2.0 * eps);
    const double scale = std::max({std::abs(fd), std::abs(analytic[c]), floor});
    worst = std::max(worst, std::abs(fd - analytic[c]) / scale);
  }
  return worst;
}

double fd_check(const ControllerParams& p, std::span<const StepPair> pairs, double eps, std::size_t max_coords) {
  const Vector g = loss_and_grad(p, pairs).grad;
  ControllerParams work = p;
  auto f = [&](const Vector& theta) {
    work.unpack(theta);
    return loss(work, pairs);
  };
  return fd_check(f, p.pack(), g, eps, max_coords);
}

}  // namespace swarmlearn
