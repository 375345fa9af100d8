// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>

#include <unistd.h>

#include "info_properties.hpp"
#include "swarmlearn/config.hpp"
#include "swarmlearn/groundtruth.hpp"
#include "swarmlearn/io.hpp"
#include "swarmlearn/metrics.hpp"
#include "swarmlearn/trainer.hpp"

using namespace swarmlearn;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

// ---- 1: gradient exactness ---------------------------------------------------

Verdict gradient_exactness() {
  ControllerMeta meta;
  meta.k = 2;
  ControllerParams p = ControllerParams::initialize(meta, 128, {1, 0x1417});
  SwarmState z0(3, 4);
  z0 << 0, 0, 0.3, 0, 0.6, 0.2, -0.2, 0.1, -0.3, 0.5, 0, 0.4;
  const Trajectory t = add_stabilization_noise(simulate_tanner(z0, 5, 0.01), 0.001, {9, 1});
  const auto pairs = one_step_pairs(t, 0);
  const auto coords = static_cast<std::size_t>(p.parameter_count());
  const double err = fd_check(p, pairs, 1e-5, coords);
  return {pairs.size() == 5 && err < 1e-4,
          format("max rel err %.2e over all %zu coordinates incl. phi, 5 pairs", err, coords)};
}

// ---- 2: integrator order -----------------------------------------------------

Verdict integrator_order() {
  auto growth = [](const SwarmState& z) { return SwarmState(z); };
  const SwarmState one = SwarmState::Ones(1, 1);
  const double e1 = std::abs(rk4_step(growth, one, 0.1)(0, 0) - std::exp(0.1));
  const double e2 = std::abs(rk4_step(growth, one, 0.05)(0, 0) - std::exp(0.05));
  const double ratio = e1 / e2;

  const double accel = -1.7;
  auto double_integrator = [&](const SwarmState& z) {
    SwarmState d(1, 2);
    d << z(0, 1), accel;
    return d;
  };
  SwarmState z(1, 2);
  z << 0.4, 2.0;
  double worst = 0.0;
  for (int s = 1; s <= 100; ++s) {
    z = rk4_step(double_integrator, z, 0.01);
    const double t = 0.01 * s;
    worst = std::max({worst, std::abs(z(0, 0) - (0.4 + 2.0 * t + 0.5 * accel * t * t)),
                      std::abs(z(0, 1) - (2.0 + accel * t))});
  }
  return {ratio >= 25.0 && ratio <= 40.0 && worst < 1e-12,
          format("error ratio %.2f on halving h, constant-acceleration max error %.1e", ratio, worst)};
}

// ---- 3: ground-truth flocking ----------------------------------------------

Verdict groundtruth_flocking() {
  int good = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Trajectory t = simulate_tanner(init_2d_swarm(10, {seed, 0}), 2000, 0.01);
    const auto v = avd(t);
    const auto m = amd(t);
    const bool aligned = tail_mean(v, 10) < 0.1 * v.front();
    const bool apart = *std::min_element(m.begin(), m.end()) > 0.0;
    good += aligned && apart;
  }
  return {good >= 18, format("%d/20 seeds align with positive spacing", good)};
}

// ---- 4 and 6: 2D learning and scaling --------------------------------------

struct Planar {
  Dataset data;
  ControllerParams params;
};

Planar train_planar() {
  DatasetSpec spec;
  spec.n = 10;
  spec.traj_count = 10;
  spec.train_count = 5;
  spec.steps = 500;
  spec.seed = 7;
  Planar out{generate_dataset(spec), {}};
  ControllerMeta meta;
  meta.k = 6;
  meta.d_cr = 5.0;
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.lr = 1e-3;
  const auto train_set = out.data.train(), test_set = out.data.test();
  out.params = train(cfg, ControllerParams::initialize(meta, 128, {3, 0}), train_set, test_set).params;
  return out;
}

Verdict planar_learning(const Planar& run) {
  int good = 0;
  std::string per;
  for (const Trajectory& truth : run.data.test()) {
    const Trajectory pred = predict_rollout(run.params, truth.snapshots.front(), truth.length() - 1, truth.dt);
    const double ga = tail_mean(avd(truth), 10), pa = tail_mean(avd(pred), 10);
    const double gm = tail_mean(amd(truth), 10), pm = tail_mean(amd(pred), 10);
    const bool ok = pa <= 2.0 * ga && pm >= 0.5 * gm && pm <= 2.0 * gm;
    good += ok;
    per += format(" [avd %.3g/%.3g amd %.3g/%.3g]", pa, ga, pm, gm);
  }
  return {good >= 4, format("%d/5 held-out conditions within bounds (pred/truth):", good) + per};
}

Verdict scaling(const Planar& run) {
  const auto rows = scaling_eval(run.params, {10, 30, 50}, 5, 2000, 0.01, 10, 23);
  double lo = INFINITY, hi = 0.0;
  std::string per;
  for (const ScalingRow& r : rows) {
    lo = std::min(lo, r.amd.median);
    hi = std::max(hi, r.amd.median);
    per += format(" n=%ld:%.3g", static_cast<long>(r.size), r.amd.median);
  }
  const double spread = hi / lo;
  return {std::isfinite(spread) && spread < 2.5, format("median amd spread %.2fx;", spread) + per};
}

// ---- 5: 3D learning --------------------------------------------------------

Verdict spatial_learning() {
  const ExperimentConfig base = ExperimentConfig::defaults(Space::spatial);
  DatasetSpec spec = base.dataset_spec();
  spec.traj_count = 7;
  spec.train_count = 2;
  spec.steps = 510;
  spec.discard = 10;
  spec.seed = 11;
  const Dataset ds = generate_dataset(spec);
  const auto train_set = ds.train(), test_set = ds.test();
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.lr = 1e-3;
  const ControllerParams p =
      train(cfg, ControllerParams::initialize(base.controller_meta(), 128, {3, 0}), train_set, test_set).params;

  // baseline: divergence between independent ground-truth runs
  double baseline = 0.0;
  for (std::size_t a = 0; a + 1 < test_set.size(); ++a) baseline += pod_kld(test_set[a], test_set[a + 1], 10);
  baseline /= static_cast<double>(test_set.size() - 1);
  const double threshold = 3.0 * baseline;

  double pred_amd = 0.0, truth_amd = 0.0, kld = 0.0;
  for (const Trajectory& truth : test_set) {
    const Trajectory pred = predict_rollout(p, truth.snapshots.front(), truth.length() - 1, truth.dt);
    pred_amd += tail_mean(amd(pred), 10);
    truth_amd += tail_mean(amd(truth), 10);
    kld += pod_kld(pred, truth, 10);
  }
  const double count = static_cast<double>(test_set.size());
  const double ratio = pred_amd / truth_amd;
  kld /= count;
  return {ratio >= 0.5 && ratio <= 2.0 && kld < threshold,
          format("mean amd ratio %.2f over %zu conditions, mean POD-KLD %.4f vs threshold %.4f (3x baseline %.4f)",
                 ratio, test_set.size(), kld, threshold, baseline)};
}

// ---- 7: metric unit values -------------------------------------------------

Verdict metric_values() {
  Trajectory two;
  SwarmState a(2, 4);
  a << 0, 0, 0, 0, 1, 1, 3, 4;
  two.snapshots = {a};
  Trajectory three;
  SwarmState b(3, 4);
  b << 0, 0, 0, 0, 1, 0, 0, 0, 3, 0, 0, 0;
  three.snapshots = {b};
  Vector p(2), q(2);
  p << 0.7, 0.3;
  q << 0.5, 0.5;
  const double hand = 0.7 * std::log(1.4) + 0.3 * std::log(0.6);
  Trajectory rank1;
  SwarmState pattern(2, 4);
  pattern << 1, 2, -1, 0.5, 0, 1, 3, -2;
  for (double s : {0.0, 1.0, 2.5, -1.0}) rank1.snapshots.push_back(s * pattern);
  const Vector e = pod_energies(rank1, 4);

  const double v = avd(two)[0], m = amd(three)[0], k = kl_divergence(p, q);
  const bool pod_ok = std::abs(e[0] - 1.0) < 1e-12 && e.tail(3).cwiseAbs().maxCoeff() < 1e-12;
  return {v == 5.0 && std::abs(m - 4.0 / 3.0) < 1e-15 && std::abs(k - hand) < 1e-6 && std::abs(k - 0.0823) < 1e-4 &&
              pod_ok,
          format("avd %.15g, amd %.15g, KLD %.7f, rank-1 POD [%.3g, %.1e, ...]", v, m, k, e[0], e[1])};
}

// ---- 8: information-structure invariants ------------------------------------

Verdict info_invariants() {
  const props::Outcome o = props::check_info_invariants(10000, 2024);
  return {o.violations == 0,
          format("%zu randomized configurations, %zu violations", o.configs, o.violations) +
              (o.first.empty() ? "" : " (first: " + o.first + ")")};
}

// ---- 9: reproducibility and round trips -------------------------------------

Verdict reproducibility() {
  const fs::path dir = fs::temp_directory_path() / ("swarmlearn_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  ExperimentConfig cfg = ExperimentConfig::defaults(Space::planar);
  cfg.n = 5;
  cfg.steps = 200;
  cfg.traj_count = 4;
  cfg.train_count = 2;
  cfg.epochs = 2;
  cfg.hidden = 32;

  std::vector<std::string> problems;
  save_dataset((dir / "a").string(), generate_dataset(cfg.dataset_spec()));
  save_dataset((dir / "b").string(), generate_dataset(cfg.dataset_spec()));
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const fs::path other = dir / "b" / entry.path().filename();
    if (!fs::exists(other) || read_file(entry.path().string()) != read_file(other.string()))
      problems.push_back("dataset file " + entry.path().filename().string() + " differs");
  }

  std::string checkpoints[2];
  for (std::string& text : checkpoints) {
    const Dataset ds = load_dataset((dir / "a").string());
    const auto train_set = ds.train(), test_set = ds.test();
    const TrainResult r = train(cfg.train_config(),
                                ControllerParams::initialize(cfg.controller_meta(), cfg.hidden, {cfg.train_seed, 0x1417}),
                                train_set, test_set);
    text = emit_checkpoint(r.params, &r.state);
  }
  if (checkpoints[0] != checkpoints[1]) problems.push_back("retrained checkpoint differs");

  const Checkpoint c = parse_checkpoint(checkpoints[0]);
  if (emit_checkpoint(c.params, c.state ? &*c.state : nullptr) != checkpoints[0])
    problems.push_back("checkpoint does not re-emit identically");
  const Trajectory t = load_dataset((dir / "a").string()).trajectories.front();
  std::ostringstream once, twice;
  write_trajectory(once, t);
  std::istringstream in(once.str());
  const Trajectory back = read_trajectory(in);
  write_trajectory(twice, back);
  bool same = back.length() == t.length();
  for (std::size_t j = 0; same && j < t.length(); ++j) same = back.snapshots[j] == t.snapshots[j];
  if (!same || once.str() != twice.str()) problems.push_back("trajectory round trip is not exact");
  if (!(parse_config(emit_config(cfg)) == cfg) || emit_config(parse_config(emit_config(cfg))) != emit_config(cfg))
    problems.push_back("config round trip is not exact");
  fs::remove_all(dir);

  std::string detail = "dataset, 2-epoch checkpoint, trajectory and config reproduce byte-identically";
  if (!problems.empty()) {
    detail = problems.front();
    for (std::size_t q = 1; q < problems.size(); ++q) detail += "; " + problems[q];
  }
  return {problems.empty(), detail};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const std::function<Verdict()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = f();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s  %s  (%.1f s)\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  };

  report(1, gradient_exactness);
  report(2, integrator_order);
  report(3, groundtruth_flocking);
  Planar planar;
  std::string planar_error;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    planar = train_planar();
  } catch (const std::exception& e) {
    planar_error = e.what();
  }
  std::printf("(2D controller trained in %.1f s)\n",
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  auto with_planar = [&](Verdict (*f)(const Planar&)) {
    return [&, f]() -> Verdict {
      if (!planar_error.empty()) return {false, "training failed: " + planar_error};
      return f(planar);
    };
  };
  report(4, with_planar(planar_learning));
  report(5, spatial_learning);
  report(6, with_planar(scaling));
  report(7, metric_values);
  report(8, info_invariants);
  report(9, reproducibility);
  std::printf("%d of 9 criteria failed\n", failed);
  return failed ? 1 : 0;
}
