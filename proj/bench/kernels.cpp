// Serial reference kernels against their OpenMP counterparts.
//
//   swarmlearn_bench [repeats]
//
// Prints one line per kernel: serial ms, parallel ms, speedup, and whether
// the two results agree.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <omp.h>

#include "swarmlearn/groundtruth.hpp"
#include "swarmlearn/metrics.hpp"
#include "swarmlearn/trainer.hpp"

using namespace swarmlearn;

namespace {

template <class F>
double best_ms(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-22s %10.2f %10.2f %8.2fx  %s\n", name, serial, parallel, serial / parallel, same ? "match" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
  std::printf("threads %d, best of %d\n", omp_get_max_threads(), repeats);
  std::printf("%-22s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");

  {
    const SwarmState z = init_2d_swarm(400, {1, 0});
    SwarmState a, b;
    const double s = best_ms(repeats, [&] { a = tanner_derivative_serial(z); });
    const double p = best_ms(repeats, [&] { b = tanner_derivative(z); });
    report("tanner_derivative n400", s, p, (a - b).cwiseAbs().maxCoeff() < 1e-9);
  }

  const Trajectory traj = simulate_tanner(init_2d_swarm(30, {2, 0}), 1000, 0.01);
  {
    InfoBatch a(0, 0, 1, 1, 1), b(0, 0, 1, 1, 1);
    const double s = best_ms(repeats, [&] { a = batch_info_serial(traj, 5.0, 6, 1); });
    const double p = best_ms(repeats, [&] { b = batch_info(traj, 5.0, 6, 1); });
    report("batch_info n30 m1001", s, p, a == b);
  }
  {
    std::vector<double> a, b, c, d;
    const double s = best_ms(repeats, [&] { a = avd_serial(traj), c = amd_serial(traj); });
    const double p = best_ms(repeats, [&] { b = avd(traj), d = amd(traj); });
    bool same = true;
    for (std::size_t j = 0; j < a.size(); ++j)
      same = same && std::abs(a[j] - b[j]) < 1e-12 && std::abs(c[j] - d[j]) < 1e-12;
    report("avd+amd n30 m1001", s, p, same);
  }
  {
    ControllerMeta meta;
    const ControllerParams params = ControllerParams::initialize(meta, 128, {3, 0});
    const Trajectory small = simulate_tanner(init_2d_swarm(10, {4, 0}), 256, 0.01);
    const auto pairs = one_step_pairs(small, 0);
    LossGrad a, b;
    const double s = best_ms(repeats, [&] { a = loss_and_grad_serial(params, pairs); });
    const double p = best_ms(repeats, [&] { b = loss_and_grad(params, pairs); });
    report("loss_and_grad 256 pairs", s, p, a.loss == b.loss && a.grad == b.grad);
  }
  return 0;
}
