#include <doctest.h>

#include <omp.h>

#include <cmath>

#include "swarmlearn/groundtruth.hpp"
#include "swarmlearn/trainer.hpp"

using namespace swarmlearn;

namespace {

ControllerMeta meta_for(Space space, Index k) {
  ControllerMeta m;
  m.space = space;
  m.k = k;
  if (space == Space::spatial) {
    m.d_cr = 2.0;
    m.tau = 1;
    m.neighbor.form = GainForm::square;
  }
  return m;
}

// Random snapshots of a tightly packed swarm so that neighbor repulsion is
// active; 3D robots sit close to a corner so walls are active too.
Trajectory packed_trajectory(Space space, Index n, std::size_t length, RngSpec rng) {
  CounterRng gen(rng);
  Trajectory t;
  t.space = space;
  t.dt = space == Space::planar ? 0.01 : 0.02;
  const Index d = state_dim(space), pd = position_dim(space);
  for (std::size_t j = 0; j < length; ++j) {
    SwarmState z(n, d);
    for (Index i = 0; i < n; ++i) {
      for (Index c = 0; c < pd; ++c) z(i, c) = space == Space::planar ? gen.uniform(-0.5, 0.5) : gen.uniform(4.2, 4.8);
      for (Index c = pd; c < d; ++c) z(i, c) = gen.uniform(-1.0, 1.0);
      if (space == Space::spatial) z.row(i).tail(3).normalize();
    }
    t.snapshots.push_back(z);
  }
  return t;
}

// Short ground-truth trajectories of three close robots, the kind of data
// the gradient is taken on during training.
Trajectory close_trio(Space space) {
  if (space == Space::planar) {
    SwarmState z0(3, 4);
    z0 << 0, 0, 0.3, 0, 0.6, 0.2, -0.2, 0.1, -0.3, 0.5, 0, 0.4;
    return add_stabilization_noise(simulate_tanner(z0, 5, 0.01), 0.001, {9, 1});
  }
  SwarmState z0(3, 6);
  z0 << 4.3, 4.4, 0, 1, 0, 0, 4.0, 4.6, 0.3, 0, 1, 0, 3.8, 4.0, 0.5, 0, 0, 1;
  return simulate_boids(z0, 7, 0, BoidsParams{});
}

Trajectory constant_trajectory(Space space, Index n, std::size_t length) {
  Trajectory t;
  t.space = space;
  t.snapshots.assign(length, SwarmState::Zero(n, state_dim(space)));
  return t;
}

}  // namespace

TEST_CASE("one-step pairs") {
  CHECK(one_step_pairs(constant_trajectory(Space::planar, 2, 2000), 0).size() == 1999);
  CHECK(one_step_pairs(constant_trajectory(Space::spatial, 2, 1690), 1).size() == 1688);
  CHECK(one_step_pairs(constant_trajectory(Space::planar, 2, 5), 3).size() == 1);
  CHECK_THROWS_AS(one_step_pairs(constant_trajectory(Space::planar, 2, 4), 3), ValidationError);
  const Trajectory t = packed_trajectory(Space::spatial, 3, 6, {1, 0});
  const auto pairs = one_step_pairs(t, 2);
  CHECK(pairs[0].now == &t.snapshots[2]);
  CHECK(pairs[0].delayed == &t.snapshots[0]);
  CHECK(pairs[0].target == &t.snapshots[3]);
}

TEST_CASE("loss examples") {
  const ControllerParams zero = ControllerParams::zeros(meta_for(Space::planar, 2), 8);
  SwarmState now(1, 4);
  now << 0, 0, 1, 2;
  SwarmState exact(1, 4);
  exact << 0.01, 0.02, 1, 2;
  SwarmState off = exact;
  off(0, 0) += 0.5;
  const StepPair at_optimum{&now, &now, &exact, 0.01};
  const StepPair half_off{&now, &now, &off, 0.01};
  CHECK(pair_loss(zero, at_optimum) < 1e-28);
  CHECK(pair_loss(zero, half_off) == doctest::Approx(0.25).epsilon(1e-12));
  const std::vector<StepPair> both = {at_optimum, half_off};
  CHECK(loss(zero, both) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK_THROWS_AS(loss(zero, std::span<const StepPair>{}), ValidationError);
  CHECK_THROWS_AS(loss_and_grad(zero, std::span<const StepPair>{}), ValidationError);
}

TEST_CASE("finite-difference check of the analytic gradient") {
  for (Space space : {Space::planar, Space::spatial}) {
    CAPTURE(to_string(space));
    ControllerParams p = ControllerParams::initialize(meta_for(space, 2), 32, {2, 0});
    p.phi_neighbor = 0.7;
    p.phi_wall = 0.9;
    const Trajectory t = close_trio(space);
    const auto pairs = one_step_pairs(t, p.meta.tau);
    REQUIRE(pairs.size() == 5);
    REQUIRE(neighbor_obstacle(0, *pairs[0].now, 1.0));
    CHECK(p.parameter_count() >= 200);
    CHECK(fd_check(p, pairs, 1e-5, 1000) < 1e-4);

    // gain parameters directly
    const Vector g = loss_and_grad(p, pairs).grad;
    const auto phi = static_cast<Index>(p.offset_phi());
    for (int which : {0, 1}) {
      ControllerParams a = p, b = p;
      (which ? a.phi_wall : a.phi_neighbor) += 1e-6;
      (which ? b.phi_wall : b.phi_neighbor) -= 1e-6;
      const double fd = (loss(a, pairs) - loss(b, pairs)) / 2e-6;
      CHECK(std::abs(fd - g[phi + which]) <= 1e-5 * std::max(1e-6, std::abs(fd)));
      if (space == Space::spatial) CHECK(std::abs(g[phi + which]) > 0.0);
    }
    if (space == Space::planar) CHECK(g[phi + 1] == 0.0);
  }
}

TEST_CASE("generic finite-difference helper") {
  const Index n = 6;
  Vector x(n);
  x << 0.3, -1.2, 0.8, 2.0, -0.4, 1.1;
  auto cubic = [](const Vector& v) { return v.array().cube().sum() + 0.5 * v.squaredNorm(); };
  const Vector exact = (3.0 * x.array().square() + x.array()).matrix();
  CHECK(fd_check(cubic, x, exact, 1e-5) < 1e-8);
  CHECK(fd_check(cubic, x, exact, 0.1) > 1e-3);
  Vector wrong = exact;
  wrong[n - 1] += 0.1;
  CHECK(fd_check(cubic, x, wrong, 1e-5) > 1e-2);
  CHECK_THROWS_AS(fd_check(cubic, x, exact, 0.0), ValidationError);
}

TEST_CASE("gradient properties") {
  ControllerParams p = ControllerParams::initialize(meta_for(Space::planar, 3), 24, {4, 0});
  p.phi_neighbor = 0.5;
  const Trajectory t = packed_trajectory(Space::planar, 4, 40, {5, 0});
  const auto pairs = one_step_pairs(t, 0);
  const LossGrad lg = loss_and_grad(p, pairs);

  SUBCASE("loss agrees with the loss-only path") { CHECK(lg.loss == doctest::Approx(loss(p, pairs)).epsilon(1e-13)); }

  SUBCASE("directional derivative") {
    CounterRng gen({6, 0});
    Vector dir(p.parameter_count());
    for (Index c = 0; c < dir.size(); ++c) dir[c] = gen.normal();
    dir.normalize();
    const double eps = 1e-4;
    ControllerParams a = p, b = p;
    a.unpack(p.pack() + eps * dir);
    b.unpack(p.pack() - eps * dir);
    const double fd = (loss(a, pairs) - loss(b, pairs)) / (2 * eps);
    CHECK(fd == doctest::Approx(lg.grad.dot(dir)).epsilon(1e-4));
  }

  SUBCASE("doubling the prediction error doubles the gradient") {
    // Targets moved so every residual is twice the original one.
    std::vector<SwarmState> doubled;
    doubled.reserve(pairs.size());
    for (const StepPair& pair : pairs) {
      const auto ctx = planar_contexts(p, *pair.now, *pair.delayed);
      SwarmState pred(pair.now->rows(), 4);
      for (Index i = 0; i < pred.rows(); ++i)
        pred.row(i) = planar_one_step(p, pair.now->row(i).transpose(), ctx[static_cast<std::size_t>(i)], pair.dt).transpose();
      doubled.push_back(pred + 2.0 * (*pair.target - pred));
    }
    std::vector<StepPair> pairs2 = pairs;
    for (std::size_t q = 0; q < pairs2.size(); ++q) pairs2[q].target = &doubled[q];
    const LossGrad lg2 = loss_and_grad(p, pairs2);
    CHECK(lg2.loss == doctest::Approx(4.0 * lg.loss).epsilon(1e-10));
    CHECK((lg2.grad - 2.0 * lg.grad).norm() <= 1e-10 * lg.grad.norm());
  }

  SUBCASE("splitting a batch gives the size-weighted mean") {
    const std::span<const StepPair> all(pairs);
    const auto a = all.first(13), b = all.subspan(13);
    const LossGrad la = loss_and_grad(p, a), lb = loss_and_grad(p, b);
    const double na = 13.0, nb = static_cast<double>(b.size()), nt = static_cast<double>(all.size());
    CHECK((na * la.grad + nb * lb.grad - nt * lg.grad).norm() <= 1e-12 * nt * lg.grad.norm());
    CHECK(na * la.loss + nb * lb.loss == doctest::Approx(nt * lg.loss).epsilon(1e-12));
  }

  SUBCASE("chunked parallel reduction equals the serial reference bitwise") {
    const Trajectory big = packed_trajectory(Space::planar, 4, 200, {7, 0});
    const auto many = one_step_pairs(big, 0);
    const LossGrad serial = loss_and_grad_serial(p, many);
    for (int threads : {1, 2, 4}) {
      omp_set_num_threads(threads);
      const LossGrad par = loss_and_grad(p, many);
      CHECK(par.loss == serial.loss);
      CHECK(par.grad == serial.grad);
    }
    omp_set_num_threads(1);
  }
}

TEST_CASE("training") {
  const ControllerMeta meta = meta_for(Space::planar, 3);
  // Data produced by a known controller so that zero loss is attainable.
  ControllerParams truth = ControllerParams::initialize(meta, 16, {10, 0});
  truth.phi_neighbor = 0.8;
  std::vector<Trajectory> train_set, held;
  for (std::uint64_t s = 0; s < 4; ++s) {
    Trajectory t = predict_rollout(truth, init_2d_swarm(5, {11, s}, {0, 1}, {0, 1}), 60, 0.01);
    (s < 3 ? train_set : held).push_back(std::move(t));
  }
  std::vector<StepPair> held_pairs = one_step_pairs(held[0], 0);
  CHECK(loss(truth, held_pairs) < 1e-24);

  TrainConfig cfg;
  cfg.lr = 1e-2;
  cfg.epochs = 12;
  cfg.batch_size = 16;
  cfg.seed = 5;
  const ControllerParams init = ControllerParams::initialize(meta, 16, {12, 0});

  const TrainResult a = train(cfg, init, train_set, held);
  SUBCASE("deterministic for a fixed seed") {
    const TrainResult b = train(cfg, init, train_set, held);
    CHECK(a.params.pack() == b.params.pack());
    CHECK(a.history.heldout_loss == b.history.heldout_loss);
    TrainConfig other = cfg;
    other.seed = 6;
    CHECK(train(other, init, train_set, held).params.pack() != a.params.pack());
  }
  SUBCASE("returns the best held-out parameters") {
    REQUIRE(a.history.epochs() == 12);
    const double best = *std::min_element(a.history.heldout_loss.begin(), a.history.heldout_loss.end());
    CHECK(loss(a.params, held_pairs) == doctest::Approx(best).epsilon(1e-12));
    CHECK(a.state.best_loss == best);
    double running = INFINITY;
    for (double h : a.history.heldout_loss) running = std::min(running, h);
    CHECK(running == best);
  }
  SUBCASE("reduces the loss on data from a known controller") {
    CHECK(loss(a.params, held_pairs) < 0.5 * loss(init, held_pairs));
  }
  SUBCASE("resuming continues the same run") {
    TrainConfig first = cfg;
    first.epochs = 5;
    const TrainResult part = train(first, init, train_set, held);
    TrainConfig rest = cfg;
    rest.epochs = 7;
    const TrainResult resumed = train(rest, init, train_set, held, &part.state);
    CHECK(resumed.history.epochs() == 12);
    CHECK(resumed.params.pack() == a.params.pack());
    CHECK(resumed.state.current.pack() == a.state.current.pack());
    CHECK(resumed.history.train_loss == a.history.train_loss);
    CHECK(resumed.state.adam.t == a.state.adam.t);
  }
  SUBCASE("epoch callback sees every epoch") {
    TrainConfig two = cfg;
    two.epochs = 2;
    std::vector<std::size_t> seen;
    train(two, init, train_set, held, nullptr, [&](std::size_t e, const TrainHistory& h) {
      seen.push_back(e);
      CHECK(h.epochs() == e + 1);
    });
    CHECK(seen == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("invalid input is rejected") {
    TrainConfig bad = cfg;
    bad.lr = 0.0;
    CHECK_THROWS_AS(train(bad, init, train_set, held), ValidationError);
    CHECK_THROWS_AS(train(cfg, init, std::span<const Trajectory>{}, held), ValidationError);
    const ControllerParams spatial = ControllerParams::initialize(meta_for(Space::spatial, 3), 8, {1, 0});
    CHECK_THROWS_AS(train(cfg, spatial, train_set, held), ValidationError);
  }
}
