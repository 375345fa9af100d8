#include "swarmlearn/controller.hpp"

#include <cmath>

namespace swarmlearn {

void ControllerMeta::validate() const {
  if (k < 1) throw ValidationError("controller: k must be >= 1");
  if (!(d_cr > 0.0)) throw ValidationError("controller: d_cr must be positive");
  neighbor.validate();
  if (space == Space::spatial) wall.validate();
}

ControllerParams ControllerParams::zeros(const ControllerMeta& meta, Index hidden) {
  ControllerParams p;
  p.meta = meta;
  p.w1 = Matrix::Zero(hidden, meta.input_dim());
  p.b1 = Vector::Zero(hidden);
  p.w2 = Matrix::Zero(meta.output_dim(), hidden);
  p.b2 = Vector::Zero(meta.output_dim());
  return p;
}

ControllerParams ControllerParams::initialize(const ControllerMeta& meta, Index hidden, RngSpec rng,
                                              double phi0) {
  meta.validate();
  if (hidden < 1) throw ValidationError("controller: hidden width must be >= 1");
  ControllerParams p = zeros(meta, hidden);
  CounterRng gen(rng);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(meta.input_dim()));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Index q = 0; q < p.w1.size(); ++q) p.w1.data()[q] = gen.uniform(-s1, s1);
  for (Index q = 0; q < p.b1.size(); ++q) p.b1[q] = gen.uniform(-s1, s1);
  for (Index q = 0; q < p.w2.size(); ++q) p.w2.data()[q] = gen.uniform(-s2, s2);
  for (Index q = 0; q < p.b2.size(); ++q) p.b2[q] = gen.uniform(-s2, s2);
  p.phi_neighbor = phi0;
  p.phi_wall = phi0;
  return p;
}

Index ControllerParams::parameter_count() const {
  return w1.size() + b1.size() + w2.size() + b2.size() + 2;
}

Vector ControllerParams::pack() const {
  Vector flat(parameter_count());
  Index o = 0;
  flat.segment(o, w1.size()) = Eigen::Map<const Vector>(w1.data(), w1.size());
  o += w1.size();
  flat.segment(o, b1.size()) = b1;
  o += b1.size();
  flat.segment(o, w2.size()) = Eigen::Map<const Vector>(w2.data(), w2.size());
  o += w2.size();
  flat.segment(o, b2.size()) = b2;
  o += b2.size();
  flat[o] = phi_neighbor;
  flat[o + 1] = phi_wall;
  return flat;
}

void ControllerParams::unpack(const Eigen::Ref<const Vector>& flat) {
  if (flat.size() != parameter_count()) throw ValidationError("controller: flat parameter size mismatch");
  Index o = 0;
  Eigen::Map<Vector>(w1.data(), w1.size()) = flat.segment(o, w1.size());
  o += w1.size();
  b1 = flat.segment(o, b1.size());
  o += b1.size();
  Eigen::Map<Vector>(w2.data(), w2.size()) = flat.segment(o, w2.size());
  o += w2.size();
  b2 = flat.segment(o, b2.size());
  o += b2.size();
  phi_neighbor = flat[o];
  phi_wall = flat[o + 1];
}

void ControllerParams::validate() const {
  meta.validate();
  const Index h = hidden();
  if (w1.cols() != meta.input_dim() || b1.size() != h || w2.rows() != meta.output_dim() ||
      w2.cols() != h || b2.size() != meta.output_dim())
    throw ValidationError("controller: parameter shapes do not match metadata");
  if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite() ||
      !std::isfinite(phi_neighbor) || !std::isfinite(phi_wall))
    throw ValidationError("controller: non-finite parameters");
}

Vector mlp_forward(const ControllerParams& p, const Eigen::Ref<const Vector>& y) {
  if (y.size() != p.w1.cols()) throw ValidationError("mlp_forward: input length mismatch");
  const Vector hidden = (p.w1 * y + p.b1).array().tanh().matrix();
  return p.w2 * hidden + p.b2;
}

MlpGradients controller_gradients(const ControllerParams& p, const Eigen::Ref<const Vector>& y,
                                  const Eigen::Ref<const Vector>& upstream) {
  if (y.size() != p.w1.cols() || upstream.size() != p.w2.rows())
    throw ValidationError("controller_gradients: shape mismatch");
  const Vector hidden = (p.w1 * y + p.b1).array().tanh().matrix();
  MlpGradients g;
  g.b2 = upstream;
  g.w2 = upstream * hidden.transpose();
  const Vector pre_bar = ((p.w2.transpose() * upstream).array() * (1.0 - hidden.array().square())).matrix();
  g.b1 = pre_bar;
  g.w1 = pre_bar * y.transpose();
  g.input = p.w1.transpose() * pre_bar;
  return g;
}

Vector accumulate_mlp_vjp(const ControllerParams& p, const Eigen::Ref<const Vector>& y,
                          const Eigen::Ref<const Vector>& upstream, Eigen::Ref<Vector> grad) {
  const Index h = p.hidden();
  const Index in = p.w1.cols();
  const Index out = p.w2.rows();
  const Vector hidden = (p.w1 * y + p.b1).array().tanh().matrix();
  const Vector pre_bar = ((p.w2.transpose() * upstream).array() * (1.0 - hidden.array().square())).matrix();
  Eigen::Map<Matrix>(grad.data(), h, in).noalias() += pre_bar * y.transpose();
  grad.segment(static_cast<Index>(p.offset_b1()), h) += pre_bar;
  Eigen::Map<Matrix>(grad.data() + p.offset_w2(), out, h).noalias() += upstream * hidden.transpose();
  grad.segment(static_cast<Index>(p.offset_b2()), out) += upstream;
  return p.w1.transpose() * pre_bar;
}

// ---- 2D -----------------------------------------------------------------

namespace {

Vector with_row0(const Vector& info, const Vector& s) {
  Vector y = info;
  y.head(s.size()) = s;
  return y;
}

}  // namespace

Vector planar_robot_derivative(const ControllerParams& p, const Vector& s, const PlanarContext& ctx) {
  Vector out(4);
  out.head<2>() = s.tail<2>();
  Vector accel = mlp_forward(p, with_row0(ctx.info, s));
  if (ctx.obstacle)
    accel += p.meta.neighbor.gain(p.phi_neighbor) * unit_force(s.head(2), *ctx.obstacle, p.meta.neighbor.d0);
  out.tail<2>() = accel;
  return out;
}

Vector planar_one_step(const ControllerParams& p, const Vector& z, const PlanarContext& ctx, double h,
                       PlanarTape* tape) {
  const Vector s1 = z;
  const Vector k1 = planar_robot_derivative(p, s1, ctx);
  const Vector s2 = z + 0.5 * h * k1;
  const Vector k2 = planar_robot_derivative(p, s2, ctx);
  const Vector s3 = z + 0.5 * h * k2;
  const Vector k3 = planar_robot_derivative(p, s3, ctx);
  const Vector s4 = z + h * k3;
  const Vector k4 = planar_robot_derivative(p, s4, ctx);
  if (tape) tape->stage_state = {s1, s2, s3, s4};
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

// Pulls cotangent c of one stage derivative back to parameters (into grad)
// and to the stage state (returned).
Vector planar_stage_vjp(const ControllerParams& p, const Vector& s, const PlanarContext& ctx,
                        const Vector& c, Eigen::Ref<Vector> grad) {
  Vector s_bar = Vector::Zero(4);
  s_bar.tail<2>() += c.head<2>();
  const Vector c_v = c.tail<2>();
  const Vector y_bar = accumulate_mlp_vjp(p, with_row0(ctx.info, s), c_v, grad);
  s_bar += y_bar.head(4);
  if (ctx.obstacle) {
    const Vector r = s.head(2);
    const Vector f = unit_force(r, *ctx.obstacle, p.meta.neighbor.d0);
    const double lambda = p.meta.neighbor.gain(p.phi_neighbor);
    grad[static_cast<Index>(p.offset_phi())] += c_v.dot(f) * p.meta.neighbor.gain_slope(p.phi_neighbor);
    s_bar.head<2>() += lambda * unit_force_jacobian(r, *ctx.obstacle, p.meta.neighbor.d0) * c_v;
  }
  return s_bar;
}

}  // namespace

void planar_one_step_vjp(const ControllerParams& p, const PlanarContext& ctx, double h,
                         const PlanarTape& tape, const Vector& pred_bar, Eigen::Ref<Vector> grad) {
  const Vector k4_bar = (h / 6.0) * pred_bar;
  const Vector s4_bar = planar_stage_vjp(p, tape.stage_state[3], ctx, k4_bar, grad);
  const Vector k3_bar = (h / 3.0) * pred_bar + h * s4_bar;
  const Vector s3_bar = planar_stage_vjp(p, tape.stage_state[2], ctx, k3_bar, grad);
  const Vector k2_bar = (h / 3.0) * pred_bar + (0.5 * h) * s3_bar;
  const Vector s2_bar = planar_stage_vjp(p, tape.stage_state[1], ctx, k2_bar, grad);
  const Vector k1_bar = (h / 6.0) * pred_bar + (0.5 * h) * s2_bar;
  planar_stage_vjp(p, tape.stage_state[0], ctx, k1_bar, grad);
}

// ---- 3D -----------------------------------------------------------------

Vector spatial_velocity(const ControllerParams& p, const Vector& z, const SpatialContext& ctx) {
  const Vector r = z.head(3);
  Vector v = mlp_forward(p, ctx.info);
  if (ctx.obstacle)
    v += p.meta.neighbor.gain(p.phi_neighbor) * unit_force(r, *ctx.obstacle, p.meta.neighbor.d0);
  const double lambda_w = p.meta.wall.gain(p.phi_wall);
  for (const Vector& w : ctx.walls) v += lambda_w * unit_force(r, w, p.meta.wall.d0);
  return v;
}

Vector spatial_one_step(const ControllerParams& p, const Vector& z, const SpatialContext& ctx, double h) {
  const Vector v = spatial_velocity(p, z, ctx);
  Vector next(6);
  next.head(3) = z.head(3) + h * v;
  const double speed = v.norm();
  next.tail(3) = speed > 0.0 ? Vector(v / speed) : Vector(z.tail(3));
  return next;
}

void spatial_one_step_vjp(const ControllerParams& p, const Vector& z, const SpatialContext& ctx, double h,
                          const Vector& pred_bar, Eigen::Ref<Vector> grad) {
  const Vector v = spatial_velocity(p, z, ctx);
  const double speed = v.norm();
  Vector v_bar = h * pred_bar.head(3);
  if (speed > 0.0) {
    const Vector u = v / speed;
    const Vector e = pred_bar.tail(3);
    v_bar += (e - u * u.dot(e)) / speed;
  }
  accumulate_mlp_vjp(p, ctx.info, v_bar, grad);
  const Vector r = z.head(3);
  const auto phi = static_cast<Index>(p.offset_phi());
  if (ctx.obstacle)
    grad[phi] += v_bar.dot(unit_force(r, *ctx.obstacle, p.meta.neighbor.d0)) *
                 p.meta.neighbor.gain_slope(p.phi_neighbor);
  if (!ctx.walls.empty()) {
    Vector fw = Vector::Zero(3);
    for (const Vector& w : ctx.walls) fw += unit_force(r, w, p.meta.wall.d0);
    grad[phi + 1] += v_bar.dot(fw) * p.meta.wall.gain_slope(p.phi_wall);
  }
}

// ---- contexts -------------------------------------------------------------

std::vector<PlanarContext> planar_contexts(const ControllerParams& p, const SwarmState& now,
                                           const SwarmState& delayed) {
  const ShiftOperator s = shift_operator(positions(delayed), p.meta.d_cr);
  std::vector<PlanarContext> out(static_cast<std::size_t>(now.rows()));
  for (Index i = 0; i < now.rows(); ++i) {
    auto& c = out[static_cast<std::size_t>(i)];
    c.info = info_structure(now, delayed, s, i, p.meta.k).flatten();
    c.obstacle = neighbor_obstacle(i, now, p.meta.neighbor.d0);
  }
  return out;
}

std::vector<SpatialContext> spatial_contexts(const ControllerParams& p, const SwarmState& now,
                                             const SwarmState& delayed) {
  const ShiftOperator s = shift_operator(positions(delayed), p.meta.d_cr);
  std::vector<SpatialContext> out(static_cast<std::size_t>(now.rows()));
  for (Index i = 0; i < now.rows(); ++i) {
    auto& c = out[static_cast<std::size_t>(i)];
    c.info = info_structure(now, delayed, s, i, p.meta.k).flatten();
    c.obstacle = neighbor_obstacle(i, now, p.meta.neighbor.d0);
    c.walls = wall_obstacles(now.row(i).head(3).transpose(), p.meta.half_side, p.meta.wall.d0);
  }
  return out;
}

// ---- swarm level ----------------------------------------------------------

SwarmState hybrid_derivative_2d(const SwarmState& z, const std::vector<InfoStructure>& infos,
                                const ControllerParams& p) {
  if (z.cols() != 4) throw ValidationError("hybrid_derivative_2d: expected 2D state rows");
  if (static_cast<Index>(infos.size()) != z.rows())
    throw ValidationError("hybrid_derivative_2d: one info structure per robot required");
  SwarmState out(z.rows(), 4);
  for (Index i = 0; i < z.rows(); ++i) {
    PlanarContext ctx{infos[static_cast<std::size_t>(i)].flatten(),
                      neighbor_obstacle(i, z, p.meta.neighbor.d0)};
    out.row(i) = planar_robot_derivative(p, z.row(i).transpose(), ctx).transpose();
  }
  return out;
}

Matrix hybrid_derivative_3d(const SwarmState& z, const std::vector<InfoStructure>& infos,
                            const ControllerParams& p) {
  if (z.cols() != 6) throw ValidationError("hybrid_derivative_3d: expected 3D state rows");
  if (static_cast<Index>(infos.size()) != z.rows())
    throw ValidationError("hybrid_derivative_3d: one info structure per robot required");
  Matrix out(z.rows(), 3);
  for (Index i = 0; i < z.rows(); ++i) {
    const Vector zi = z.row(i).transpose();
    SpatialContext ctx{infos[static_cast<std::size_t>(i)].flatten(),
                       neighbor_obstacle(i, z, p.meta.neighbor.d0),
                       wall_obstacles(zi.head(3), p.meta.half_side, p.meta.wall.d0)};
    out.row(i) = spatial_velocity(p, zi, ctx).transpose();
  }
  return out;
}

Trajectory predict_rollout(const ControllerParams& p, const SwarmState& z0, std::size_t steps, double h) {
  p.validate();
  if (z0.cols() != p.meta.d()) throw ValidationError("predict_rollout: state dimension does not match model");
  if (!(h > 0.0)) throw ValidationError("predict_rollout: step size must be positive");
  Trajectory traj;
  traj.space = p.meta.space;
  traj.dt = h;
  traj.snapshots.reserve(steps + 1);
  traj.snapshots.push_back(z0);
  const Index n = z0.rows();
  const bool planar = p.meta.space == Space::planar;

  for (std::size_t s = 0; s < steps; ++s) {
    const SwarmState& now = traj.snapshots[s];
    const SwarmState& delayed = traj.snapshots[s >= p.meta.tau ? s - p.meta.tau : 0];
    SwarmState next(n, z0.cols());
    bool failed = false;
    if (planar) {
      const auto ctx = planar_contexts(p, now, delayed);
#pragma omp parallel for schedule(static)
      for (Index i = 0; i < n; ++i) {
        try {
          next.row(i) = planar_one_step(p, now.row(i).transpose(), ctx[static_cast<std::size_t>(i)], h).transpose();
        } catch (const NumericalError&) {
#pragma omp atomic write
          failed = true;
        }
      }
    } else {
      const auto ctx = spatial_contexts(p, now, delayed);
#pragma omp parallel for schedule(static)
      for (Index i = 0; i < n; ++i) {
        try {
          next.row(i) = spatial_one_step(p, now.row(i).transpose(), ctx[static_cast<std::size_t>(i)], h).transpose();
        } catch (const NumericalError&) {
#pragma omp atomic write
          failed = true;
        }
      }
    }
    if (failed) throw IntegrationError(s, "singular configuration during closed-loop prediction");
    if (!next.allFinite()) throw IntegrationError(s, "non-finite predicted state");
    traj.snapshots.push_back(std::move(next));
  }
  return traj;
}

}  // namespace swarmlearn
