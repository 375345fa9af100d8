#include "swarmlearn/knowledge.hpp"

#include <limits>

namespace swarmlearn {

std::string_view to_string(GainForm form) {
  return form == GainForm::offset_square ? "offset_square" : "square";
}

GainForm parse_gain_form(std::string_view tag) {
  if (tag == "offset_square") return GainForm::offset_square;
  if (tag == "square") return GainForm::square;
  throw ValidationError("unknown gain_form '" + std::string(tag) + "'");
}

void PotentialSpec::validate() const {
  if (!(d0 > 0.0)) throw ValidationError("potential: d0 must be positive");
  if (form == GainForm::offset_square && !(offset > 0.0))
    throw ValidationError("potential: offset a must be positive for offset_square");
}

double potential(double dist, double gain, double d0) {
  if (dist == 0.0) throw SingularConfiguration("potential: zero distance to obstacle");
  if (dist > d0) return 0.0;
  return gain / (2.0 * dist * dist);
}

Vector repulsive_force(const Vector& pos, const Vector& obstacle, double gain, double d0) {
  return gain * unit_force(pos, obstacle, d0);
}

Vector unit_force(const Vector& pos, const Vector& obstacle, double d0) {
  const Vector diff = pos - obstacle;
  const double dist = diff.norm();
  if (dist == 0.0) throw SingularConfiguration("repulsive force: robot coincides with obstacle");
  if (dist > d0) return Vector::Zero(pos.size());
  const double d = std::max(dist, kMinObstacleDistance);
  const double d2 = d * d;
  return diff / (d2 * d2);
}

Matrix unit_force_jacobian(const Vector& pos, const Vector& obstacle, double d0) {
  const Vector diff = pos - obstacle;
  const double dist = diff.norm();
  const Index p = pos.size();
  if (dist == 0.0) throw SingularConfiguration("repulsive force: robot coincides with obstacle");
  if (dist > d0) return Matrix::Zero(p, p);
  if (dist < kMinObstacleDistance) {
    // Clamped regime: only the numerator varies.
    const double d4 = std::pow(kMinObstacleDistance, 4);
    return Matrix::Identity(p, p) / d4;
  }
  const double d2 = dist * dist;
  const double d4 = d2 * d2;
  return Matrix::Identity(p, p) / d4 - (4.0 / (d4 * d2)) * diff * diff.transpose();
}

std::optional<Vector> neighbor_obstacle(Index i, const SwarmState& z, double d0) {
  const auto pos = positions(z);
  Index best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < z.rows(); ++j) {
    if (j == i) continue;
    const double d2 = (pos.row(i) - pos.row(j)).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = j;
    }
  }
  if (best < 0 || best_d2 > d0 * d0) return std::nullopt;
  return Vector(pos.row(best).transpose());
}

std::vector<Vector> wall_obstacles(const Vector& pos, double half_side, double d0) {
  std::vector<Vector> out;
  for (Index axis = 0; axis < pos.size(); ++axis) {
    for (double side : {1.0, -1.0}) {
      Vector q = pos;
      q[axis] = side * half_side;
      if (std::abs(q[axis] - pos[axis]) <= d0) out.push_back(std::move(q));
    }
  }
  return out;
}

Vector total_repulsion(const Vector& pos, const ObstacleSet& obstacles, const RepulsionGains& g) {
  Vector f = Vector::Zero(pos.size());
  const double lambda_n = g.neighbor.gain(g.phi_neighbor);
  const double lambda_w = g.wall.gain(g.phi_wall);
  for (const Obstacle& o : obstacles) {
    if (o.cls == ObstacleClass::neighbor)
      f += lambda_n * unit_force(pos, o.point, g.neighbor.d0);
    else
      f += lambda_w * unit_force(pos, o.point, g.wall.d0);
  }
  return f;
}

}  // namespace swarmlearn
