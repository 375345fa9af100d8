#pragma once

#include <optional>
#include <vector>

#include "swarmlearn/sim_core.hpp"

namespace swarmlearn {

enum class GainForm { offset_square, square };

std::string_view to_string(GainForm form);
GainForm parse_gain_form(std::string_view tag);

// Gain lambda(phi) = a + phi^2 (offset_square) or phi^2 (square), active
// within the influence threshold d0.
struct PotentialSpec {
  double d0 = 1.0;
  GainForm form = GainForm::square;
  double offset = 0.5;

  double gain(double phi) const { return (form == GainForm::offset_square ? offset : 0.0) + phi * phi; }
  double gain_slope(double phi) const { return 2.0 * phi; }
  void validate() const;
};

// Below this distance the force kernels use the clamped value.
constexpr double kMinObstacleDistance = 1e-6;

// lambda / (2 dist^2) inside d0, else 0.
double potential(double dist, double gain, double d0);

// -grad U: magnitude gain / dist^3 pointing from the obstacle to the robot
// when dist <= d0, zero otherwise.
Vector repulsive_force(const Vector& pos, const Vector& obstacle, double gain, double d0);

// Force for unit gain, (pos - obs) / dist^4, with dist clamped below at
// kMinObstacleDistance. Throws on exact coincidence.
Vector unit_force(const Vector& pos, const Vector& obstacle, double d0);

// d unit_force / d pos, symmetric.
Matrix unit_force_jacobian(const Vector& pos, const Vector& obstacle, double d0);

enum class ObstacleClass { neighbor, wall };

struct Obstacle {
  Vector point;
  ObstacleClass cls = ObstacleClass::neighbor;
};

using ObstacleSet = std::vector<Obstacle>;

// Position of robot i's single closest other robot when within d0.
std::optional<Vector> neighbor_obstacle(Index i, const SwarmState& z, double d0);

// Orthogonal projections of `pos` onto the faces of the cube [-h, h]^3
// that lie within d0.
std::vector<Vector> wall_obstacles(const Vector& pos, double half_side, double d0);

struct RepulsionGains {
  PotentialSpec neighbor;
  PotentialSpec wall;
  double phi_neighbor = 0.0;
  double phi_wall = 0.0;
};

// Sum over obstacles of lambda_class * unit force, each obstacle using its
// class's threshold.
Vector total_repulsion(const Vector& pos, const ObstacleSet& obstacles, const RepulsionGains& g);

}  // namespace swarmlearn
