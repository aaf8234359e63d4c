#pragma once

// Blunt-cone flow domain in the meridional (x, y >= 0) half-plane.
//
// x runs downstream along the axis with the nose stagnation point at the
// origin; y is the radial coordinate. The solid body is the nose disc centred
// at (nose_radius, 0) joined tangentially to a straight cone flank that ends at
// x = body_length.

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "nbfrom/linalg.hpp"

namespace nbfrom {

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

enum class BoundaryLabel { Inflow, Symmetry, Wall, Outflow, Interior };

std::string_view to_string(BoundaryLabel label);

struct ConeGeometry {
  double nose_radius = 0.1524;
  double half_cone_angle_deg = 9.0;
  double body_length = 1.3;
  double upstream_extent = 0.3;  // farfield distance ahead of the nose
  double radial_extent = 0.8;

  /// Throws std::invalid_argument unless every dimension is positive, the
  /// half-angle is below 90 degrees and the flank reaches past the nose.
  void validate() const;

  double x_min() const { return -upstream_extent; }
  double x_max() const { return body_length; }
  double y_max() const { return radial_extent; }
  Point nose_center() const { return {nose_radius, 0.0}; }
  /// Where the cone flank leaves the nose circle.
  Point tangency_point() const;
  /// Flank height at axial station x (valid for x >= tangency_point().x).
  double flank_y(double x) const;
};

/// Closest-feature description of a point relative to the body surface.
struct WallFrame {
  double distance;  // signed: negative inside the solid
  Point normal;     // outward unit normal of the nearest surface feature
};

/// Signed distance to the body surface, treating the nose arc and the
/// (unbounded) flank line as one smooth wall. The switch between the two
/// happens on the normal through the tangency point.
WallFrame wall_frame(const ConeGeometry& geom, Point p);

/// Unsigned distance to the actual wall curve (nose arc plus finite flank).
double wall_distance(const ConeGeometry& geom, Point p);

/// Inside the farfield box, on or above the axis, and not inside the solid.
bool contains(const ConeGeometry& geom, Point p);

/// How far p lies outside the closed domain (0 for contained points).
double domain_violation(const ConeGeometry& geom, Point p);

/// Label with tie-break Wall > Symmetry > Inflow > Outflow. Throws
/// std::out_of_range if p lies more than tol outside the domain.
BoundaryLabel classify(const ConeGeometry& geom, Point p, double tol);

struct Mesh {
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  bool operator==(const Mesh&) const = default;
};

/// N x 2 matrix of (x, y) rows.
DenseMatrix coordinates(const Mesh& mesh);

/// FNV-1a over the raw coordinate bytes.
std::uint64_t mesh_fingerprint(const Mesh& mesh);

/// Fraction of the budget placed within wall_band_width() of the wall.
inline constexpr double kWallBandFraction = 0.2;
inline double wall_band_width(const ConeGeometry& geom) { return 2.0 * geom.nose_radius; }

/// Low-discrepancy points filtered by `contains`: round(0.2 n) of them inside
/// the wall band and the rest outside it. Halton sequences with a seeded
/// rotation, so results depend only on (geom, n_points, seed).
Mesh sample_mesh(const ConeGeometry& geom, std::size_t n_points, std::uint64_t seed);

}  // namespace nbfrom
