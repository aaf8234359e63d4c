#include "nbfrom/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "nbfrom/io.hpp"
#include "nbfrom/random.hpp"

namespace nbfrom {

std::string_view to_string(BoundaryLabel label) {
  switch (label) {
    case BoundaryLabel::Inflow: return "inflow";
    case BoundaryLabel::Symmetry: return "symmetry";
    case BoundaryLabel::Wall: return "wall";
    case BoundaryLabel::Outflow: return "outflow";
    case BoundaryLabel::Interior: return "interior";
  }
  return "unknown";
}

namespace {

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

void ConeGeometry::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("geometry: ") + name + " must be positive");
    }
  };
  positive(nose_radius, "nose_radius");
  positive(half_cone_angle_deg, "half_cone_angle");
  positive(body_length, "body_length");
  positive(upstream_extent, "upstream_extent");
  positive(radial_extent, "radial_extent");
  if (half_cone_angle_deg >= 90.0) throw std::invalid_argument("geometry: half_cone_angle must be below 90");
  if (body_length <= tangency_point().x) {
    throw std::invalid_argument("geometry: body_length ends before the nose/flank tangency");
  }
  if (radial_extent <= flank_y(body_length)) {
    throw std::invalid_argument("geometry: radial_extent does not clear the body");
  }
}

Point ConeGeometry::tangency_point() const {
  const double t = radians(half_cone_angle_deg);
  return {nose_radius - nose_radius * std::sin(t), nose_radius * std::cos(t)};
}

double ConeGeometry::flank_y(double x) const {
  const Point tp = tangency_point();
  return tp.y + (x - tp.x) * std::tan(radians(half_cone_angle_deg));
}

WallFrame wall_frame(const ConeGeometry& geom, Point p) {
  const double t = radians(geom.half_cone_angle_deg);
  const Point c = geom.nose_center();
  const double qx = p.x - c.x;
  const double qy = p.y - c.y;
  // Flank direction (cos t, sin t); its outward normal is (-sin t, cos t).
  if (qx * std::cos(t) + qy * std::sin(t) >= 0.0) {
    const Point tp = geom.tangency_point();
    const double d = -(p.x - tp.x) * std::sin(t) + (p.y - tp.y) * std::cos(t);
    return {d, {-std::sin(t), std::cos(t)}};
  }
  const double r = std::hypot(qx, qy);
  if (r == 0.0) return {-geom.nose_radius, {-1.0, 0.0}};
  return {r - geom.nose_radius, {qx / r, qy / r}};
}

double wall_distance(const ConeGeometry& geom, Point p) {
  const Point c = geom.nose_center();
  const Point tp = geom.tangency_point();
  const Point tip{0.0, 0.0};

  double arc;
  const double angle = std::atan2(p.y - c.y, p.x - c.x);
  const double arc_start = std::numbers::pi / 2 + radians(geom.half_cone_angle_deg);
  if (angle >= arc_start) {
    arc = std::fabs(distance(p, c) - geom.nose_radius);
  } else {
    arc = std::min(distance(p, tp), distance(p, tip));
  }

  const Point end{geom.body_length, geom.flank_y(geom.body_length)};
  const double ex = end.x - tp.x;
  const double ey = end.y - tp.y;
  const double s = std::clamp(((p.x - tp.x) * ex + (p.y - tp.y) * ey) / (ex * ex + ey * ey), 0.0, 1.0);
  const double flank = distance(p, {tp.x + s * ex, tp.y + s * ey});
  return std::min(arc, flank);
}

namespace {

bool inside_solid(const ConeGeometry& geom, Point p) {
  if (distance(p, geom.nose_center()) < geom.nose_radius) return true;
  return p.x > geom.tangency_point().x && p.x <= geom.body_length && p.y < geom.flank_y(p.x);
}

}  // namespace

bool contains(const ConeGeometry& geom, Point p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  if (p.x < geom.x_min() || p.x > geom.x_max() || p.y < 0.0 || p.y > geom.y_max()) return false;
  return !inside_solid(geom, p);
}

double domain_violation(const ConeGeometry& geom, Point p) {
  double v = std::max({0.0, geom.x_min() - p.x, p.x - geom.x_max(), -p.y, p.y - geom.y_max()});
  if (inside_solid(geom, p)) v = std::max(v, wall_distance(geom, p));
  return v;
}

BoundaryLabel classify(const ConeGeometry& geom, Point p, double tol) {
  const double v = domain_violation(geom, p);
  if (!(v <= tol)) {
    throw std::out_of_range("classify: point (" + format_double(p.x) + ", " + format_double(p.y) +
                            ") is " + format_double(v) + " m outside the domain");
  }
  if (wall_distance(geom, p) <= tol) return BoundaryLabel::Wall;
  if (p.y <= tol && p.x < 0.0) return BoundaryLabel::Symmetry;
  if (p.x <= geom.x_min() + tol || p.y >= geom.y_max() - tol) return BoundaryLabel::Inflow;
  if (p.x >= geom.x_max() - tol) return BoundaryLabel::Outflow;
  return BoundaryLabel::Interior;
}

DenseMatrix coordinates(const Mesh& mesh) {
  DenseMatrix m(mesh.size(), 2);
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    m(i, 0) = mesh.points[i].x;
    m(i, 1) = mesh.points[i].y;
  }
  return m;
}

std::uint64_t mesh_fingerprint(const Mesh& mesh) {
  std::string bytes;
  bytes.reserve(mesh.size() * 16);
  for (const Point& p : mesh.points) {
    for (double v : {p.x, p.y}) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i, bits >>= 8) bytes.push_back(static_cast<char>(bits & 0xff));
    }
  }
  return fnv1a(bytes);
}

namespace {

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  const double inv = 1.0 / static_cast<double>(base);
  double scale = inv;
  double value = 0.0;
  while (index > 0) {
    value += static_cast<double>(index % base) * scale;
    index /= base;
    scale *= inv;
  }
  return value;
}

double rotate(double u, double shift) {
  const double v = u + shift;
  return v >= 1.0 ? v - 1.0 : v;
}

constexpr std::uint64_t kMaxRejections = 1'000'000;

// Halton stream in bases (b0, b1) over a rectangle, Cranley-Patterson shifted.
class HaltonStream {
 public:
  HaltonStream(std::uint64_t b0, std::uint64_t b1, double s0, double s1, Point lo, Point hi)
      : b0_(b0), b1_(b1), s0_(s0), s1_(s1), lo_(lo), hi_(hi) {}

  Point next() {
    ++index_;
    return {lo_.x + (hi_.x - lo_.x) * rotate(radical_inverse(index_, b0_), s0_),
            lo_.y + (hi_.y - lo_.y) * rotate(radical_inverse(index_, b1_), s1_)};
  }

 private:
  std::uint64_t b0_, b1_;
  double s0_, s1_;
  Point lo_, hi_;
  std::uint64_t index_ = 0;
};

template <class Accept>
void draw(HaltonStream& stream, std::size_t count, Accept accept, std::vector<Point>& out,
          const char* region) {
  std::uint64_t misses = 0;
  for (std::size_t taken = 0; taken < count;) {
    const Point p = stream.next();
    if (accept(p)) {
      out.push_back(p);
      ++taken;
      misses = 0;
    } else if (++misses >= kMaxRejections) {
      throw std::runtime_error(std::string("sample_mesh: ") + region + " region rejected " +
                               std::to_string(kMaxRejections) + " consecutive candidates");
    }
  }
}

}  // namespace

Mesh sample_mesh(const ConeGeometry& geom, std::size_t n_points, std::uint64_t seed) {
  if (n_points == 0) throw std::invalid_argument("sample_mesh: n_points must be at least 1");
  geom.validate();
  Rng rng(seed);
  const double shifts[4] = {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};

  const double band = wall_band_width(geom);
  const auto n_band = static_cast<std::size_t>(std::llround(kWallBandFraction * static_cast<double>(n_points)));

  Mesh mesh;
  mesh.points.reserve(n_points);
  HaltonStream bulk(2, 3, shifts[0], shifts[1], {geom.x_min(), 0.0}, {geom.x_max(), geom.y_max()});
  draw(bulk, n_points - n_band,
       [&](Point p) { return contains(geom, p) && wall_distance(geom, p) > band; }, mesh.points,
       "bulk");

  const double band_top = std::min(geom.y_max(), geom.flank_y(geom.body_length) + band);
  HaltonStream near(5, 7, shifts[2], shifts[3], {geom.x_min(), 0.0}, {geom.x_max(), band_top});
  draw(near, n_band, [&](Point p) { return contains(geom, p) && wall_distance(geom, p) <= band; },
       mesh.points, "wall band");
  return mesh;
}

}  // namespace nbfrom
