#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace grinlens {

/// Error raised for any violated precondition or failed numerical step.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double squaredNorm() const { return x * x + y * y; }
  constexpr Vec2 mirrored() const { return {x, -y}; }
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Sign of the orientation determinant of (a, b, c), evaluated exactly.
/// Positive when c lies to the left of the directed line a->b.
int orient2d(Vec2 a, Vec2 b, Vec2 c);

/// Sign of the in-circle determinant, evaluated exactly. Positive when d lies
/// strictly inside the circle through the counter-clockwise triangle (a, b, c).
int incircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

inline double triangle_area(Vec2 a, Vec2 b, Vec2 c) { return 0.5 * cross(b - a, c - a); }

Vec2 circumcenter(Vec2 a, Vec2 b, Vec2 c);

/// Closest point to p on the closed segment [a, b].
Vec2 closest_on_segment(Vec2 p, Vec2 a, Vec2 b);

/// Crossing-number test; points on the boundary may go either way.
bool point_in_polygon(Vec2 p, std::span<const Vec2> polygon);

/// Signed area of a closed polygon given without the repeated first vertex.
double polygon_area(std::span<const Vec2> polygon);

}  // namespace grinlens
