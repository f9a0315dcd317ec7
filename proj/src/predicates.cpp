#include "grinlens/geometry.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <limits>

namespace grinlens {

namespace {

// Floating-point filters with a conservative error bound; undecided cases fall
// through to exact rational evaluation.
constexpr double kEps = std::numeric_limits<double>::epsilon();

int sign_of(const mpq_class& v) { return sgn(v); }

}  // namespace

int orient2d(Vec2 a, Vec2 b, Vec2 c) {
  const double l = (a.x - c.x) * (b.y - c.y);
  const double r = (a.y - c.y) * (b.x - c.x);
  const double det = l - r;
  const double bound = 4.0 * kEps * (std::abs(l) + std::abs(r));
  if (det > bound) return 1;
  if (-det > bound) return -1;

  const mpq_class ax(a.x), ay(a.y), bx(b.x), by(b.y), cx(c.x), cy(c.y);
  const mpq_class exact = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx);
  return sign_of(exact);
}

int incircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  const double t1 = bdx * cdy - cdx * bdy;
  const double t2 = cdx * ady - adx * cdy;
  const double t3 = adx * bdy - bdx * ady;
  const double det = alift * t1 + blift * t2 + clift * t3;
  const double permanent = alift * (std::abs(bdx * cdy) + std::abs(cdx * bdy)) +
                           blift * (std::abs(cdx * ady) + std::abs(adx * cdy)) +
                           clift * (std::abs(adx * bdy) + std::abs(bdx * ady));
  const double bound = 16.0 * kEps * permanent;
  if (det > bound) return 1;
  if (-det > bound) return -1;

  const mpq_class qdx(d.x), qdy(d.y);
  const mpq_class eax = mpq_class(a.x) - qdx, eay = mpq_class(a.y) - qdy;
  const mpq_class ebx = mpq_class(b.x) - qdx, eby = mpq_class(b.y) - qdy;
  const mpq_class ecx = mpq_class(c.x) - qdx, ecy = mpq_class(c.y) - qdy;
  const mpq_class exact = (eax * eax + eay * eay) * (ebx * ecy - ecx * eby) +
                          (ebx * ebx + eby * eby) * (ecx * eay - eax * ecy) +
                          (ecx * ecx + ecy * ecy) * (eax * eby - ebx * eay);
  return sign_of(exact);
}

Vec2 circumcenter(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 ab = b - a;
  const Vec2 ac = c - a;
  const double d = 2.0 * cross(ab, ac);
  const double ab2 = ab.squaredNorm();
  const double ac2 = ac.squaredNorm();
  return {a.x + (ac.y * ab2 - ab.y * ac2) / d, a.y + (ab.x * ac2 - ac.x * ab2) / d};
}

Vec2 closest_on_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + ab * t;
}

bool point_in_polygon(Vec2 p, std::span<const Vec2> polygon) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = polygon[i], b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

double polygon_area(std::span<const Vec2> polygon) {
  double a = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) a += cross(polygon[j], polygon[i]);
  return 0.5 * a;
}

}  // namespace grinlens
