#ifndef TAMP2D_GEOMETRY_HPP_
#define TAMP2D_GEOMETRY_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace tamp2d {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Axis-aligned wall segment.
struct Segment {
  Vec2 a;
  Vec2 b;
};

inline Vec2 closest_point_on_segment(const Segment& s, const Vec2& p) {
  const Vec2 d = s.b - s.a;
  const double len2 = d.norm2();
  if (len2 <= 0.0) return s.a;
  const double t = std::clamp((p - s.a).dot(d) / len2, 0.0, 1.0);
  return s.a + t * d;
}

inline double dist_point_segment(const Vec2& p, const Segment& s) {
  return (p - closest_point_on_segment(s, p)).norm();
}

// First intersection parameter t >= 0 of ray o + t*dir with the segment,
// or +inf when they do not meet. dir is assumed unit length.
inline double ray_segment(const Vec2& o, const Vec2& dir, const Segment& s) {
  const double inf = std::numeric_limits<double>::infinity();
  const Vec2 v = s.b - s.a;
  const double denom = dir.x * v.y - dir.y * v.x;
  if (std::abs(denom) < 1e-15) return inf;
  const Vec2 w = s.a - o;
  const double t = (w.x * v.y - w.y * v.x) / denom;
  const double u = (w.x * dir.y - w.y * dir.x) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return inf;
  return t;
}

// First intersection of the ray with a circle boundary; +inf on miss.
// A ray starting inside the circle reports the exit distance.
inline double ray_circle(const Vec2& o, const Vec2& dir, const Vec2& c,
                         double r) {
  const double inf = std::numeric_limits<double>::infinity();
  const Vec2 m = o - c;
  const double b = m.dot(dir);
  const double cc = m.norm2() - r * r;
  const double disc = b * b - cc;
  if (disc < 0.0) return inf;
  const double sq = std::sqrt(disc);
  const double t0 = -b - sq;
  if (t0 >= 0.0) return t0;
  const double t1 = -b + sq;
  if (t1 >= 0.0) return t1;
  return inf;
}

inline double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

}  // namespace tamp2d

#endif  // TAMP2D_GEOMETRY_HPP_
