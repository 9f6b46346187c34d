#pragma once

#include <cmath>
#include <numbers>

namespace swarmsense {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  constexpr double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }

// Unit vector, or zero when the input has (near) zero length.
inline Vec2 unit_or_zero(Vec2 v) {
  const double n = v.norm();
  if (n < 1e-12) return {};
  return v / n;
}

// Ground direction for a compass heading (degrees clockwise from north, +y = north).
inline Vec2 heading_vector(double heading_deg) {
  const double r = deg_to_rad(heading_deg);
  return {std::sin(r), std::cos(r)};
}

inline double vector_heading(Vec2 v) {
  double h = rad_to_deg(std::atan2(v.x, v.y));
  if (h < 0.0) h += 360.0;
  return h;
}

// Rotates a ground vector clockwise (compass sense) by deg.
inline Vec2 rotate_cw(Vec2 v, double deg) {
  const double r = deg_to_rad(deg);
  const double c = std::cos(r);
  const double s = std::sin(r);
  return {c * v.x + s * v.y, -s * v.x + c * v.y};
}

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(Vec3 o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(Vec3 o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr bool operator==(const Vec3&) const = default;

  constexpr double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(Vec3 o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  constexpr Vec2 xy() const { return {x, y}; }
};

// Axis-aligned ground rectangle.
struct Rect {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double area() const { return width() * height(); }
  bool contains(Vec2 p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
  bool operator==(const Rect&) const = default;
};

// Rectangle of `length` along `axis` (unit) and `width` across it.
struct OrientedBox {
  Vec2 center;
  Vec2 axis{1.0, 0.0};
  double length = 0.0;
  double width = 0.0;

  bool contains(Vec2 p) const;
  double distance_to(Vec2 p) const;
  bool operator==(const OrientedBox&) const = default;
};

inline bool OrientedBox::contains(Vec2 p) const { return distance_to(p) == 0.0; }

inline double OrientedBox::distance_to(Vec2 p) const {
  const Vec2 d = p - center;
  const Vec2 across{-axis.y, axis.x};
  const double u = std::abs(d.dot(axis)) - 0.5 * length;
  const double v = std::abs(d.dot(across)) - 0.5 * width;
  const double du = u > 0.0 ? u : 0.0;
  const double dv = v > 0.0 ? v : 0.0;
  return std::hypot(du, dv);
}

}  // namespace swarmsense
