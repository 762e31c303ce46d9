#pragma once

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <limits>

namespace hpol {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  constexpr double norm2() const { return x * x + y * y; }
  // counterclockwise quarter turn
  constexpr Vec2 perp() const { return {-y, x}; }
  double angle() const { return std::atan2(y, x); }

  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Symmetric 2x2 matrix, used for metric tensors and momentum Hessians.
struct Mat2 {
  double xx = 1.0;
  double xy = 0.0;
  double yy = 1.0;

  constexpr Mat2() = default;
  constexpr Mat2(double xx_, double xy_, double yy_) : xx(xx_), xy(xy_), yy(yy_) {}

  static constexpr Mat2 identity() { return {1.0, 0.0, 1.0}; }
  static constexpr Mat2 diag(double a, double b) { return {a, 0.0, b}; }

  constexpr double det() const { return xx * yy - xy * xy; }
  constexpr Vec2 apply(const Vec2& v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }
  constexpr double quad(const Vec2& v) const { return v.dot(apply(v)); }

  constexpr Mat2 inverse() const {
    const double d = det();
    return {yy / d, -xy / d, xx / d};
  }

  double min_eigenvalue() const {
    const double tr = xx + yy;
    const double gap = std::sqrt((xx - yy) * (xx - yy) + 4.0 * xy * xy);
    return 0.5 * (tr - gap);
  }

  bool positive_definite() const { return xx > 0.0 && det() > 0.0; }
};

inline constexpr double two_pi() { return 6.283185307179586476925286766559; }

// Deterministic uniform generator. std::uniform_real_distribution is
// implementation-defined, which breaks bit-identical reruns of a config.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

 private:
  std::uint64_t state_;
};

}  // namespace hpol
