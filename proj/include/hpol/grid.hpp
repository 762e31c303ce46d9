#pragma once

#include <cmath>
#include <vector>

#include "hpol/errors.hpp"
#include "hpol/geom.hpp"
#include "hpol/torus.hpp"

namespace hpol {

// Periodic N x N scalar field on the unit torus, value at node (i,j) for
// q = (i/N, j/N). The discrete differential uses centered differences with
// periodic wraparound at grid step 1/N.
class GridField {
 public:
  GridField() = default;
  explicit GridField(int n, double fill = 0.0) : n_(n), v_(static_cast<std::size_t>(n) * n, fill) {}

  int n() const { return n_; }
  double& at(int i, int j) { return v_[idx(i, j)]; }
  double at(int i, int j) const { return v_[idx(i, j)]; }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }

  Vec2 node(int i, int j) const {
    return {static_cast<double>(i) / n_, static_cast<double>(j) / n_};
  }

  // centered difference du at a node
  Vec2 du(int i, int j) const {
    const double s = 0.5 * n_;
    return {(at(i + 1, j) - at(i - 1, j)) * s, (at(i, j + 1) - at(i, j - 1)) * s};
  }

  // bilinear value at an arbitrary point
  double sample(const Vec2& q) const {
    const double x = reduce_mod1(q.x) * n_;
    const double y = reduce_mod1(q.y) * n_;
    const int i = static_cast<int>(std::floor(x));
    const int j = static_cast<int>(std::floor(y));
    const double fx = x - i, fy = y - j;
    return at(i, j) * (1 - fx) * (1 - fy) + at(i + 1, j) * fx * (1 - fy) +
           at(i, j + 1) * (1 - fx) * fy + at(i + 1, j + 1) * fx * fy;
  }

  // bilinear interpolation of the nodal du field
  Vec2 sample_du(const Vec2& q) const {
    const double x = reduce_mod1(q.x) * n_;
    const double y = reduce_mod1(q.y) * n_;
    const int i = static_cast<int>(std::floor(x));
    const int j = static_cast<int>(std::floor(y));
    const double fx = x - i, fy = y - j;
    const Vec2 d00 = du(i, j), d10 = du(i + 1, j), d01 = du(i, j + 1), d11 = du(i + 1, j + 1);
    return d00 * ((1 - fx) * (1 - fy)) + d10 * (fx * (1 - fy)) + d01 * ((1 - fx) * fy) +
           d11 * (fx * fy);
  }

  void normalize_mean_zero() {
    double mean = 0.0;
    for (const double x : v_) mean += x;
    mean /= static_cast<double>(v_.size());
    for (double& x : v_) x -= mean;
  }

  // discrete closedness: du integrates to zero around every plaquette
  double max_plaquette_circulation() const {
    double worst = 0.0;
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        const double curl = (du(i + 1, j).y - du(i - 1, j).y) - (du(i, j + 1).x - du(i, j - 1).x);
        worst = std::max(worst, std::abs(curl));
      }
    }
    return worst;
  }

 private:
  std::size_t idx(int i, int j) const {
    i %= n_;
    if (i < 0) i += n_;
    j %= n_;
    if (j < 0) j += n_;
    return static_cast<std::size_t>(i) * n_ + j;
  }

  int n_ = 0;
  std::vector<double> v_;
};

}  // namespace hpol
