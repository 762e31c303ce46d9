#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "hpol/alpha.hpp"
#include "hpol/defaults.hpp"
#include "hpol/errors.hpp"
#include "hpol/homology.hpp"
#include "hpol/model.hpp"

namespace hpol {

struct LevelSample {
  Vec2 c;
  double alpha_value = 0.0;
  double ray_angle = 0.0;
  Vec2 normal{1.0, 0.0};  // outer normal from secants of adjacent samples
  RationalityVerdict rationality;
  double coverage = -1.0;  // aubry coverage, filled by classification
  int case_label = 0;      // 1|2|3 after classify_case
  int face_id = -1;        // index into LevelCurveSample::faces or -1
};

struct FaceInterval {
  int first = 0;  // sample index range (cyclic) sharing the normal
  int last = 0;
  Vec2 normal{1.0, 0.0};
  int length = 0;
};

struct LevelCurveSample {
  double energy = 0.0;
  Vec2 c_min{0.0, 0.0};
  double min_alpha = 0.0;
  std::vector<LevelSample> samples;
  std::vector<FaceInterval> faces;
  bool normals_cyclically_monotone = true;
};

struct LevelCurveOptions {
  double level_tol = defaults::kLevelTol;
  double angular_tol = defaults::kAngularTol;
  int rationality_cap = defaults::kRationalityCap;
  int face_floor = defaults::kFaceFloor;
  double coverage_tol = 1e-6;  // residual tolerance for the aubry proxy
  int max_radius = 64;
};

// Coordinate descent on c for the minimum of alpha; metric families have the
// minimum at c = 0 but the search is cheap enough to run unconditionally.
inline std::pair<Vec2, double> minimize_alpha(const TonelliModel& model, int n,
                                              Vec2 start = {0.0, 0.0}) {
  Vec2 c = start;
  double val = alpha_upper_auto(model, c, n).value;
  double step = 0.25;
  while (step > 1e-4) {
    bool improved = false;
    for (const Vec2 dir : {Vec2{1, 0}, Vec2{-1, 0}, Vec2{0, 1}, Vec2{0, -1}}) {
      const Vec2 trial = c + dir * step;
      const double v = alpha_upper_auto(model, trial, n).value;
      if (v < val - 1e-12) {
        c = trial;
        val = v;
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }
  return {c, val};
}

// alpha(c_min + r dir) = e along the ray: bracketed bisection, with secant
// steps scaled by the degree-2 growth of metric alphas to cut the call count.
inline double level_radius(const TonelliModel& model, const Vec2& c_min, const Vec2& dir,
                           double e, int n, double level_tol, AlphaUpperResult* out = nullptr,
                           const GridField* warm = nullptr, double r_guess = 0.0) {
  double lo = 0.0, hi = 0.0;
  double r_try = r_guess > 0.0 ? r_guess : 1.0;
  AlphaUpperResult res = alpha_upper_auto(model, c_min + dir * r_try, n, warm);
  double val = res.value;
  int guard = 0;
  while (val < e && !(hi > 0.0)) {
    lo = r_try;
    const double scale = val > 1e-12 ? std::sqrt(e / val) : 2.0;
    r_try *= std::clamp(scale, 1.25, 4.0);
    if (++guard > 60) throw NumericError("level_radius: bracket failure (superlinearity)");
    res = alpha_upper_auto(model, c_min + dir * r_try, n, &res.u);
    val = res.value;
  }
  if (val >= e) hi = r_try;
  double r_cur = r_try;
  guard = 0;
  while (std::abs(val - e) > level_tol) {
    if (++guard > 80) throw NumericError("level_radius: no convergence to the level");
    // homogeneity-informed secant: alpha ~ r^2 along the ray
    double next = val > 1e-12 ? r_cur * std::sqrt(e / val) : 0.5 * (lo + hi);
    if (hi > 0.0 && !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    res = alpha_upper_auto(model, c_min + dir * next, n, &res.u);
    val = res.value;
    r_cur = next;
    if (val < e) {
      lo = next;
    } else {
      hi = next;
    }
    if (hi > 0.0 && hi - lo < 1e-13) break;
  }
  if (out) *out = std::move(res);
  return r_cur;
}

namespace detail {

inline Vec2 outward_normal(const Vec2& prev, const Vec2& next, const Vec2& here,
                           const Vec2& c_min) {
  const Vec2 tangent = next - prev;
  Vec2 normal = Vec2{tangent.y, -tangent.x};  // clockwise quarter turn
  if (normal.dot(here - c_min) < 0.0) normal = -1.0 * normal;
  const double n = normal.norm();
  return n > 0.0 ? normal / n : Vec2{1.0, 0.0};
}

}  // namespace detail

// Samples of the level curve alpha^{-1}(e) on rays from the minimum, with
// secant outer normals, rationality verdicts and face runs.
inline LevelCurveSample level_curve(const TonelliModel& model, double e, int n_samples, int n,
                                    LevelCurveOptions opt = {}) {
  LevelCurveSample curve;
  curve.energy = e;
  auto [c_min, min_alpha] = minimize_alpha(model, n);
  curve.c_min = c_min;
  curve.min_alpha = min_alpha;
  if (!(e > min_alpha)) throw DomainError("level_curve: need e > min alpha");

  const GridField* warm = nullptr;
  GridField last_u;
  double r_prev = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double phi = two_pi() * i / n_samples;
    const Vec2 dir{std::cos(phi), std::sin(phi)};
    AlphaUpperResult r;
    const double radius = level_radius(model, c_min, dir, e, n, opt.level_tol, &r, warm, r_prev);
    LevelSample s;
    s.c = c_min + dir * radius;
    s.alpha_value = r.value;
    s.ray_angle = phi;
    curve.samples.push_back(std::move(s));
    last_u = r.u;
    warm = &last_u;
    r_prev = radius;
  }

  // secant normals and rationality
  const int m = n_samples;
  for (int i = 0; i < m; ++i) {
    const Vec2& prev = curve.samples[(i + m - 1) % m].c;
    const Vec2& next = curve.samples[(i + 1) % m].c;
    curve.samples[i].normal = detail::outward_normal(prev, next, curve.samples[i].c, c_min);
    curve.samples[i].rationality =
        classify_direction(curve.samples[i].normal, opt.rationality_cap, opt.angular_tol);
  }

  // cyclic monotonicity of the normal map
  double wind = 0.0;
  for (int i = 0; i < m; ++i) {
    const Vec2& a = curve.samples[i].normal;
    const Vec2& b = curve.samples[(i + 1) % m].normal;
    const double cross = a.x * b.y - a.y * b.x;
    const double dot = a.dot(b);
    const double turn = std::atan2(cross, dot);
    if (turn < -16.0 * opt.angular_tol) curve.normals_cyclically_monotone = false;
    wind += turn;
  }
  if (std::abs(wind - two_pi()) > 0.1) curve.normals_cyclically_monotone = false;

  // face runs: maximal cyclic runs of samples with a shared normal direction,
  // scanned from run boundaries so wrapped runs are counted once
  std::vector<int> run_id(m, -1);
  auto same_dir = [&](const Vec2& a, const Vec2& b) {
    return std::abs(a.x * b.y - a.y * b.x) <= 4.0 * opt.angular_tol && a.dot(b) > 0.0;
  };
  std::vector<char> same(m, 0);
  for (int i = 0; i < m; ++i) {
    same[i] = same_dir(curve.samples[i].normal, curve.samples[(i + 1) % m].normal) ? 1 : 0;
  }
  for (int i = 0; i < m; ++i) {
    if (same[(i + m - 1) % m]) continue;  // not a run start
    int len = 1;
    int j = i;
    while (len < m && same[j]) {
      j = (j + 1) % m;
      ++len;
    }
    if (len >= opt.face_floor) {
      FaceInterval face;
      face.first = i;
      face.last = j;
      face.length = len;
      Vec2 avg{0, 0};
      for (int t = 0; t < len; ++t) avg += curve.samples[(i + t) % m].normal;
      face.normal = avg / avg.norm();
      const int id = static_cast<int>(curve.faces.size());
      for (int t = 0; t < len; ++t) run_id[(i + t) % m] = id;
      curve.faces.push_back(face);
    }
  }
  for (int i = 0; i < m; ++i) curve.samples[i].face_id = run_id[i];
  return curve;
}

// Case of Prop. "three cases" for one sample: rationality first, then the
// Mather-coverage proxy (aubry_estimate coverage ~ 1 means M(c) = T), then
// the face run. Contradictory evidence throws instead of guessing.
inline int classify_case(const TonelliModel& model, double e, LevelCurveSample& curve, int index,
                         int n, LevelCurveOptions opt = {}) {
  LevelSample& s = curve.samples[static_cast<std::size_t>(index)];
  if (s.coverage < 0.0) {
    const AlphaUpperResult r = alpha_upper_auto(model, s.c, n);
    s.coverage = aubry_estimate(model, s.c, r, opt.coverage_tol).coverage;
  }
  const bool full = s.coverage >= 1.0 - 2.0 / n;
  const bool in_face = s.face_id >= 0;
  int label = 0;
  if (!s.rationality.rational) {
    if (in_face) {
      throw ClassificationConflict("classify_case: irrational normal inside a face run");
    }
    label = 1;
  } else if (full) {
    if (in_face) {
      throw ClassificationConflict("classify_case: full Mather coverage inside a face run");
    }
    label = 2;
  } else {
    if (!in_face) {
      throw ClassificationConflict(
          "classify_case: rational normal with partial coverage but no face run");
    }
    label = 3;
  }
  s.case_label = label;
  return label;
}

// c on the level curve whose envelope normal points along target_dir, by
// bisection on the ray angle (the normal map preserves the cyclic order).
struct NormalTarget {
  Vec2 c;
  double ray_angle = 0.0;
  AlphaUpperResult alpha;
};

inline NormalTarget find_c_with_normal(const TonelliModel& model, double e, const Vec2& target,
                                       int n, double phi_lo, double phi_hi,
                                       double level_tol = defaults::kLevelTol,
                                       Vec2 c_min = {0.0, 0.0}, double r_guess = 0.0,
                                       int max_iters = 18) {
  const Vec2 t = target / target.norm();
  auto signed_angle = [&](const Vec2& normal) {
    const Vec2 u = normal / normal.norm();
    return std::atan2(t.x * u.y - t.y * u.x, t.dot(u));
  };
  NormalTarget out;
  AlphaUpperResult r;
  GridField warm;
  const GridField* warm_ptr = nullptr;
  double lo = phi_lo, hi = phi_hi;
  double radius_prev = r_guess;
  for (int it = 0; it < max_iters && hi - lo > 1e-9; ++it) {
    const double phi = 0.5 * (lo + hi);
    const Vec2 dir{std::cos(phi), std::sin(phi)};
    radius_prev = level_radius(model, c_min, dir, e, n, level_tol, &r, warm_ptr, radius_prev);
    warm = r.u;
    warm_ptr = &warm;
    const double ang = signed_angle(r.grad_c);
    if (ang < 0.0) {
      lo = phi;
    } else {
      hi = phi;
    }
  }
  const double phi = 0.5 * (lo + hi);
  const Vec2 dir{std::cos(phi), std::sin(phi)};
  const double radius = level_radius(model, c_min, dir, e, n, level_tol, &r, warm_ptr,
                                     radius_prev);
  out.c = c_min + dir * radius;
  out.ray_angle = phi;
  out.alpha = std::move(r);
  return out;
}

}  // namespace hpol
