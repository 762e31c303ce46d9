#pragma once

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <memory>
#include <numeric>
#include <vector>

#include "hpol/alpha.hpp"
#include "hpol/defaults.hpp"
#include "hpol/errors.hpp"
#include "hpol/grid.hpp"
#include "hpol/homology.hpp"
#include "hpol/model.hpp"
#include "hpol/section.hpp"

namespace hpol {

// Best rational approximation v ~ c with a common denominator l <= cap;
// returns v and l. Used to pick c0 = c - v with l(c - c0) integral.
inline std::pair<Vec2, int> rational_shift(const Vec2& c, int cap = defaults::kRationalityCap) {
  double best_err = std::numeric_limits<double>::infinity();
  Vec2 best{0, 0};
  int best_l = 1;
  for (int l = 1; l <= cap; ++l) {
    const double p1 = std::round(c.x * l), p2 = std::round(c.y * l);
    const double err = std::max(std::abs(c.x - p1 / l), std::abs(c.y - p2 / l));
    if (err < best_err - 1e-15) {
      best_err = err;
      best = Vec2{p1 / l, p2 / l};
      best_l = l;
    }
  }
  return {best, best_l};
}

// c0 with alpha(c0) < e and c - c0 a small integer vector: integer shifts
// keep the section's intersection class (and hence tau) small. Falls back to
// the best rational approximation of c itself when no unit-ball shift lands
// inside the sublevel set.
inline std::pair<Vec2, int> choose_base_cohomology(const TonelliModel& model, const Vec2& c,
                                                   double e, int n) {
  static const Vec2 shifts[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1},
                                {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  for (const Vec2& d : shifts) {
    const Vec2 c0 = c - d;
    try {
      if (alpha_upper_auto(model, c0, n).value < e - 1e-6) return {c0, 1};
    } catch (const NumericError&) {
    }
  }
  const auto [v, l] = rational_shift(c);
  return {c - v, l};
}

namespace detail {

// One traced level-set component of the lifted circle map Theta.
struct TracedLoop {
  std::vector<Vec2> points;   // reduced representatives, consecutive short arcs
  HomologyClass homology{0, 0};
  double min_grad = 0.0;
};

// Lifted theta values at the nodes of the cell with base node (i,j):
// corners 00,10,11,01. phi is the periodic part, d the degree vector.
class ThetaField {
 public:
  ThetaField(const GridField& phi, const Vec2& d) : phi_(phi), d_(d), n_(phi.n()) {}

  double corner(int i, int j) const {
    return d_.x * static_cast<double>(i) / n_ + d_.y * static_cast<double>(j) / n_ +
           phi_.at(i, j);
  }
  int n() const { return n_; }
  const Vec2& degree() const { return d_; }

  double lifted(const Vec2& q) const { return d_.dot(q) + phi_.sample(q); }
  Vec2 gradient(const Vec2& q) const { return d_ + phi_.sample_du(q); }

 private:
  const GridField& phi_;
  Vec2 d_;
  int n_;
};

// Walk the level set {theta mod 1} through grid cells. Crossing identity on
// an edge is (edge node, direction, integer level in the edge's own frame);
// wrapping past the seam shifts the level by the degree component.
class ContourTracer {
 public:
  ContourTracer(const ThetaField& f, double theta) : f_(f), theta_(theta), n_(f.n()) {}

  std::vector<TracedLoop> trace() {
    std::vector<TracedLoop> loops;
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        for (int dir = 0; dir < 2; ++dir) {
          for (const auto& [lvl, t] : edge_crossings(i, j, dir)) {
            if (visited_.count(key(i, j, dir, lvl))) continue;
            loops.push_back(walk(i, j, dir, lvl));
          }
        }
      }
    }
    return loops;
  }

 private:
  using Key = std::tuple<int, int, int, long>;

  static Key key(int i, int j, int dir, long lvl) { return {i, j, dir, lvl}; }

  // crossings of theta + Z on the edge from node (i,j) along dir (0: +x, 1: +y),
  // expressed in the frame of node (i,j)
  std::vector<std::pair<long, double>> edge_crossings(int i, int j, int dir) const {
    const double a = f_.corner(i, j);
    const double b = dir == 0 ? f_.corner(i + 1, j) : f_.corner(i, j + 1);
    std::vector<std::pair<long, double>> out;
    if (a == b) return out;
    const double lo = std::min(a, b), hi = std::max(a, b);
    for (double lv = std::floor(lo - theta_) + 1.0 + theta_; lv <= hi; lv += 1.0) {
      if (lv <= lo) continue;
      const double t = (lv - a) / (b - a);
      out.emplace_back(std::lround(lv - theta_), t);
    }
    return out;
  }

  double crossing_t(int i, int j, int dir, long lvl) const {
    const double a = f_.corner(i, j);
    const double b = dir == 0 ? f_.corner(i + 1, j) : f_.corner(i, j + 1);
    return (theta_ + static_cast<double>(lvl) - a) / (b - a);
  }

  Vec2 edge_point(int i, int j, int dir, double t) const {
    const double x = (static_cast<double>(i) + (dir == 0 ? t : 0.0)) / n_;
    const double y = (static_cast<double>(j) + (dir == 1 ? t : 0.0)) / n_;
    return {x, y};
  }

  // edges of cell (ci,cj): bottom H, right V, top H, left V, each with the
  // level shift from the cell frame into the edge's own canonical frame
  struct CellEdge {
    int i, j, dir;
    long shift;  // level_in_edge_frame = level_in_cell_frame + shift
  };

  std::array<CellEdge, 4> cell_edges(int ci, int cj) const {
    const long dx = std::lround(f_.degree().x);
    const long dy = std::lround(f_.degree().y);
    std::array<CellEdge, 4> e;
    e[0] = {ci, cj, 0, 0};  // bottom
    e[1] = {(ci + 1) % n_, cj, 1, (ci + 1 == n_) ? -dx : 0};
    e[2] = {ci, (cj + 1) % n_, 0, (cj + 1 == n_) ? -dy : 0};
    e[3] = {ci, cj, 1, 0};  // left
    return e;
  }

  // corner values of cell (ci,cj) in the cell frame
  std::array<double, 4> cell_corners(int ci, int cj) const {
    return {f_.corner(ci, cj), f_.corner(ci + 1, cj), f_.corner(ci + 1, cj + 1),
            f_.corner(ci, cj + 1)};
  }

  // which of the 4 edges carries a crossing of the cell-frame level
  std::array<bool, 4> crossing_mask(const std::array<double, 4>& c, double level) const {
    const bool s0 = c[0] > level, s1 = c[1] > level, s2 = c[2] > level, s3 = c[3] > level;
    return {s0 != s1, s1 != s2, s3 != s2, s0 != s3};
  }

  TracedLoop walk(int i0, int j0, int dir0, long lvl0) {
    TracedLoop loop;
    double min_grad = std::numeric_limits<double>::infinity();

    int ei = i0, ej = j0, edir = dir0;
    long elvl = lvl0;
    // enter the cell that has this edge as bottom/left
    int ci = ei, cj = ej;
    long cell_lvl = elvl;

    const int max_steps = 8 * n_ * n_;
    for (int step = 0; step < max_steps; ++step) {
      visited_.insert(key(ei, ej, edir, elvl));
      const double t = crossing_t(ei, ej, edir, elvl);
      const Vec2 pt = edge_point(ei, ej, edir, t);
      loop.points.push_back(pt);
      min_grad = std::min(min_grad, f_.gradient(pt).norm());

      // find the exit edge of the current cell
      const auto corners = cell_corners(ci, cj);
      const double level = theta_ + static_cast<double>(cell_lvl);
      auto mask = crossing_mask(corners, level);
      const auto edges = cell_edges(ci, cj);
      // locate the entering edge among the cell's edges
      int enter = -1;
      for (int k = 0; k < 4; ++k) {
        if (edges[k].i == ei && edges[k].j == ej && edges[k].dir == edir &&
            edges[k].shift + cell_lvl == elvl) {
          enter = k;
          break;
        }
      }
      if (enter < 0) break;  // inconsistent walk; abandon this loop
      mask[enter] = false;
      int exit = -1;
      int crossings = 0;
      for (int k = 0; k < 4; ++k)
        if (mask[k]) {
          ++crossings;
          if (exit < 0) exit = k;
        }
      if (exit < 0) break;
      if (crossings > 1) {
        // saddle cell: pair the entering edge with the exit on the same side
        // of the center value
        const double center = 0.25 * (corners[0] + corners[1] + corners[2] + corners[3]);
        const bool center_hi = center > level;
        // edges adjacent to the entering edge's positive corner side; use the
        // simple rule: walk to the edge that shares the corner with matching sign
        static const int adj[4][2] = {{3, 1}, {0, 2}, {3, 1}, {0, 2}};
        const int cand1 = adj[enter][0], cand2 = adj[enter][1];
        if (mask[cand1] && mask[cand2]) {
          exit = center_hi == (corners[(enter + 1) % 4] > level) ? cand2 : cand1;
        } else if (mask[cand1]) {
          exit = cand1;
        } else if (mask[cand2]) {
          exit = cand2;
        }
      }

      // move: the exit edge in canonical frame
      const CellEdge out_edge = edges[exit];
      ei = out_edge.i;
      ej = out_edge.j;
      edir = out_edge.dir;
      elvl = cell_lvl + out_edge.shift;
      if (visited_.count(key(ei, ej, edir, elvl)) &&
          !(ei == i0 && ej == j0 && edir == dir0 && elvl == lvl0)) {
        break;  // merged into an already traced loop
      }
      if (ei == i0 && ej == j0 && edir == dir0 && elvl == lvl0) {
        break;  // closed
      }

      // the neighbor cell across the exit edge
      const long dx = std::lround(f_.degree().x);
      const long dy = std::lround(f_.degree().y);
      if (exit == 0) {  // bottom edge: neighbor below
        cj = (cj + n_ - 1) % n_;
        cell_lvl = elvl + ((cj + 1 == n_) ? dy : 0);
      } else if (exit == 1) {  // right edge: neighbor right
        ci = (ci + 1) % n_;
        cell_lvl = elvl;  // edge is the neighbor's left edge, same frame
      } else if (exit == 2) {  // top edge: neighbor above
        cj = (cj + 1) % n_;
        cell_lvl = elvl;
      } else {  // left edge: neighbor left
        ci = (ci + n_ - 1) % n_;
        cell_lvl = elvl + ((ci + 1 == n_) ? dx : 0);
      }
    }
    loop.min_grad = min_grad;

    // winding from wrapped deltas
    Vec2 wind{0, 0};
    for (std::size_t k = 0; k < loop.points.size(); ++k) {
      wind += torus_delta(loop.points[k], loop.points[(k + 1) % loop.points.size()]);
    }
    loop.homology = HomologyClass{std::round(wind.x), std::round(wind.y)};
    return loop;
  }

  const ThetaField& f_;
  double theta_;
  int n_;
  std::set<Key> visited_;
};

}  // namespace detail

struct SectionBuildReport {
  SectionCurve section;
  double theta = 0.0;
  int l = 1;
  Vec2 c0{0, 0};
  double min_transversality = 0.0;  // min dTheta.F over the Aubry samples
  int components = 0;
};

// Theta-based global section: level set of Theta = l(c-c0) q + l(w - u0)
// mod 1, choosing the regular level that maximizes the minimal gradient
// magnitude and the component whose intersection class pairs positively
// with rho. Transversality dTheta.F > 0 is verified on the Aubry samples.
inline SectionBuildReport construct_section(const TonelliModel& model, const Vec2& c,
                                            const Vec2& c0, const AlphaUpperResult& alpha_c,
                                            const AlphaUpperResult& alpha_c0, const Vec2& rho,
                                            const std::vector<PhaseState>& aubry_lifted,
                                            int l) {
  const Vec2 d{(c.x - c0.x) * l, (c.y - c0.y) * l};
  if (std::abs(d.x - std::round(d.x)) > 1e-6 || std::abs(d.y - std::round(d.y)) > 1e-6)
    throw DomainError("construct_section: l(c - c0) is not an integer class");
  const Vec2 d_int{std::round(d.x), std::round(d.y)};
  const int n = alpha_c.u.n();
  if (alpha_c0.u.n() != n) throw DomainError("construct_section: grid sizes differ");
  if (std::max(std::abs(d_int.x), std::abs(d_int.y)) >= n / 2)
    throw ConstructionError("construct_section: grid too coarse for the degree vector");

  // periodic part l(w - u0)
  auto phi = std::make_shared<GridField>(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      phi->at(i, j) = l * (alpha_c.u.at(i, j) - alpha_c0.u.at(i, j));

  detail::ThetaField field(*phi, d_int);

  // level selection: discrete regular-value detection
  double best_score = -1.0;
  detail::TracedLoop best_loop;
  double best_theta = 0.0;
  int best_components = 0;
  for (int cand = 0; cand < 16; ++cand) {
    // golden-ratio offset keeps candidate levels off the grid-node values
    const double theta = reduce_mod1((cand + 0.61803398874989) / 16.0);
    detail::ContourTracer tracer(field, theta);
    const auto loops = tracer.trace();
    for (const auto& loop : loops) {
      if (loop.points.size() < 8) continue;
      HomologyClass sigma = loop.homology;
      if (content(sigma) == 0) continue;
      // orientation convention: tangent = ccw quarter turn of grad Theta
      const Vec2 t0 = torus_delta(loop.points[0], loop.points[1]);
      const Vec2 g0 = field.gradient(loop.points[0]);
      const bool flip = g0.x * t0.y - g0.y * t0.x < 0.0;
      if (flip) sigma = HomologyClass{-sigma.h1, -sigma.h2};
      const double pairing = rho.x * sigma.h2 - rho.y * sigma.h1;
      if (pairing <= 0.0) continue;
      if (loop.min_grad > best_score) {
        best_score = loop.min_grad;
        best_loop = loop;
        if (flip) std::reverse(best_loop.points.begin(), best_loop.points.end());
        best_loop.homology = sigma;
        best_theta = theta;
        best_components = static_cast<int>(loops.size());
      }
    }
  }
  if (best_score < 0.0)
    throw ConstructionError("construct_section: no component with sigma.rho > 0");

  // transversality of F(q) = dH/dp(q, c + dw) on the Aubry samples
  double min_trans = std::numeric_limits<double>::infinity();
  for (const auto& s : aubry_lifted) {
    const Vec2 q = s.q.vec();
    const Vec2 F = model.grad_p(q, s.p);
    const double trans = field.gradient(q).dot(F);
    min_trans = std::min(min_trans, trans);
  }
  if (!aubry_lifted.empty() && min_trans <= 0.0)
    throw TransversalityError("construct_section: dTheta.F <= 0 at an Aubry sample");

  SectionBuildReport rep;
  rep.theta = best_theta;
  rep.l = l;
  rep.c0 = c0;
  rep.min_transversality = aubry_lifted.empty() ? 0.0 : min_trans;
  rep.components = best_components;

  SectionCurve& sec = rep.section;
  sec.theta0 = best_theta;
  sec.degree = d_int;
  sec.theta_hat = [phi, d_int](const Vec2& q) { return d_int.dot(q) + phi->sample(q); };
  sec.homology = best_loop.homology;
  sec.sigma = best_loop.homology;
  sec.polyline = best_loop.points;
  sec.arclen.resize(sec.polyline.size());
  double total = 0.0;
  for (std::size_t k = 0; k < sec.polyline.size(); ++k) {
    sec.arclen[k] = total;
    total += torus_delta(sec.polyline[k], sec.polyline[(k + 1) % sec.polyline.size()]).norm();
  }
  sec.perimeter = total;
  for (double& s : sec.arclen) s /= total;
  return rep;
}

// polyline simplicity: no two non-adjacent segments intersect
inline bool polyline_is_simple(const SectionCurve& sec) {
  const auto& pts = sec.polyline;
  const std::size_t n = pts.size();
  auto seg = [&](std::size_t k) {
    const Vec2 a = pts[k];
    return std::pair<Vec2, Vec2>{a, a + torus_delta(a, pts[(k + 1) % n])};
  };
  auto intersects = [](const std::pair<Vec2, Vec2>& s1, const std::pair<Vec2, Vec2>& s2) {
    auto cross = [](const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; };
    const Vec2 r = s1.second - s1.first;
    const Vec2 s = s2.second - s2.first;
    const double denom = cross(r, s);
    if (std::abs(denom) < 1e-15) return false;
    const Vec2 qp = s2.first - s1.first;
    const double t = cross(qp, s) / denom;
    const double u = cross(qp, r) / denom;
    return t > 1e-9 && t < 1 - 1e-9 && u > 1e-9 && u < 1 - 1e-9;
  };
  for (std::size_t a = 0; a < n; ++a) {
    const auto sa = seg(a);
    for (std::size_t b = a + 2; b < n; ++b) {
      if (a == 0 && b == n - 1) continue;
      // place segment b in the frame of segment a by the shortest wrap
      const Vec2 b0 = sa.first + torus_delta(sa.first, pts[b]);
      const Vec2 b1 = b0 + torus_delta(pts[b], pts[(b + 1) % n]);
      if (intersects(sa, {b0, b1})) return false;
    }
  }
  return true;
}

}  // namespace hpol
