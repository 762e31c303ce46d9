#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hpol/defaults.hpp"
#include "hpol/errors.hpp"

namespace hpol {

using DistanceOracle = std::function<double(int, int)>;

enum class CountMethod { greedy, exact };

// (eps, horizon, count, method, witnesses) for one packing computation.
struct SeparatedSetReport {
  double eps = 0.0;
  double horizon = 0.0;
  int candidates = 0;
  int count = 0;
  CountMethod method = CountMethod::greedy;
  std::vector<int> witnesses;
};

namespace detail {

// Exact maximum independent set on <= 20 vertices by branch and bound on the
// conflict graph (edges where d < eps).
class MisSolver {
 public:
  explicit MisSolver(const std::vector<std::uint32_t>& adj) : adj_(adj), n_(static_cast<int>(adj.size())) {}

  std::uint32_t solve() {
    best_ = 0;
    best_set_ = 0;
    branch(((n_ == 32) ? ~0u : ((1u << n_) - 1u)), 0u, 0);
    return best_set_;
  }

  int best_size() const { return best_; }

 private:
  void branch(std::uint32_t candidates, std::uint32_t chosen, int size) {
    if (size + popcount(candidates) <= best_) return;
    if (candidates == 0) {
      if (size > best_) {
        best_ = size;
        best_set_ = chosen;
      }
      return;
    }
    const int v = lowest_bit(candidates);
    // include v
    branch(candidates & ~(adj_[v] | (1u << v)), chosen | (1u << v), size + 1);
    // exclude v
    branch(candidates & ~(1u << v), chosen, size);
  }

  static int popcount(std::uint32_t x) { return __builtin_popcount(x); }
  static int lowest_bit(std::uint32_t x) { return __builtin_ctz(x); }

  std::vector<std::uint32_t> adj_;
  int n_;
  int best_ = 0;
  std::uint32_t best_set_ = 0;
};

inline std::vector<std::uint32_t> conflict_graph(const DistanceOracle& d, int k, double eps) {
  std::vector<std::uint32_t> adj(k, 0u);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      if (d(i, j) < eps) {
        adj[i] |= 1u << j;
        adj[j] |= 1u << i;
      }
    }
  }
  return adj;
}

// Exact minimum cover of the candidates by closed eps-balls centered at
// candidates: branch on the uncovered element with fewest covering balls.
class CoverSolver {
 public:
  CoverSolver(const std::vector<std::uint32_t>& balls, int n) : balls_(balls), n_(n) {}

  int solve() {
    universe_ = (n_ == 32) ? ~0u : ((1u << n_) - 1u);
    best_ = n_ + 1;
    branch(universe_, 0);
    return best_;
  }

 private:
  void branch(std::uint32_t uncovered, int used) {
    if (uncovered == 0) {
      best_ = std::min(best_, used);
      return;
    }
    if (used + 1 >= best_) return;
    // element with the fewest covering balls
    int pick = -1, fewest = n_ + 1;
    for (std::uint32_t rest = uncovered; rest;) {
      const int e = __builtin_ctz(rest);
      rest &= rest - 1;
      int cnt = 0;
      for (int b = 0; b < n_; ++b)
        if (balls_[b] & (1u << e)) ++cnt;
      if (cnt < fewest) {
        fewest = cnt;
        pick = e;
      }
    }
    for (int b = 0; b < n_; ++b) {
      if (balls_[b] & (1u << pick)) branch(uncovered & ~balls_[b], used + 1);
    }
  }

  std::vector<std::uint32_t> balls_;
  int n_;
  std::uint32_t universe_ = 0;
  int best_ = 0;
};

}  // namespace detail

// Maximal eps-separated subset of the candidates.
//   greedy: scan in index order, keep a candidate iff it is >= eps from all
//           kept ones (a maximal packing, bracketed by S(2eps) and S(eps)).
//   exact:  maximum independent set of the <eps conflict graph, K <= 20.
inline SeparatedSetReport separated_count(const DistanceOracle& d, int k, double eps,
                                          CountMethod method = CountMethod::greedy,
                                          double horizon = 0.0) {
  if (k < 1) throw DomainError("separated_count: need K >= 1");
  SeparatedSetReport rep;
  rep.eps = eps;
  rep.horizon = horizon;
  rep.candidates = k;
  rep.method = method;
  if (method == CountMethod::exact) {
    if (k > defaults::kExactCountCap)
      throw DomainError("separated_count: exact method requires K <= 20");
    detail::MisSolver solver(detail::conflict_graph(d, k, eps));
    const std::uint32_t set = solver.solve();
    for (int i = 0; i < k; ++i)
      if (set & (1u << i)) rep.witnesses.push_back(i);
    rep.count = solver.best_size();
  } else {
    for (int i = 0; i < k; ++i) {
      bool keep = true;
      for (const int j : rep.witnesses) {
        if (d(i, j) < eps) {
          keep = false;
          break;
        }
      }
      if (keep) rep.witnesses.push_back(i);
    }
    rep.count = static_cast<int>(rep.witnesses.size());
  }
  return rep;
}

// Post-hoc validity pass: every chosen pair at distance >= eps.
inline bool verify_separated(const DistanceOracle& d, const SeparatedSetReport& rep) {
  for (std::size_t a = 0; a < rep.witnesses.size(); ++a)
    for (std::size_t b = a + 1; b < rep.witnesses.size(); ++b)
      if (d(rep.witnesses[a], rep.witnesses[b]) < rep.eps) return false;
  return true;
}

// Minimal number of eps-balls (centered at candidates) covering the
// candidates; exact for K <= 20, greedy upper bound otherwise.
inline int covering_count(const DistanceOracle& d, int k, double eps) {
  if (k < 1) throw DomainError("covering_count: need K >= 1");
  if (k <= defaults::kExactCountCap) {
    std::vector<std::uint32_t> balls(k, 0u);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        if (i == j || d(i, j) <= eps) balls[i] |= 1u << j;
      }
    }
    detail::CoverSolver solver(balls, k);
    return solver.solve();
  }
  // greedy set cover
  std::vector<bool> covered(k, false);
  int used = 0, remaining = k;
  while (remaining > 0) {
    int best = -1, gain = -1;
    for (int b = 0; b < k; ++b) {
      int g = 0;
      for (int j = 0; j < k; ++j)
        if (!covered[j] && (b == j || d(b, j) <= eps)) ++g;
      if (g > gain) {
        gain = g;
        best = b;
      }
    }
    for (int j = 0; j < k; ++j)
      if (!covered[j] && (best == j || d(best, j) <= eps)) {
        covered[j] = true;
        --remaining;
      }
    ++used;
  }
  return used;
}

// Finite-scale form of h_pol(f^m) = h_pol(f): any set (n,eps)-separated for
// f^m is (m(n-1)+1, eps)-separated for f, so the exact counts satisfy
// S_n^{f^m}(eps) <= S_{m(n-1)+1}^f(eps).
template <typename Point, typename Map, typename Metric>
bool property_iterate_check(const Map& f, const Metric& dist, std::vector<Point> sample, int m,
                            int n, double eps) {
  const int k = static_cast<int>(sample.size());
  if (k > defaults::kExactCountCap)
    throw DomainError("property_iterate_check: exact counts need sample <= 20");

  // forward orbits under f, long enough for both sides
  const int len = m * (n - 1) + 1;
  std::vector<std::vector<Point>> orbit(k);
  for (int i = 0; i < k; ++i) {
    orbit[i].reserve(len);
    Point x = sample[i];
    orbit[i].push_back(x);
    for (int s = 1; s < len; ++s) {
      x = f(x);
      orbit[i].push_back(x);
    }
  }
  auto dyn = [&](int i, int j, int steps, int stride) {
    double best = 0.0;
    for (int s = 0; s < steps; ++s) best = std::max(best, dist(orbit[i][s * stride], orbit[j][s * stride]));
    return best;
  };
  DistanceOracle d_fm = [&](int i, int j) { return dyn(i, j, n, m); };
  DistanceOracle d_f = [&](int i, int j) { return dyn(i, j, len, 1); };
  const int lhs = separated_count(d_fm, k, eps, CountMethod::exact).count;
  const int rhs = separated_count(d_f, k, eps, CountMethod::exact).count;
  return lhs <= rhs;
}

}  // namespace hpol
