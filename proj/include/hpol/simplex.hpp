#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "hpol/errors.hpp"

namespace hpol {

// Small dense two-phase tableau simplex, maximization form.
// Rows may be '<', '=', '>'; variables are nonnegative.
struct LpProblem {
  int n_vars = 0;
  std::vector<double> objective;  // size n_vars, maximize
  struct Row {
    std::vector<std::pair<int, double>> coeffs;  // sparse (var, coeff)
    char type = '<';
    double rhs = 0.0;
  };
  std::vector<Row> rows;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  double value = 0.0;
  std::vector<double> x;      // primal solution, size n_vars
  std::vector<double> duals;  // one multiplier per row
};

namespace detail {

class SimplexTableau {
 public:
  explicit SimplexTableau(const LpProblem& p) : p_(p) {
    const int m = static_cast<int>(p.rows.size());
    // column layout: [structural | slack/surplus | artificial], then rhs
    n_struct_ = p.n_vars;
    n_slack_ = 0;
    n_art_ = 0;
    for (const auto& r : p.rows) {
      if (r.type == '<' || r.type == '>') ++n_slack_;
      if (r.type == '=' || r.type == '>') ++n_art_;
    }
    n_total_ = n_struct_ + n_slack_ + n_art_;
    tab_.assign(m, std::vector<double>(n_total_ + 1, 0.0));
    basis_.assign(m, -1);
    init_col_.assign(m, -1);

    int slack = n_struct_;
    int art = n_struct_ + n_slack_;
    art_begin_ = art;
    for (int i = 0; i < m; ++i) {
      const auto& r = p.rows[i];
      const double sgn = r.rhs < 0.0 ? -1.0 : 1.0;  // keep rhs nonnegative
      for (const auto& [j, a] : r.coeffs) tab_[i][j] = sgn * a;
      tab_[i][n_total_] = sgn * r.rhs;
      char type = r.type;
      if (sgn < 0.0 && type != '=') type = (type == '<') ? '>' : '<';
      if (type == '<') {
        tab_[i][slack] = 1.0;
        basis_[i] = slack;
        init_col_[i] = slack;
        ++slack;
      } else if (type == '>') {
        tab_[i][slack] = -1.0;
        ++slack;
        tab_[i][art] = 1.0;
        basis_[i] = art;
        init_col_[i] = art;
        ++art;
      } else {
        tab_[i][art] = 1.0;
        basis_[i] = art;
        init_col_[i] = art;
        ++art;
      }
    }
  }

  LpResult solve(long max_iters) {
    const int m = static_cast<int>(tab_.size());
    LpResult res;

    // phase 1: minimize sum of artificials
    if (n_art_ > 0) {
      std::vector<double> cost(n_total_, 0.0);
      for (int j = art_begin_; j < n_total_; ++j) cost[j] = -1.0;  // maximize -sum(art)
      const LpStatus s1 = run(cost, max_iters, /*allow_art=*/true);
      if (s1 == LpStatus::iteration_limit) return res;
      double art_sum = 0.0;
      for (int i = 0; i < m; ++i)
        if (basis_[i] >= art_begin_) art_sum += tab_[i][n_total_];
      if (art_sum > 1e-7) {
        res.status = LpStatus::infeasible;
        return res;
      }
      // drive remaining degenerate artificials out of the basis when possible
      for (int i = 0; i < m; ++i) {
        if (basis_[i] < art_begin_) continue;
        for (int j = 0; j < art_begin_; ++j) {
          if (std::abs(tab_[i][j]) > 1e-9) {
            pivot(i, j);
            break;
          }
        }
      }
    }

    // phase 2
    std::vector<double> cost(n_total_, 0.0);
    for (int j = 0; j < n_struct_; ++j) cost[j] = p_.objective[j];
    const LpStatus s2 = run(cost, max_iters, /*allow_art=*/false);
    res.status = s2;
    if (s2 != LpStatus::optimal) return res;

    res.x.assign(n_struct_, 0.0);
    for (int i = 0; i < m; ++i) {
      if (basis_[i] < n_struct_) res.x[basis_[i]] = tab_[i][n_total_];
    }
    res.value = 0.0;
    for (int j = 0; j < n_struct_; ++j) res.value += p_.objective[j] * res.x[j];
    // duals from the initial identity block: y = c_B B^{-1}
    res.duals.assign(m, 0.0);
    for (int i = 0; i < m; ++i) {
      double y = 0.0;
      for (int r = 0; r < m; ++r) {
        const int b = basis_[r];
        if (b < n_struct_ && cost[b] != 0.0) y += cost[b] * tab_[r][init_col_[i]];
      }
      // the initial column of a '>' row slack is -e_i; init_col_ stores the
      // artificial for those rows, which is +e_i, so no sign fix is needed
      res.duals[i] = y;
    }
    return res;
  }

 private:
  LpStatus run(const std::vector<double>& cost, long max_iters, bool allow_art) {
    const int m = static_cast<int>(tab_.size());
    long degenerate_streak = 0;
    for (long it = 0; it < max_iters; ++it) {
      // reduced costs: choose entering column (Dantzig, Bland under stalling)
      int enter = -1;
      double best = 1e-9;
      const bool bland = degenerate_streak > 2L * m;
      const int limit = allow_art ? n_total_ : art_begin_;
      for (int j = 0; j < limit; ++j) {
        double z = 0.0;
        for (int i = 0; i < m; ++i) {
          const double c_b = cost[basis_[i]];
          if (c_b != 0.0) z += c_b * tab_[i][j];
        }
        const double rc = cost[j] - z;
        if (rc > (bland ? 1e-9 : best)) {
          enter = j;
          if (bland) break;
          best = rc;
        }
      }
      if (enter < 0) return LpStatus::optimal;

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        if (tab_[i][enter] > 1e-11) {
          const double ratio = tab_[i][n_total_] / tab_[i][enter];
          if (ratio < best_ratio - 1e-12 ||
              (bland && std::abs(ratio - best_ratio) <= 1e-12 && leave >= 0 &&
               basis_[i] < basis_[leave])) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return LpStatus::unbounded;
      degenerate_streak = (best_ratio < 1e-11) ? degenerate_streak + 1 : 0;
      pivot(leave, enter);
    }
    return LpStatus::iteration_limit;
  }

  void pivot(int row, int col) {
    const int m = static_cast<int>(tab_.size());
    const double piv = tab_[row][col];
    for (double& v : tab_[row]) v /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      const double f = tab_[i][col];
      if (f == 0.0) continue;
      auto& ri = tab_[i];
      const auto& rp = tab_[row];
      for (int j = 0; j <= n_total_; ++j) ri[j] -= f * rp[j];
    }
    basis_[row] = col;
  }

  const LpProblem& p_;
  int n_struct_ = 0, n_slack_ = 0, n_art_ = 0, n_total_ = 0, art_begin_ = 0;
  std::vector<std::vector<double>> tab_;
  std::vector<int> basis_;
  std::vector<int> init_col_;
};

}  // namespace detail

inline LpResult solve_lp(const LpProblem& p, long max_iters = 200000) {
  detail::SimplexTableau t(p);
  return t.solve(max_iters);
}

}  // namespace hpol
