#pragma once

#include <cmath>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hpol/alpha.hpp"
#include "hpol/defaults.hpp"
#include "hpol/errors.hpp"
#include "hpol/integrate.hpp"
#include "hpol/model.hpp"
#include "hpol/simplex.hpp"

namespace hpol {

// Discrete occupation measure on a phase grid: nq x nq position cells times
// mp shell angles; weights nonnegative with total mass 1.
struct OccupationMeasure {
  int nq = 0;
  int mp = 0;
  double angle_offset = 0.0;
  double shell_energy = 0.0;
  double h_step = 0.0;
  double slack = 0.0;
  std::vector<std::pair<int, double>> weights;  // (cell index, weight > 0)
  double mass = 0.0;
  double invariance_tv = 0.0;  // total variation of Pw - w

  int cell_of(int i, int j, int k) const { return (i * nq + j) * mp + k; }
  void split(int cell, int& i, int& j, int& k) const {
    k = cell % mp;
    const int ij = cell / mp;
    j = ij % nq;
    i = ij / nq;
  }
  Vec2 center(int cell) const {
    int i, j, k;
    split(cell, i, j, k);
    return {static_cast<double>(i) / nq, static_cast<double>(j) / nq};
  }
  double angle(int cell) const {
    int i, j, k;
    split(cell, i, j, k);
    return angle_offset + two_pi() * k / mp;
  }
};

struct AlphaLowerOptions {
  int nq = 16;
  int mp = 32;
  double h = 0.0;       // transition time step; <= 0: ~0.4 cells of travel
  double slack = 1e-9;  // per-cell invariance slack
  double shell_energy = std::numeric_limits<double>::quiet_NaN();  // NaN: alpha_upper
  double seed_time = 12.0;  // orbit-closure seeding horizon
  int max_outer = 60;
  int max_columns = 5000;
  int max_rows = 800;  // row cells (each contributes two inequality rows)
  long simplex_iters = 400000;
};

struct AlphaLowerResult {
  double value = 0.0;
  OccupationMeasure measure;
  double shell_energy = 0.0;
  int outer_iterations = 0;
  bool converged = false;  // feasible and value-stationary (or certified)
  bool certified = false;  // dual certificate: no cell prices in anywhere
};

namespace detail {

// (c - p) . dH/dp + H at a shell sample
inline double measure_objective(const TonelliModel& m, const Vec2& c, const Vec2& q,
                                const Vec2& p) {
  const Vec2 gp = m.grad_p(q, p);
  return (c - p).dot(gp) + m.hamiltonian(q, p);
}

class MeasureLp {
 public:
  MeasureLp(const TonelliModel& m, const Vec2& c, double e, const AlphaLowerOptions& opt)
      : m_(m), c_(c), e_(e), opt_(opt) {
    nq_ = opt.nq;
    mp_ = opt.mp;
    ncells_ = nq_ * nq_ * mp_;
    angle_offset_ = c.norm() > 1e-12 ? c.angle() : 0.0;
    const double v_ref = std::max(0.2, std::sqrt(2.0 * std::max(e, 1e-6)));
    h_ = opt.h > 0.0 ? opt.h : 0.4 / (nq_ * v_ref);
    shell_p_.assign(ncells_, Vec2{0, 0});
    shell_ok_.assign(ncells_, 0);
    obj_.assign(ncells_, 0.0);
    for (int cell = 0; cell < ncells_; ++cell) {
      const Vec2 q = center(cell);
      const double a = angle(cell);
      try {
        const PhaseState s =
            restrict_to_energy(m_, {TorusPoint(q), {std::cos(a), std::sin(a)}}, e_);
        shell_p_[cell] = s.p;
        shell_ok_[cell] = 1;
        obj_[cell] = measure_objective(m_, c_, q, s.p);
      } catch (const DomainError&) {
        shell_ok_[cell] = 0;
      }
    }
  }

  Vec2 center(int cell) const {
    const int ij = cell / mp_;
    return {static_cast<double>(ij / nq_) / nq_, static_cast<double>(ij % nq_) / nq_};
  }
  double angle(int cell) const {
    return angle_offset_ + two_pi() * (cell % mp_) / mp_;
  }

  // column of the one-step transition matrix: where the cell's center goes
  // under the time-h flow, spread by bilinear cell interpolation in q and
  // linear interpolation in the shell angle
  const std::vector<std::pair<int, double>>& column(int cell) {
    auto it = columns_.find(cell);
    if (it != columns_.end()) return it->second;
    std::vector<std::pair<int, double>> col;
    if (shell_ok_[cell]) {
      Vec2 q = center(cell);
      Vec2 p = shell_p_[cell];
      const int substeps = 2;
      for (int s = 0; s < substeps; ++s) flow_step(m_, q, p, h_ / substeps, e_);
      const double ang = std::atan2(p.y, p.x) - angle_offset_;
      double kf = reduce_mod1(ang / two_pi()) * mp_;
      const int k0 = static_cast<int>(std::floor(kf)) % mp_;
      const double fk = kf - std::floor(kf);
      const double xf = reduce_mod1(q.x) * nq_;
      const double yf = reduce_mod1(q.y) * nq_;
      const int i0 = static_cast<int>(std::floor(xf));
      const int j0 = static_cast<int>(std::floor(yf));
      const double fx = xf - i0, fy = yf - j0;
      auto wrap = [](int a, int n) { return ((a % n) + n) % n; };
      for (int di = 0; di <= 1; ++di) {
        for (int dj = 0; dj <= 1; ++dj) {
          for (int dk = 0; dk <= 1; ++dk) {
            const double w = (di ? fx : 1 - fx) * (dj ? fy : 1 - fy) * (dk ? fk : 1 - fk);
            if (w < 1e-14) continue;
            const int tgt = (wrap(i0 + di, nq_) * nq_ + wrap(j0 + dj, nq_)) * mp_ +
                            wrap(k0 + dk, mp_);
            col.emplace_back(tgt, w);
          }
        }
      }
    }
    return columns_.emplace(cell, std::move(col)).first->second;
  }

  AlphaLowerResult solve() {
    const double slack = std::max(0.0, opt_.slack);

    std::vector<int> order;
    for (int cell = 0; cell < ncells_; ++cell)
      if (shell_ok_[cell]) order.push_back(cell);
    if (order.empty()) throw DomainError("alpha_lower: no shell cells (energy too low)");
    std::sort(order.begin(), order.end(), [&](int a, int b) { return obj_[a] > obj_[b]; });

    // seed with the flow closure of the best cells: near-invariant mass has
    // to live along orbits, so static peaks alone make infeasible masters
    std::vector<int> cols;
    std::unordered_set<int> col_set;
    std::vector<int> rows;
    std::unordered_set<int> row_set;
    auto add_col = [&](int cell) {
      if (shell_ok_[cell] && col_set.insert(cell).second) cols.push_back(cell);
    };
    // rows are activated with the columns: a column whose own cell is
    // unconstrained lets the solver park mass on it for a whole round
    auto add_row = [&](int cell) {
      if (row_set.insert(cell).second) rows.push_back(cell);
    };
    auto add_col_with_row = [&](int cell) {
      if (!shell_ok_[cell]) return;
      if (col_set.insert(cell).second) cols.push_back(cell);
      add_row(cell);
      for (const auto& [tgt, pw] : column(cell)) add_row(tgt);
    };
    for (std::size_t t = 0; t < order.size() && t < 8; ++t) {
      add_col_with_row(order[t]);
      seed_orbit(order[t], add_col_with_row);
    }

    AlphaLowerResult out;
    out.shell_energy = e_;
    std::vector<double> w, best_w;
    double prev_value = -std::numeric_limits<double>::infinity();
    int stagnant = 0;

    for (int outer = 0; outer < opt_.max_outer; ++outer) {
      out.outer_iterations = outer + 1;
      const LpResult lp = solve_master(cols, rows, slack);
      if (lp.status == LpStatus::infeasible) {
        // the restricted support cannot spread enough; close it under the flow
        bool grew = false;
        const std::size_t cur = cols.size();
        for (std::size_t j = 0; j < cur; ++j) {
          for (const auto& [tgt, pw] : column(cols[j])) {
            if (shell_ok_[tgt] && col_set.insert(tgt).second) {
              cols.push_back(tgt);
              grew = true;
            }
          }
        }
        if (!grew) throw InfeasibleError("alpha_lower: infeasible; increase the slack");
        if (static_cast<int>(cols.size()) > opt_.max_columns)
          throw NumericError("alpha_lower: active column cap exceeded");
        continue;
      }
      if (lp.status != LpStatus::optimal)
        throw NumericError("alpha_lower: simplex failed on the master program");

      w.assign(ncells_, 0.0);
      for (std::size_t j = 0; j < cols.size(); ++j) w[cols[j]] = lp.x[j];

      // invariance violations on the support and its images
      std::unordered_map<int, double> drift;
      for (std::size_t j = 0; j < cols.size(); ++j) {
        const double wj = lp.x[j];
        if (wj <= 0.0) continue;
        drift[cols[j]] -= wj;
        for (const auto& [tgt, pw] : column(cols[j])) drift[tgt] += pw * wj;
      }
      std::vector<int> new_rows;
      for (const auto& [cell, v] : drift) {
        if (std::abs(v) > slack * (1.0 + 1e-9) + 1e-11 && !row_set.count(cell)) {
          new_rows.push_back(cell);
        }
      }

      if (new_rows.empty()) {
        // feasible for the full program: the value is a valid bound already
        const bool stationary = lp.value <= prev_value + 1e-7 * (1.0 + std::abs(lp.value));
        stagnant = stationary ? stagnant + 1 : 0;
        if (lp.value > prev_value) {
          prev_value = lp.value;
          best_w = w;
        }

        // pricing: reduced costs against the master duals
        std::unordered_map<int, double> y;
        const double y0 = lp.duals.empty() ? 0.0 : lp.duals[0];
        for (std::size_t r = 0; r < rows.size(); ++r) {
          y[rows[r]] = lp.duals[1 + 2 * r] - lp.duals[2 + 2 * r];
        }
        std::vector<std::pair<double, int>> candidates;
        for (int cell = 0; cell < ncells_; ++cell) {
          if (!shell_ok_[cell] || col_set.count(cell)) continue;
          double rc = obj_[cell] - y0;
          auto self = y.find(cell);
          if (self != y.end()) rc += self->second;
          for (const auto& [tgt, pw] : column(cell)) {
            auto it = y.find(tgt);
            if (it != y.end()) rc -= it->second * pw;
          }
          if (rc > 1e-8) candidates.emplace_back(rc, cell);
        }
        if (candidates.empty()) {
          out.converged = true;
          out.certified = true;
          out.value = lp.value;
          fill_measure(out, w, slack);
          return out;
        }
        if (stagnant >= 3 || static_cast<int>(cols.size()) > opt_.max_columns ||
            static_cast<int>(rows.size()) > opt_.max_rows) {
          out.converged = stagnant >= 3;
          out.value = prev_value;
          fill_measure(out, best_w, slack);
          return out;
        }
        std::sort(candidates.rbegin(), candidates.rend());
        for (std::size_t t = 0; t < candidates.size() && t < 48; ++t) {
          add_col_with_row(candidates[t].second);
          if (t < 4) seed_orbit(candidates[t].second, add_col_with_row);
        }
        continue;
      }

      for (const int r : new_rows) {
        add_row(r);
        add_col(r);  // let mass sit where rows bind
      }
      if (static_cast<int>(cols.size()) > opt_.max_columns ||
          static_cast<int>(rows.size()) > opt_.max_rows) {
        break;  // caps: fall through to the best feasible value seen
      }
    }
    if (!best_w.empty()) {
      out.value = prev_value;
      fill_measure(out, best_w, slack);
    } else if (!w.empty()) {
      fill_measure(out, w, slack);
    }
    return out;
  }

 private:
  // cells visited by the time-h chain started at a cell center
  template <typename AddCol>
  void seed_orbit(int cell, AddCol&& add) {
    Vec2 q = center(cell);
    Vec2 p = shell_p_[cell];
    const int steps = static_cast<int>(std::ceil(opt_.seed_time / h_));
    for (int s = 0; s < steps; ++s) {
      flow_step(m_, q, p, h_, e_);
      const double ang = std::atan2(p.y, p.x) - angle_offset_;
      const int k = static_cast<int>(std::lround(reduce_mod1(ang / two_pi()) * mp_)) % mp_;
      const int i = static_cast<int>(std::lround(reduce_mod1(q.x) * nq_)) % nq_;
      const int j = static_cast<int>(std::lround(reduce_mod1(q.y) * nq_)) % nq_;
      const int visited = (i * nq_ + j) * mp_ + k;
      add(visited);
      for (const auto& [tgt, pw] : column(visited)) add(tgt);
    }
  }

  LpResult solve_master(const std::vector<int>& cols, const std::vector<int>& rows,
                        double slack) {
    LpProblem p;
    p.n_vars = static_cast<int>(cols.size());
    p.objective.resize(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) p.objective[j] = obj_[cols[j]];

    LpProblem::Row mass;
    mass.type = '=';
    mass.rhs = 1.0;
    for (std::size_t j = 0; j < cols.size(); ++j)
      mass.coeffs.emplace_back(static_cast<int>(j), 1.0);
    p.rows.push_back(std::move(mass));

    // per-column sparse image lookup so each row assembles in O(nnz)
    std::unordered_map<int, std::vector<std::pair<int, double>>> incoming;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      for (const auto& [tgt, pw] : column(cols[j]))
        incoming[tgt].emplace_back(static_cast<int>(j), pw);
    }
    std::unordered_map<int, int> col_index;
    for (std::size_t j = 0; j < cols.size(); ++j) col_index[cols[j]] = static_cast<int>(j);

    for (const int r : rows) {
      LpProblem::Row up, dn;
      up.type = '<';
      up.rhs = slack;
      dn.type = '<';
      dn.rhs = slack;
      std::unordered_map<int, double> coeff;
      auto in = incoming.find(r);
      if (in != incoming.end())
        for (const auto& [j, pw] : in->second) coeff[j] += pw;
      auto self = col_index.find(r);
      if (self != col_index.end()) coeff[self->second] -= 1.0;
      for (const auto& [j, a] : coeff) {
        if (a == 0.0) continue;
        up.coeffs.emplace_back(j, a);
        dn.coeffs.emplace_back(j, -a);
      }
      p.rows.push_back(std::move(up));
      p.rows.push_back(std::move(dn));
    }
    return solve_lp(p, opt_.simplex_iters);
  }

  void fill_measure(AlphaLowerResult& out, const std::vector<double>& w, double slack) {
    OccupationMeasure& mu = out.measure;
    mu.nq = nq_;
    mu.mp = mp_;
    mu.angle_offset = angle_offset_;
    mu.shell_energy = e_;
    mu.h_step = h_;
    mu.slack = slack;
    std::unordered_map<int, double> drift;
    for (int cell = 0; cell < ncells_; ++cell) {
      if (w[cell] > 0.0) {
        mu.weights.emplace_back(cell, w[cell]);
        mu.mass += w[cell];
        drift[cell] -= w[cell];
        for (const auto& [tgt, pw] : column(cell)) drift[tgt] += pw * w[cell];
      }
    }
    for (const auto& [cell, v] : drift) mu.invariance_tv += std::abs(v);
  }

  const TonelliModel& m_;
  Vec2 c_;
  double e_;
  AlphaLowerOptions opt_;
  int nq_ = 0, mp_ = 0, ncells_ = 0;
  double angle_offset_ = 0.0, h_ = 0.0;
  std::vector<Vec2> shell_p_;
  std::vector<char> shell_ok_;
  std::vector<double> obj_;
  std::unordered_map<int, std::vector<std::pair<int, double>>> columns_;
};

}  // namespace detail

// Measure side of Mather's alpha: maximize the c-action over discrete
// occupation measures with per-cell invariance slack. Solved as the stated
// finite LP; rows and columns are activated lazily (violated invariance
// cells, positive-reduced-cost support cells) so the exact optimum is
// reached without instantiating the full phase grid.
inline AlphaLowerResult alpha_lower(const TonelliModel& model, const Vec2& c,
                                    AlphaLowerOptions opt = {}) {
  double e = opt.shell_energy;
  if (std::isnan(e)) {
    e = alpha_upper(model, c, std::max(32, opt.nq)).value;
  }
  detail::MeasureLp lp(model, c, e, opt);
  return lp.solve();
}

// Average of dH/dp under the measure.
inline Vec2 rotation_vector(const TonelliModel& model, const OccupationMeasure& mu) {
  Vec2 h{0.0, 0.0};
  for (const auto& [cell, w] : mu.weights) {
    const Vec2 q = mu.center(cell);
    const double a = mu.angle(cell);
    const PhaseState s = restrict_to_energy(model, {TorusPoint(q), {std::cos(a), std::sin(a)}},
                                            mu.shell_energy);
    h += model.grad_p(q, s.p) * w;
  }
  return h;
}

// Unwrapped displacement over elapsed time.
inline Vec2 rotation_vector(const Trajectory& traj) {
  if (traj.t_final <= 0.0) throw DomainError("rotation_vector: empty trajectory");
  return traj.winding / traj.t_final;
}

// Support cells above a fraction of the peak weight, projected to positions.
inline std::vector<TorusPoint> measure_support(const OccupationMeasure& mu, double frac = 0.05) {
  double peak = 0.0;
  for (const auto& [cell, w] : mu.weights) peak = std::max(peak, w);
  std::vector<TorusPoint> pts;
  for (const auto& [cell, w] : mu.weights) {
    if (w >= frac * peak) {
      const Vec2 q = mu.center(cell);
      pts.emplace_back(q.x, q.y);
    }
  }
  return pts;
}

}  // namespace hpol
