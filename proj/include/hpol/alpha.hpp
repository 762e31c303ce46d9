#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "hpol/defaults.hpp"
#include "hpol/errors.hpp"
#include "hpol/grid.hpp"
#include "hpol/model.hpp"

namespace hpol {

struct AlphaUpperOptions {
  double beta_lo = defaults::kBetaLo;
  double beta_hi = defaults::kBetaHi;
  double warm_beta_lo = 512.0;  // ladder start when a warm start is supplied
  int max_iters_per_stage = 600;
  double stage_tol = 1e-13;  // relative objective decrease per iteration
  int lbfgs_history = 8;
  const GridField* warm_start = nullptr;
};

struct AlphaUpperResult {
  double value = 0.0;          // hard max of H(q, c+du) at the minimizer
  GridField u;                 // mean-zero minimizer
  GridField residual;          // H(q, c+du(q)) - value, <= 0 by construction
  Vec2 grad_c{0.0, 0.0};       // envelope gradient of the smoothed objective
  int iterations = 0;
  double final_grad_norm = 0.0;
};

namespace detail {

// Per-node evaluation cache for the smoothed objective. For metric families
// the momentum Hessian doubles as G^{-1}(q) and H is an exact quadratic.
class MinimaxWorkspace {
 public:
  MinimaxWorkspace(const TonelliModel& m, const Vec2& c, int n) : m_(m), c_(c), n_(n) {
    nodes_.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) nodes_.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    if (m.is_metric()) {
      ginv_.reserve(nodes_.size());
      for (const auto& q : nodes_) ginv_.push_back(m.metric(q).inverse());
    }
    h_.resize(nodes_.size());
    gp_.resize(nodes_.size());
    w_.resize(nodes_.size());
  }

  int n() const { return n_; }

  // H and dH/dp at every node for the current u; returns the hard max
  double evaluate(const GridField& u) {
    double hmax = -std::numeric_limits<double>::infinity();
    const std::size_t count = nodes_.size();
    for (std::size_t k = 0; k < count; ++k) {
      const int i = static_cast<int>(k) / n_;
      const int j = static_cast<int>(k) % n_;
      const Vec2 p = c_ + u.du(i, j);
      if (!ginv_.empty()) {
        h_[k] = 0.5 * ginv_[k].quad(p);
        gp_[k] = ginv_[k].apply(p);
      } else {
        h_[k] = m_.hamiltonian(nodes_[k], p);
        gp_[k] = m_.grad_p(nodes_[k], p);
      }
      hmax = std::max(hmax, h_[k]);
    }
    return hmax;
  }

  // log-sum-exp value of the current node energies at inverse temperature beta
  double smooth_value(double beta, double hmax) const {
    double s = 0.0;
    for (const double h : h_) s += std::exp(beta * (h - hmax));
    return hmax + std::log(s / static_cast<double>(h_.size())) / beta;
  }

  // softmax weights and the scattered gradient of the smoothed objective
  void gradient(const GridField& u, double beta, double hmax, GridField& grad) {
    double z = 0.0;
    for (std::size_t k = 0; k < h_.size(); ++k) {
      w_[k] = std::exp(beta * (h_[k] - hmax));
      z += w_[k];
    }
    for (double& w : w_) w /= z;
    std::fill(grad.values().begin(), grad.values().end(), 0.0);
    const double s = 0.5 * n_;
    for (std::size_t k = 0; k < h_.size(); ++k) {
      const int i = static_cast<int>(k) / n_;
      const int j = static_cast<int>(k) % n_;
      const Vec2 g = gp_[k] * w_[k];
      grad.at(i + 1, j) += g.x * s;
      grad.at(i - 1, j) -= g.x * s;
      grad.at(i, j + 1) += g.y * s;
      grad.at(i, j - 1) -= g.y * s;
    }
    (void)u;
  }

  Vec2 envelope_grad_c() const {
    Vec2 g{0.0, 0.0};
    for (std::size_t k = 0; k < h_.size(); ++k) g += gp_[k] * w_[k];
    return g;
  }

  const std::vector<double>& energies() const { return h_; }

 private:
  const TonelliModel& m_;
  Vec2 c_;
  int n_;
  std::vector<Vec2> nodes_;
  std::vector<Mat2> ginv_;
  std::vector<double> h_;
  std::vector<Vec2> gp_;
  std::vector<double> w_;
};

}  // namespace detail

// Discrete min-max bound for Mather's alpha: minimize u -> max_q H(q, c+du)
// over mean-zero grid fields by smoothed-max descent with the temperature
// ladder beta = 16, 32, ..., 4096; the hard max is reported, never the
// smoothed value.
inline AlphaUpperResult alpha_upper(const TonelliModel& model, const Vec2& c, int n,
                                    AlphaUpperOptions opt = {}) {
  if (n < 16) throw DomainError("alpha_upper: need N >= 16");
  detail::MinimaxWorkspace ws(model, c, n);

  const bool warm = opt.warm_start && opt.warm_start->n() == n;
  GridField u = warm ? *opt.warm_start : GridField(n);
  if (warm) opt.beta_lo = std::max(opt.beta_lo, std::min(opt.warm_beta_lo, opt.beta_hi));
  u.normalize_mean_zero();
  GridField grad(n), trial(n);

  const std::size_t dim = u.values().size();
  int total_iters = 0;
  double grad_norm = 0.0;
  double hmax = ws.evaluate(u);

  // L-BFGS history (the objective is convex in u: LSE of convex-in-p energies
  // composed with the linear map u -> du)
  const int hist = std::max(1, opt.lbfgs_history);
  std::vector<std::vector<double>> s_hist, y_hist;
  std::vector<double> rho_hist, alpha_tmp;
  std::vector<double> q_dir(dim), grad_prev(dim), u_prev(dim);

  for (double beta = opt.beta_lo; beta <= opt.beta_hi * 1.0001; beta *= 2.0) {
    hmax = ws.evaluate(u);  // node cache may hold a rejected trial point
    double f = ws.smooth_value(beta, hmax);
    s_hist.clear();
    y_hist.clear();
    rho_hist.clear();

    for (int it = 0; it < opt.max_iters_per_stage; ++it) {
      ws.gradient(u, beta, hmax, grad);
      grad_norm = 0.0;
      for (const double g : grad.values()) grad_norm += g * g;
      grad_norm = std::sqrt(grad_norm);
      if (grad_norm < 1e-13 * (1.0 + std::abs(f)) * n) break;

      // two-loop recursion
      q_dir.assign(grad.values().begin(), grad.values().end());
      alpha_tmp.assign(s_hist.size(), 0.0);
      for (int h = static_cast<int>(s_hist.size()) - 1; h >= 0; --h) {
        double sq = 0.0;
        for (std::size_t k = 0; k < dim; ++k) sq += s_hist[h][k] * q_dir[k];
        alpha_tmp[h] = rho_hist[h] * sq;
        for (std::size_t k = 0; k < dim; ++k) q_dir[k] -= alpha_tmp[h] * y_hist[h][k];
      }
      double gamma = 1.0 / beta;
      if (!s_hist.empty()) {
        double sy = 0.0, yy = 0.0;
        const auto& s = s_hist.back();
        const auto& y = y_hist.back();
        for (std::size_t k = 0; k < dim; ++k) {
          sy += s[k] * y[k];
          yy += y[k] * y[k];
        }
        if (yy > 0.0) gamma = sy / yy;
      }
      for (double& x : q_dir) x *= gamma;
      for (std::size_t h = 0; h < s_hist.size(); ++h) {
        double yq = 0.0;
        for (std::size_t k = 0; k < dim; ++k) yq += y_hist[h][k] * q_dir[k];
        const double b = rho_hist[h] * yq;
        for (std::size_t k = 0; k < dim; ++k) q_dir[k] += (alpha_tmp[h] - b) * s_hist[h][k];
      }

      double dir_dot_grad = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dir_dot_grad += q_dir[k] * grad.values()[k];
      if (dir_dot_grad <= 0.0) {  // safeguard: fall back to steepest descent
        q_dir.assign(grad.values().begin(), grad.values().end());
        for (double& x : q_dir) x *= gamma;
        dir_dot_grad = gamma * grad_norm * grad_norm;
      }

      grad_prev.assign(grad.values().begin(), grad.values().end());
      u_prev.assign(u.values().begin(), u.values().end());

      // Armijo backtracking along -q_dir
      double step = 1.0;
      bool accepted = false;
      double f_t = f, hmax_t = hmax;
      for (int bt = 0; bt < 50; ++bt) {
        for (std::size_t k = 0; k < dim; ++k) trial.values()[k] = u.values()[k] - step * q_dir[k];
        hmax_t = ws.evaluate(trial);
        f_t = ws.smooth_value(beta, hmax_t);
        if (f_t <= f - 1e-4 * step * dir_dot_grad) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      ++total_iters;
      if (!accepted) break;

      std::swap(u.values(), trial.values());
      const double decrease = (f - f_t) / std::max(1.0, std::abs(f));
      f = f_t;
      hmax = hmax_t;

      // push (s, y) pair
      ws.gradient(u, beta, hmax, grad);
      std::vector<double> s_new(dim), y_new(dim);
      double sy = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        s_new[k] = u.values()[k] - u_prev[k];
        y_new[k] = grad.values()[k] - grad_prev[k];
        sy += s_new[k] * y_new[k];
      }
      if (sy > 1e-30) {
        if (static_cast<int>(s_hist.size()) == hist) {
          s_hist.erase(s_hist.begin());
          y_hist.erase(y_hist.begin());
          rho_hist.erase(rho_hist.begin());
        }
        s_hist.push_back(std::move(s_new));
        y_hist.push_back(std::move(y_new));
        rho_hist.push_back(1.0 / sy);
      }
      if (decrease < opt.stage_tol) break;  // stage converged
    }
  }

  // final evaluation at the minimizer
  u.normalize_mean_zero();
  const double value = ws.evaluate(u);
  ws.gradient(u, opt.beta_hi, value, grad);  // refresh softmax weights for grad_c

  AlphaUpperResult out;
  out.value = value;
  out.u = u;
  out.residual = GridField(n);
  const auto& h = ws.energies();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.residual.at(i, j) = h[static_cast<std::size_t>(i) * n + j] - value;
  out.grad_c = ws.envelope_grad_c();
  out.iterations = total_iters;
  out.final_grad_norm = grad_norm;
  return out;
}

// Bilinear prolongation onto a finer grid.
inline GridField prolong(const GridField& coarse, int n_fine) {
  GridField fine(n_fine);
  for (int i = 0; i < n_fine; ++i)
    for (int j = 0; j < n_fine; ++j) fine.at(i, j) = coarse.sample(fine.node(i, j));
  return fine;
}

// Cold solves seeded through a coarse-to-fine ladder; warm solves reuse the
// caller's minimizer and skip the low temperatures. The fast preset trades
// ~1e-6 relative accuracy for a large speedup, enough for level-set solves
// at the 1e-3 level tolerance.
inline AlphaUpperResult alpha_upper_auto(const TonelliModel& model, const Vec2& c, int n,
                                         const GridField* warm = nullptr, bool fast = true) {
  AlphaUpperOptions opt;
  if (fast) {
    opt.stage_tol = 1e-10;
    opt.max_iters_per_stage = 200;
  }
  if (warm && warm->n() == n) {
    opt.warm_start = warm;
    return alpha_upper(model, c, n, opt);
  }
  GridField seed;
  if (n >= 32) {
    seed = prolong(alpha_upper_auto(model, c, n / 2, nullptr, fast).u, n);
    opt.warm_start = &seed;
  }
  return alpha_upper(model, c, n, opt);
}

// Grid points where the subsolution saturates the energy bound within tol,
// lifted by p = c + dw(q).
struct AubryEstimate {
  std::vector<TorusPoint> base;
  std::vector<PhaseState> lifted;
  double coverage = 0.0;  // fraction of grid nodes returned
};

inline AubryEstimate aubry_estimate(const TonelliModel& model, const Vec2& c,
                                    const AlphaUpperResult& alpha, double tol) {
  (void)model;
  const int n = alpha.u.n();
  AubryEstimate out;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (alpha.residual.at(i, j) >= -tol) {
        const Vec2 q = alpha.u.node(i, j);
        out.base.emplace_back(q.x, q.y);
        out.lifted.push_back({TorusPoint(q), c + alpha.u.du(i, j)});
      }
    }
  }
  out.coverage = static_cast<double>(out.base.size()) / (static_cast<double>(n) * n);
  return out;
}

// One-sided Hausdorff excess of set A over the tol-neighborhood of set B,
// measured on base points.
inline double hausdorff_excess(const std::vector<TorusPoint>& a, const std::vector<TorusPoint>& b) {
  double excess = 0.0;
  for (const auto& x : a) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& y : b) nearest = std::min(nearest, torus_distance(x, y));
    excess = std::max(excess, nearest);
  }
  return excess;
}

}  // namespace hpol
