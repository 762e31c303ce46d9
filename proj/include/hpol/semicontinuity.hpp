#pragma once

#include <vector>

#include "hpol/alpha.hpp"
#include "hpol/model.hpp"

namespace hpol {

struct SemicontinuityReport {
  std::vector<Vec2> cohomologies;
  std::vector<double> excess;  // one-sided Hausdorff excess over the limit set
  bool decreasing_tail = true;
};

// Outer semicontinuity probe: the excess of aubry(c_k) over the
// tol-neighborhood of aubry(c_limit) should tend to zero along c_k -> c.
inline SemicontinuityReport semicontinuity_probe(const TonelliModel& model,
                                                 const std::vector<Vec2>& sequence,
                                                 const Vec2& c_limit, int n, double tol) {
  SemicontinuityReport rep;
  const AlphaUpperResult limit_alpha = alpha_upper_auto(model, c_limit, n, nullptr, false);
  const AubryEstimate limit_set = aubry_estimate(model, c_limit, limit_alpha, tol);
  for (const Vec2& c : sequence) {
    const AlphaUpperResult a = alpha_upper_auto(model, c, n);
    const AubryEstimate s = aubry_estimate(model, c, a, tol);
    rep.cohomologies.push_back(c);
    rep.excess.push_back(hausdorff_excess(s.base, limit_set.base));
  }
  for (std::size_t i = 1; i + 1 < rep.excess.size(); ++i) {
    if (rep.excess[i + 1] > rep.excess[i] + 0.1) rep.decreasing_tail = false;
  }
  return rep;
}

}  // namespace hpol
