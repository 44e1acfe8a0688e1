#pragma once

#include <vector>

#include "samtr/problem.hpp"
#include "samtr/rng.hpp"

namespace samtr {

// Target inclusion probabilities for one round: entries in (0, 1], summing to
// the batch size b.  validate() throws InvalidBatch when violated.
struct ProbabilityVector {
  Vector pi;
  int b = 0;

  int p() const { return static_cast<int>(pi.size()); }
  void validate() const;
};

// One sampled subset; indices ascending, exactly b of them.
struct SampleDraw {
  std::vector<int> indices;

  bool contains(int j) const;
};

// Minimizes sum_j d_j^2 (1 - pi_j) / pi_j over {0 < pi <= 1, sum pi = b}: the
// variance-optimal inclusion probabilities for importance-weighted sums with
// per-component discrepancy bounds d_j >= 0.  Zero entries are floored at
// max(1e-12 * max_j d_j, 1e-300) so every component keeps a positive
// probability; an all-zero d yields the uniform vector b/p.
ProbabilityVector optimal_probabilities(const Vector& d, int b);

// Exact inclusion probabilities of a Poisson sample with the given working
// probabilities conditioned on the sample having size exactly b.  Computed
// with elementary-symmetric-polynomial prefix/suffix tables in O(p*b); all
// table terms are nonnegative, so there is no cancellation.
Vector inclusion_probabilities_exact(const Vector& working, int b);

// Draws subsets of size exactly b whose inclusion probabilities equal the
// target pi exactly.  Construction calibrates working probabilities by a
// damped fixed-point iteration in odds space against
// inclusion_probabilities_exact (tolerance 1e-12, at most 200 sweeps;
// CalibrationFailure otherwise).  Entries with pi_j >= 1 - 1e-12 are pinned —
// always included — and entries with pi_j <= 1e-14 are never sampled; the
// remaining components are calibrated for batch b - #pinned.
class CpsSampler {
 public:
  explicit CpsSampler(ProbabilityVector target);

  const ProbabilityVector& target() const { return target_; }
  // Calibrated working probabilities on the full index range (pinned = 1).
  const Vector& working() const { return working_; }

  // Sequential draw-by-draw sampling using the suffix ESP table; O(p).
  SampleDraw draw(RngStream& rng) const;

  // Poisson sampling with the same working probabilities, rejecting until the
  // size is exactly b.  Distributionally identical to draw(); kept for
  // cross-validation of the sequential procedure.
  SampleDraw draw_rejection(RngStream& rng) const;

 private:
  ProbabilityVector target_;
  Vector working_;
  std::vector<int> pinned_, free_;
  Vector w_;    // normalized odds of the free components
  Matrix suf_;  // suf_(i, m) = e_m(w_i, ..., w_{nf-1})
  int b_free_ = 0;
};

// One-shot convenience wrapper: calibrate and draw once.
SampleDraw conditional_poisson_sample(const ProbabilityVector& target,
                                      RngStream& rng);

}  // namespace samtr
