#include "samtr/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace samtr {

namespace {

constexpr double kPinTol = 1e-12;       // pi >= 1 - kPinTol is treated as 1
constexpr double kDropTol = 1e-14;      // pi <= kDropTol is treated as 0
constexpr double kCalibTol = 1e-12;     // max |psi - pi| at convergence
constexpr int kCalibMaxSweeps = 200;

// Elementary symmetric polynomials e_0..e_b of w, built left to right:
// table(i, m) = e_m(w_0, ..., w_{i-1}).
Matrix esp_prefix(const Vector& w, int b) {
  const int n = static_cast<int>(w.size());
  Matrix table = Matrix::Zero(n + 1, b + 1);
  table(0, 0) = 1.0;
  for (int i = 1; i <= n; ++i) {
    table(i, 0) = 1.0;
    for (int m = 1; m <= b; ++m)
      table(i, m) = table(i - 1, m) + w[i - 1] * table(i - 1, m - 1);
  }
  return table;
}

Matrix esp_suffix(const Vector& w, int b) {
  const int n = static_cast<int>(w.size());
  Matrix table = Matrix::Zero(n + 1, b + 1);
  table(n, 0) = 1.0;
  for (int i = n - 1; i >= 0; --i) {
    table(i, 0) = 1.0;
    for (int m = 1; m <= b; ++m)
      table(i, m) = table(i + 1, m) + w[i] * table(i + 1, m - 1);
  }
  return table;
}

// Odds w = q / (1 - q), rescaled so max w = 1.  e_m(s*w) = s^m e_m(w) and the
// scale cancels in every inclusion-probability ratio, so normalization only
// protects the tables from overflow.
Vector normalized_odds(const Vector& q) {
  Vector w(q.size());
  for (int i = 0; i < q.size(); ++i) {
    const double qi = std::min(std::max(q[i], 1e-300), 1.0 - 1e-15);
    w[i] = qi / (1.0 - qi);
  }
  const double wmax = w.maxCoeff();
  if (wmax > 0.0) w /= wmax;
  return w;
}

Vector conditional_inclusion_from_odds(const Vector& w, int b) {
  const int n = static_cast<int>(w.size());
  const Matrix pre = esp_prefix(w, b);
  const Matrix suf = esp_suffix(w, b);
  const double total = pre(n, b);
  require(total > 0.0, ErrorCode::calibration_failure,
          "conditional sample space has zero mass");
  Vector psi(n);
  for (int i = 0; i < n; ++i) {
    // e_{b-1}(w without i), split at position i.
    double excl = 0.0;
    for (int m = 0; m <= b - 1; ++m) excl += pre(i, m) * suf(i + 1, b - 1 - m);
    psi[i] = w[i] * excl / total;
  }
  return psi;
}

}  // namespace

void ProbabilityVector::validate() const {
  require(b >= 1 && b <= p(), ErrorCode::invalid_batch,
          "batch size must satisfy 1 <= b <= p");
  double sum = 0.0;
  for (int i = 0; i < pi.size(); ++i) {
    require(pi[i] > 0.0 && pi[i] <= 1.0 + 1e-12, ErrorCode::invalid_batch,
            "inclusion probability outside (0, 1] at index " +
                std::to_string(i));
    sum += pi[i];
  }
  require(std::abs(sum - b) <= 1e-10, ErrorCode::invalid_batch,
          "inclusion probabilities sum to " + std::to_string(sum) +
              ", expected " + std::to_string(b));
}

bool SampleDraw::contains(int j) const {
  return std::binary_search(indices.begin(), indices.end(), j);
}

ProbabilityVector optimal_probabilities(const Vector& d, int b) {
  const int p = static_cast<int>(d.size());
  require(p >= 1, ErrorCode::invalid_argument, "empty discrepancy vector");
  require(b >= 1 && b <= p, ErrorCode::invalid_batch,
          "batch size must satisfy 1 <= b <= p");
  for (int i = 0; i < p; ++i)
    require(d[i] >= 0.0, ErrorCode::invalid_argument,
            "discrepancy bounds must be nonnegative");

  const double dmax = d.maxCoeff();
  const double floor = std::max(1e-12 * dmax, 1e-300);
  Vector df = d.cwiseMax(floor);

  // Sort ascending; ties keep original index order so permuted ties give the
  // same multiset of probabilities.
  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int c) {
    return df[a] != df[c] ? df[a] < df[c] : a < c;
  });

  Vector prefix(p + 1);
  prefix[0] = 0.0;
  for (int r = 0; r < p; ++r) prefix[r + 1] = prefix[r] + df[order[r]];

  // Largest c with 0 < b + c - p and (b + c - p) * d_(c) <= sum_{i<=c} d_(i):
  // ranks above c are pinned at probability one.  c = p - b + 1 always
  // qualifies, so the scan cannot fall through.
  int c = p;
  for (; c >= p - b + 1; --c) {
    const double scale = b + c - p;
    if (scale * df[order[c - 1]] <= prefix[c]) break;
  }

  ProbabilityVector pv;
  pv.b = b;
  pv.pi = Vector::Ones(p);
  const double scale = (b + c - p) / prefix[c];
  for (int r = 0; r < c; ++r)
    pv.pi[order[r]] = std::min(1.0, df[order[r]] * scale);
  pv.validate();
  return pv;
}

Vector inclusion_probabilities_exact(const Vector& working, int b) {
  const int n = static_cast<int>(working.size());
  require(n >= 1, ErrorCode::invalid_argument, "empty working vector");
  require(b >= 0 && b <= n, ErrorCode::invalid_batch,
          "conditional size outside [0, p]");
  for (int i = 0; i < n; ++i)
    require(working[i] >= 0.0 && working[i] <= 1.0,
            ErrorCode::invalid_argument, "working probability outside [0, 1]");

  // Entries at (numerically) one are certain and entries at (numerically)
  // zero can never appear; condition the rest on the reduced size.
  std::vector<int> pinned, free;
  for (int i = 0; i < n; ++i) {
    if (working[i] <= kDropTol) continue;
    (working[i] >= 1.0 - kPinTol ? pinned : free).push_back(i);
  }
  const int b_free = b - static_cast<int>(pinned.size());
  require(b_free >= 0, ErrorCode::invalid_batch,
          "more certain entries than the conditional size allows");
  require(b_free <= static_cast<int>(free.size()), ErrorCode::invalid_batch,
          "conditional size exceeds the number of available entries");

  Vector psi = Vector::Zero(n);
  for (int i : pinned) psi[i] = 1.0;
  if (b_free == 0) return psi;
  Vector qf(free.size());
  for (size_t k = 0; k < free.size(); ++k) qf[k] = working[free[k]];
  const Vector w = normalized_odds(qf);
  const Vector psif = conditional_inclusion_from_odds(w, b_free);
  for (size_t k = 0; k < free.size(); ++k) psi[free[k]] = psif[k];
  return psi;
}

CpsSampler::CpsSampler(ProbabilityVector target) : target_(std::move(target)) {
  target_.validate();
  const int p = target_.p();
  for (int i = 0; i < p; ++i) {
    if (target_.pi[i] <= kDropTol) continue;  // never sampled
    (target_.pi[i] >= 1.0 - kPinTol ? pinned_ : free_).push_back(i);
  }
  b_free_ = target_.b - static_cast<int>(pinned_.size());
  require(b_free_ >= 0, ErrorCode::invalid_batch,
          "more pinned entries than the batch size");
  require(b_free_ <= static_cast<int>(free_.size()), ErrorCode::invalid_batch,
          "batch size exceeds the number of entries with nonzero probability");

  working_ = Vector::Zero(p);
  for (int i : pinned_) working_[i] = 1.0;
  const int nf = static_cast<int>(free_.size());
  if (b_free_ == 0) return;

  Vector pif(nf);
  for (int k = 0; k < nf; ++k) pif[k] = target_.pi[free_[k]];

  // Damped fixed-point iteration in odds space matching the conditional
  // inclusion probabilities psi(w) to the target pi.  Each sweep builds two
  // candidate iterates and keeps whichever has the smaller max residual:
  //   - the classical multiplicative sweep w <- w * (pi / psi), and
  //   - a diagonal-Newton sweep on log-odds, using the scalar slope
  //     d psi_j / d log w_j ~= psi_j (1 - psi_j).
  // The multiplicative sweep is globally reliable but crawls whenever some
  // psi_j nears 1; the Newton sweep repairs exactly that tail.
  auto residual = [&](const Vector& psi) {
    return (psi - pif).cwiseAbs().maxCoeff();
  };

  Vector w = normalized_odds(pif);
  Vector psi = conditional_inclusion_from_odds(w, b_free_);
  double cur_resid = residual(psi);
  for (int sweep = 0; sweep < kCalibMaxSweeps && cur_resid > kCalibTol;
       ++sweep) {
    Vector mult = w, newton = w;
    for (int k = 0; k < nf; ++k) {
      mult[k] *= pif[k] / std::max(psi[k], 1e-300);
      const double slope = std::max(psi[k] * (1.0 - psi[k]), 1e-300);
      const double step = (pif[k] - psi[k]) / slope;
      newton[k] *= std::exp(std::clamp(step, -30.0, 30.0));
    }
    mult /= mult.maxCoeff();
    newton /= newton.maxCoeff();
    const Vector psi_mult = conditional_inclusion_from_odds(mult, b_free_);
    const Vector psi_newton = conditional_inclusion_from_odds(newton, b_free_);
    if (residual(psi_newton) < residual(psi_mult)) {
      w = newton;
      psi = psi_newton;
    } else {
      w = mult;
      psi = psi_mult;
    }
    cur_resid = residual(psi);
  }
  const bool converged = cur_resid <= kCalibTol;
  if (!converged) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "working-probability calibration stalled at residual %.3e "
                  "(p=%d, b=%d, min pi=%.3e, max pi=%.3e)",
                  cur_resid, p, target_.b, pif.minCoeff(), pif.maxCoeff());
    throw Error(ErrorCode::calibration_failure, buf);
  }

  w_ = w;
  suf_ = esp_suffix(w_, b_free_);
  for (int k = 0; k < nf; ++k) working_[free_[k]] = w[k] / (1.0 + w[k]);
}

SampleDraw CpsSampler::draw(RngStream& rng) const {
  SampleDraw out;
  out.indices = pinned_;
  const int nf = static_cast<int>(free_.size());
  int r = b_free_;
  for (int i = 0; i < nf && r > 0; ++i) {
    // P[include i | r still needed among i..nf-1] straight from the tables.
    const double p_inc = w_[i] * suf_(i + 1, r - 1) / suf_(i, r);
    if (rng.uniform() < p_inc) {
      out.indices.push_back(free_[i]);
      --r;
    }
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

SampleDraw CpsSampler::draw_rejection(RngStream& rng) const {
  const int nf = static_cast<int>(free_.size());
  Vector qf(nf);
  for (int k = 0; k < nf; ++k) qf[k] = working_[free_[k]];
  for (long attempt = 0; attempt < 100000000L; ++attempt) {
    std::vector<int> picked;
    for (int k = 0; k < nf; ++k)
      if (rng.uniform() < qf[k]) picked.push_back(free_[k]);
    if (static_cast<int>(picked.size()) == b_free_) {
      SampleDraw out;
      out.indices = pinned_;
      out.indices.insert(out.indices.end(), picked.begin(), picked.end());
      std::sort(out.indices.begin(), out.indices.end());
      return out;
    }
  }
  throw Error(ErrorCode::internal, "rejection sampler failed to hit the batch size");
}

SampleDraw conditional_poisson_sample(const ProbabilityVector& target,
                                      RngStream& rng) {
  return CpsSampler(target).draw(rng);
}

}  // namespace samtr
