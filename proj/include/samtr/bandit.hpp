#pragma once

#include <string>
#include <vector>

#include "samtr/sampling.hpp"

namespace samtr {

// One expert's recommended inclusion probabilities for a round: entries in
// [0, 1] summing to the batch size.
struct ExpertAdvice {
  std::string expert;
  Vector e;
  // Optional free-form annotation (an external expert's reasoning line);
  // carried into run logs verbatim, never interpreted.
  std::string note;

  void validate(int b) const;
};

// Exponential-weights mixer over advice vectors, adapted to batched subset
// draws: the mixture is floored by gamma*b/p exploration mass, observed
// rewards are importance-weighted by the mixed inclusion probabilities, and
// raw rewards are normalized by a running scale D before entering the
// exponent (EMA of per-round maxima, factor `delta`).  Scaled rewards are
// additionally clipped at 10 so a lagging scale cannot overflow the
// exponential; the clip is inactive whenever D keeps up with the rewards.
struct Exp4State {
  int p = 0;
  int b = 0;
  double gamma = 0.0;
  double delta = 0.8;       // reward-scale EMA factor
  Vector weights;           // one per expert, renormalized by the max
  double reward_scale = 0;  // D
  bool scale_frozen = false;   // lab mode: D fixed and known a priori
  bool clip_scaled = true;     // lab mode disables the clip
  int round = 1;

  static Exp4State init(int p, int b, int n_experts, double gamma);
};

// pi_j = (1 - gamma) * sum_n (w_n / W) e_j^n + gamma * b / p.  Throws
// EmptyAdvice when no advice is given and InvalidArgument when the advice
// count does not match the expert count.
ProbabilityVector mix_advice(Exp4State& state,
                             const std::vector<ExpertAdvice>& advice);

// Exponential update from one round's observed rewards.  `advice` must be the
// vectors passed to mix_advice this round, `pv` its output, `draw` the
// realized subset and `raw_rewards` the raw (unscaled) rewards for the drawn
// components; entries outside the draw are ignored, a non-finite or negative
// entry inside it throws MissingReward.
void update_weights(Exp4State& state, const std::vector<ExpertAdvice>& advice,
                    const ProbabilityVector& pv, const SampleDraw& draw,
                    const Vector& raw_rewards);

// gamma = sqrt(p * ln(max(2, N)) / (b * budget)), clipped into (0, 1].
double tune_gamma(int p, int n_experts, int b, std::int64_t budget);

// ((e-2) b D + 1) * gamma * max_c + p * ln(N) / gamma, the guarantee for a
// horizon-K run; the horizon enters through max_c, the largest cumulative
// expert reward sum_k sum_j e_j^{k,n} d_j^k.  N = 1 leaves the first term.
double theoretical_regret_bound(long long k_horizon, int p, int n_experts,
                                int b, double reward_bound, double gamma,
                                double max_c);

}  // namespace samtr
