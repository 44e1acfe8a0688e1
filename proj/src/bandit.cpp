#include "samtr/bandit.hpp"

#include <algorithm>
#include <cmath>

namespace samtr {

void ExpertAdvice::validate(int b) const {
  double sum = 0.0;
  for (int i = 0; i < e.size(); ++i) {
    require(e[i] >= 0.0 && e[i] <= 1.0 + 1e-12, ErrorCode::invalid_batch,
            "advice entry outside [0, 1] (expert " + expert + ")");
    sum += e[i];
  }
  require(std::abs(sum - b) <= 1e-10, ErrorCode::invalid_batch,
          "advice from " + expert + " sums to " + std::to_string(sum) +
              ", expected " + std::to_string(b));
}

Exp4State Exp4State::init(int p, int b, int n_experts, double gamma) {
  require(p >= 1 && b >= 1 && b <= p, ErrorCode::invalid_batch,
          "need 1 <= b <= p");
  require(n_experts >= 1, ErrorCode::invalid_argument, "need >= 1 expert");
  require(gamma > 0.0 && gamma <= 1.0, ErrorCode::invalid_argument,
          "gamma outside (0, 1]");
  Exp4State s;
  s.p = p;
  s.b = b;
  s.gamma = gamma;
  s.weights = Vector::Ones(n_experts);
  return s;
}

ProbabilityVector mix_advice(Exp4State& state,
                             const std::vector<ExpertAdvice>& advice) {
  require(!advice.empty(), ErrorCode::empty_advice, "no advice to mix");
  require(static_cast<int>(advice.size()) == state.weights.size(),
          ErrorCode::invalid_argument,
          "advice count does not match expert count");
  for (const ExpertAdvice& a : advice) {
    require(a.e.size() == state.p, ErrorCode::invalid_argument,
            "advice length mismatch");
    a.validate(state.b);
  }

  const double wsum = state.weights.sum();
  const double floor = state.gamma * state.b / state.p;
  ProbabilityVector pv;
  pv.b = state.b;
  pv.pi = Vector::Constant(state.p, floor);
  for (std::size_t n = 0; n < advice.size(); ++n)
    pv.pi += (1.0 - state.gamma) * (state.weights[n] / wsum) * advice[n].e;
  // (1-gamma) sum_n w_n e_j / W <= 1 - gamma, so entries exceed 1 only by
  // floating-point dust.
  pv.pi = pv.pi.cwiseMin(1.0);
  pv.validate();
  return pv;
}

void update_weights(Exp4State& state, const std::vector<ExpertAdvice>& advice,
                    const ProbabilityVector& pv, const SampleDraw& draw,
                    const Vector& raw_rewards) {
  require(static_cast<int>(advice.size()) == state.weights.size(),
          ErrorCode::invalid_argument,
          "advice count does not match expert count");
  require(pv.p() == state.p && pv.b == state.b, ErrorCode::invalid_batch,
          "probability vector does not match bandit shape");
  require(static_cast<int>(draw.indices.size()) == state.b,
          ErrorCode::invalid_batch, "draw size does not match batch size");
  require(raw_rewards.size() == state.p, ErrorCode::invalid_argument,
          "reward vector length mismatch");

  double max_raw = 0.0;
  for (int j : draw.indices) {
    require(j >= 0 && j < state.p, ErrorCode::index_out_of_range,
            "drawn index outside range");
    require(std::isfinite(raw_rewards[j]) && raw_rewards[j] >= 0.0,
            ErrorCode::missing_reward,
            "missing or invalid reward for drawn component " +
                std::to_string(j));
    max_raw = std::max(max_raw, raw_rewards[j]);
  }

  if (!state.scale_frozen && state.round == 1) state.reward_scale = max_raw;
  const double scale = state.reward_scale;

  // Importance-weighted scaled reward estimate; zero off the draw.
  Vector dhat = Vector::Zero(state.p);
  for (int j : draw.indices) {
    double scaled = scale > 0.0 ? raw_rewards[j] / scale : 0.0;
    if (state.clip_scaled) scaled = std::min(scaled, 10.0);
    dhat[j] = scaled / pv.pi[j];
  }

  for (int n = 0; n < state.weights.size(); ++n) {
    const double inner = advice[n].e.dot(dhat);
    state.weights[n] *= std::exp(state.gamma * inner / state.p);
  }
  state.weights /= state.weights.maxCoeff();

  if (!state.scale_frozen && state.round > 1)
    state.reward_scale =
        state.delta * state.reward_scale + (1.0 - state.delta) * max_raw;
  ++state.round;
}

double tune_gamma(int p, int n_experts, int b, std::int64_t budget) {
  require(p >= 1 && b >= 1, ErrorCode::invalid_argument, "need p, b >= 1");
  require(budget >= 1, ErrorCode::invalid_argument, "need a positive budget");
  const double n_eff = std::max(2, n_experts);
  const double g = std::sqrt(p * std::log(n_eff) / (double(b) * budget));
  return std::min(1.0, g);
}

double theoretical_regret_bound(long long k_horizon, int p, int n_experts,
                                int b, double reward_bound, double gamma,
                                double max_c) {
  (void)k_horizon;  // the horizon is already folded into max_c
  require(gamma > 0.0 && gamma <= 1.0, ErrorCode::invalid_argument,
          "gamma outside (0, 1]");
  require(n_experts >= 1, ErrorCode::invalid_argument, "need >= 1 expert");
  const double e_minus_2 = 0.71828182845904523536;
  const double first = (e_minus_2 * b * reward_bound + 1.0) * gamma * max_c;
  const double second = p * std::log(double(n_experts)) / gamma;
  return first + second;
}

}  // namespace samtr
