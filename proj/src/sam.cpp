#include "samtr/sam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace samtr {

namespace {

double hterm(double v, HKind h) {
  return h == HKind::SumOfSquares ? v * v : v;
}

}  // namespace

double AmelioratedModel::value(const Vector& x) const {
  double v = 0.0;
  for (const QuadraticModel& m : *previous) v += hterm(m.eval(x), h);
  for (std::size_t r = 0; r < I->size(); ++r) {
    const int j = (*I)[r];
    v += (hterm((*refreshed)[j].eval(x), h) -
          hterm((*previous)[j].eval(x), h)) /
         (*pi)[j];
  }
  return v;
}

Vector AmelioratedModel::gradient(const Vector& x) const {
  const int dim = static_cast<int>(x.size());
  auto term_grad = [&](const QuadraticModel& m) {
    const Vector g = m.grad(x);
    if (h == HKind::Sum) return g;
    return Vector(2.0 * m.eval(x) * g);
  };
  Vector g = Vector::Zero(dim);
  for (const QuadraticModel& m : *previous) g += term_grad(m);
  for (std::size_t r = 0; r < I->size(); ++r) {
    const int j = (*I)[r];
    g += (term_grad((*refreshed)[j]) - term_grad((*previous)[j])) / (*pi)[j];
  }
  return g;
}

Matrix AmelioratedModel::hessian(const Vector& x) const {
  const int dim = static_cast<int>(x.size());
  auto term_hess = [&](const QuadraticModel& m) {
    if (h == HKind::Sum) return m.hessian;
    const Vector g = m.grad(x);
    return Matrix(2.0 * (g * g.transpose() + m.eval(x) * m.hessian));
  };
  Matrix out = Matrix::Zero(dim, dim);
  for (const QuadraticModel& m : *previous) out += term_hess(m);
  for (std::size_t r = 0; r < I->size(); ++r) {
    const int j = (*I)[r];
    out += (term_hess((*refreshed)[j]) - term_hess((*previous)[j])) / (*pi)[j];
  }
  return out;
}

Vector compute_rewards(const std::vector<QuadraticModel>& previous,
                       const std::vector<QuadraticModel>& refreshed,
                       const std::vector<int>& I, const Vector& center,
                       double radius, HKind h) {
  Vector d = Vector::Zero(previous.size());
  for (int j : I)
    d[j] = model_discrepancy_ball(refreshed[j], previous[j], center, radius, h);
  return d;
}

FPairEstimate estimate_f_pair(const ComponentProblem& problem,
                              EvalLedger& ledger,
                              const std::vector<QuadraticModel>& models,
                              const std::vector<int>& J, const Vector& pi_j,
                              const Vector& xa, const Vector& xb, HKind h) {
  FPairEstimate est;
  est.rewards = Vector::Zero(problem.p);
  for (int j = 0; j < problem.p; ++j) {
    est.fa += hterm(models[j].eval(xa), h);
    est.fb += hterm(models[j].eval(xb), h);
  }
  for (int j : J) {
    const double fja = evaluate_component(problem, ledger, j, xa);
    const double fjb = evaluate_component(problem, ledger, j, xb);
    const double da = hterm(fja, h) - hterm(models[j].eval(xa), h);
    const double db = hterm(fjb, h) - hterm(models[j].eval(xb), h);
    est.fa += da / pi_j[j];
    est.fb += db / pi_j[j];
    est.rewards[j] = std::max(std::abs(da), std::abs(db));
  }
  return est;
}

namespace {

Evaluator make_evaluator(SamState& st, int j) {
  return [&st, j](const Vector& y) {
    return evaluate_component(st.problem, st.ledger, j, y);
  };
}

// First-order refresh from analytic gradients: one charged value evaluation,
// gradient bundled with it.
QuadraticModel taylor_refresh(SamState& st, int j, const Vector& x) {
  QuadraticModel m = QuadraticModel::zero(x);
  m.bias = evaluate_component(st.problem, st.ledger, j, x);
  st.histories[j].add(x, m.bias);
  m.gradient = st.problem.component_grad(j, x);
  m.interp_points = {x};
  return m;
}

ExpertContext make_context(const SamState& st, AdviceMode mode,
                           const Vector& trial) {
  ExpertContext ctx;
  ctx.round = st.k;
  ctx.b = st.config.b;
  ctx.mode = mode;
  ctx.problem = &st.problem;
  ctx.incumbent = st.x;
  ctx.trust_radius = st.delta;
  ctx.trial_point = trial;
  ctx.models = &st.models;
  ctx.histories = &st.histories;
  ctx.last_rewards = st.last_rewards;
  ctx.taylor_mode = st.config.taylor_mode;
  return ctx;
}

// Exact objective at x if every component is cached there (free), else
// nothing.
std::optional<double> cached_objective(const SamState& st, const Vector& x) {
  double f = 0.0;
  for (int j = 0; j < st.problem.p; ++j) {
    double v = 0.0;
    if (!st.ledger.lookup(j, x, &v)) return std::nullopt;
    f += hterm(v, st.problem.h);
  }
  return f;
}

}  // namespace

SamState init_sam(ComponentProblem problem, SamConfig config,
                  std::vector<std::unique_ptr<Expert>> roster) {
  require(problem.p >= 1 && problem.dim >= 1, ErrorCode::invalid_argument,
          "problem must have components and dimensions");
  if (config.deterministic) config.b = problem.p;
  require(config.b >= 1 && config.b <= problem.p, ErrorCode::invalid_batch,
          "batch size must satisfy 1 <= b <= p");
  require(config.max_rounds >= 1, ErrorCode::invalid_argument,
          "round cap must be positive");
  if (config.budget < 0) config.budget = -1;  // any negative means unlimited
  require(config.gamma_inc > 1.0, ErrorCode::invalid_argument,
          "radius factor must exceed 1");
  require(config.eta1 > 0.0 && config.eta1 < 1.0, ErrorCode::invalid_argument,
          "eta1 outside (0, 1)");
  require(config.eta2 > 0.0, ErrorCode::invalid_argument, "eta2 must be > 0");
  if (config.taylor_mode)
    require(problem.has_gradient(), ErrorCode::invalid_argument,
            "taylor mode needs analytic component gradients");

  if (config.delta0 <= 0.0)
    config.delta0 = 0.1 * std::max(1.0, problem.x0.cwiseAbs().maxCoeff());
  if (config.delta_max <= 0.0) config.delta_max = 1e3 * config.delta0;

  SamState st(std::move(problem), config);
  st.x = st.problem.x0;
  st.delta = config.delta0;
  st.roster = std::move(roster);
  if (st.roster.empty()) st.roster.push_back(make_uniform_expert());
  require(config.use_bandit || st.roster.size() == 1,
          ErrorCode::invalid_argument,
          "a fixed-policy run takes exactly one expert");

  const int n_experts = static_cast<int>(st.roster.size());
  // Without a finite budget the round cap is the only horizon.
  const std::int64_t horizon =
      config.budget >= 0 ? config.budget : config.max_rounds * config.b;
  const double gamma = config.gamma_override > 0.0
                           ? std::min(1.0, config.gamma_override)
                           : tune_gamma(st.problem.p, n_experts, config.b,
                                        std::max<std::int64_t>(1, horizon));
  st.bandit_I = Exp4State::init(st.problem.p, config.b, n_experts, gamma);
  st.bandit_J = Exp4State::init(st.problem.p, config.b, n_experts, gamma);
  st.bandit_I.delta = config.scale_ema;
  st.bandit_J.delta = config.scale_ema;

  st.histories.resize(st.problem.p);
  st.models.resize(st.problem.p);
  st.last_rewards =
      Vector::Constant(st.problem.p, std::numeric_limits<double>::quiet_NaN());
  for (int j = 0; j < st.problem.p; ++j) {
    if (config.taylor_mode) {
      st.models[j] = taylor_refresh(st, j, st.x);
    } else {
      ModelUpdate u =
          update_model(st.histories[j], st.x, st.delta, make_evaluator(st, j));
      st.models[j] = std::move(u.model);
    }
  }
  return st;
}

bool sam_step(SamState& st, IterationRecord* out) {
  if (st.done) return false;
  // A fully collapsed radius means the incumbent is as converged as floating
  // point can express; fresh geometry at this scale would not be separable.
  if (st.delta < 1e-13 * std::max(1.0, st.x.lpNorm<Eigen::Infinity>())) {
    st.done = true;
    return false;
  }
  IterationRecord rec;
  rec.k = st.k;
  rec.delta = st.delta;
  const int p = st.problem.p;
  const Vector x = st.x;
  const std::int64_t evals_start = st.ledger.total();

  double f_estimate = std::numeric_limits<double>::quiet_NaN();
  bool reached_end = false;

  auto finalize = [&](bool truncated) {
    rec.truncated = truncated;
    rec.evals_round = st.ledger.total() - evals_start;
    rec.evals_total = st.ledger.total();
    rec.x_end = st.x;
    if (auto exact = cached_objective(st, st.x)) {
      rec.f = *exact;
      rec.f_estimated = false;
    } else {
      rec.f = f_estimate;
      rec.f_estimated = true;
    }
    if (out) *out = rec;
  };

  try {
    // Refresh advice, mixture and draw.
    std::vector<ExpertAdvice> advice_I;
    ProbabilityVector pv;
    std::vector<int> I;
    if (st.config.deterministic) {
      pv.b = p;
      pv.pi = Vector::Ones(p);
      I.resize(p);
      std::iota(I.begin(), I.end(), 0);
    } else {
      const ExpertContext ctx = make_context(st, AdviceMode::Ball, x);
      for (auto& e : st.roster) advice_I.push_back(e->advise(ctx));
      if (st.config.use_bandit) {
        rec.weights = st.bandit_I.weights;
        pv = mix_advice(st.bandit_I, advice_I);
      } else {
        pv.b = st.config.b;
        pv.pi = advice_I.front().e;
        pv.validate();
      }
      I = CpsSampler(pv).draw(st.rng_I).indices;
    }
    rec.pi = pv.pi;
    rec.I = I;
    for (const ExpertAdvice& a : advice_I) {
      rec.advice.emplace_back(a.expert, a.e);
      if (!a.note.empty()) rec.notes.emplace_back(a.expert, a.note);
    }

    // Refresh the drawn components; retain the previous models for the
    // correction terms.
    const std::vector<QuadraticModel> previous = st.models;
    for (int j : I) {
      if (st.config.taylor_mode) {
        st.models[j] = taylor_refresh(st, j, x);
      } else {
        ModelUpdate u =
            update_model(st.histories[j], x, st.delta, make_evaluator(st, j));
        st.models[j] = std::move(u.model);
      }
    }
    for (int j : I) {
      Expert::Observation obs;
      obs.j = j;
      obs.fresh = &st.models[j];
      obs.previous = &previous[j];
      obs.problem = &st.problem;
      obs.incumbent = x;
      obs.taylor_mode = st.config.taylor_mode;
      for (auto& e : st.roster) e->observe(obs);
    }

    // Refresh rewards feed the first bandit.
    const Vector rewards =
        compute_rewards(previous, st.models, I, x, st.delta, st.problem.h);
    rec.rewards = rewards;
    for (int j : I) st.last_rewards[j] = rewards[j];
    if (!st.config.deterministic && st.config.use_bandit) {
      SampleDraw draw;
      draw.indices = I;
      update_weights(st.bandit_I, advice_I, pv, draw, rewards);
    }

    // Corrected model and trust-region step.
    AmelioratedModel mhat{&previous, &st.models, &I, &pv.pi, st.problem.h};
    const double m0 = mhat.value(x);
    const Vector g0 = mhat.gradient(x);
    const Matrix h0 = mhat.hessian(x);
    rec.model_grad_norm = g0.norm();

    TrSolution sol;
    if (st.problem.has_finite_bounds()) {
      sol = solve_tr_subproblem(g0, h0, st.delta, st.problem.lo - x,
                                st.problem.hi - x);
    } else {
      sol = solve_tr_subproblem(g0, h0, st.delta);
    }
    const Vector trial = x + sol.step;
    const double pred = m0 - mhat.value(trial);
    rec.pred_decrease = pred;

    bool accepted = false;
    if (pred <= 1e-14 * std::max(1.0, std::abs(m0))) {
      // Degenerate predicted decrease: reject without spending evaluations.
      f_estimate = m0;
    } else if (st.config.rho_mode == RhoMode::ExactF ||
               st.config.deterministic) {
      double f0 = 0.0, f1 = 0.0;
      for (int j = 0; j < p; ++j) {
        const double v = evaluate_component(st.problem, st.ledger, j, x);
        st.histories[j].add(x, v);
        f0 += hterm(v, st.problem.h);
      }
      for (int j = 0; j < p; ++j) {
        const double v = evaluate_component(st.problem, st.ledger, j, trial);
        st.histories[j].add(trial, v);
        f1 += hterm(v, st.problem.h);
      }
      rec.rho = (f0 - f1) / pred;
      accepted = rec.rho > st.config.eta1 &&
                 st.delta < st.config.eta2 * rec.model_grad_norm;
      f_estimate = accepted ? f1 : f0;
    } else {
      // Second advice pass over the refreshed (half-step) models.
      const ExpertContext ctx = make_context(st, AdviceMode::TwoPoint, trial);
      std::vector<ExpertAdvice> advice_J;
      for (auto& e : st.roster) advice_J.push_back(e->advise(ctx));
      for (const ExpertAdvice& a : advice_J)
        if (!a.note.empty()) rec.notes.emplace_back(a.expert, a.note);
      ProbabilityVector pv_j;
      if (st.config.use_bandit) {
        pv_j = mix_advice(st.bandit_J, advice_J);
      } else {
        pv_j.b = st.config.b;
        pv_j.pi = advice_J.front().e;
        pv_j.validate();
      }
      const std::vector<int> J = CpsSampler(pv_j).draw(st.rng_J).indices;
      rec.pi_J = pv_j.pi;
      rec.J = J;
      const FPairEstimate est = estimate_f_pair(
          st.problem, st.ledger, st.models, J, pv_j.pi, x, trial, st.problem.h);
      // The pair evaluations are paid for; bank them as interpolation data.
      for (int j : J) {
        double v = 0.0;
        if (st.ledger.lookup(j, x, &v)) st.histories[j].add(x, v);
        if (st.ledger.lookup(j, trial, &v)) st.histories[j].add(trial, v);
      }
      rec.rho = (est.fa - est.fb) / pred;
      if (st.config.use_bandit) {
        SampleDraw draw;
        draw.indices = J;
        update_weights(st.bandit_J, advice_J, pv_j, draw, est.rewards);
      }
      accepted = rec.rho > st.config.eta1 &&
                 st.delta < st.config.eta2 * rec.model_grad_norm;
      f_estimate = accepted ? est.fb : est.fa;
    }

    rec.accepted = accepted;
    if (accepted) {
      st.x = trial;
      st.delta = std::min(st.config.gamma_inc * st.delta, st.config.delta_max);
    } else {
      st.delta /= st.config.gamma_inc;
    }
    st.k += 1;
    reached_end = true;
  } catch (const BudgetExhausted&) {
    st.done = true;
  }

  finalize(!reached_end);
  return true;
}

RunResult run_sam(ComponentProblem problem, SamConfig config,
                  std::vector<std::unique_ptr<Expert>> roster,
                  const std::function<double(const Vector&)>& shadow) {
  RunResult out;
  const Vector x0 = problem.x0;
  std::optional<SamState> st;
  try {
    st.emplace(init_sam(std::move(problem), config, std::move(roster)));
  } catch (const BudgetExhausted&) {
    out.final_x = x0;
    if (shadow) {
      out.final_f = shadow(x0);
      out.final_f_estimated = false;
    }
    return out;
  }

  IterationRecord rec;
  while (st->k <= config.max_rounds && sam_step(*st, &rec)) {
    if (shadow && rec.f_estimated) {
      rec.f = shadow(rec.x_end);
      rec.f_estimated = false;
      rec.f_shadow = true;
    }
    out.records.push_back(rec);
    if (st->done) break;
  }

  out.final_x = st->x;
  out.total_evals = st->ledger.total();
  if (auto exact = cached_objective(*st, st->x)) {
    out.final_f = *exact;
  } else if (shadow) {
    out.final_f = shadow(st->x);
  } else if (!out.records.empty()) {
    out.final_f = out.records.back().f;
    out.final_f_estimated = out.records.back().f_estimated;
  }
  return out;
}

}  // namespace samtr
