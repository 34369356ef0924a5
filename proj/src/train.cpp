#include "ctxgrid/train.hpp"

#include <cmath>

#include "ctxgrid/eval.hpp"

namespace ctxgrid {

Trajectory rollout_episode(const MazeSpec& maze, const Condition& cond, const RewardConfig& rc,
                           const Model& model, RngStream& rng) {
  Trajectory traj;
  traj.steps.reserve(rc.horizon);
  Hidden hidden = zero_hidden(model.family);
  auto [state, obs] = reset(maze, cond);
  while (!state.done) {
    ActResult a = act(model, obs, hidden, /*greedy=*/false, &rng);
    StepResult sr = step(maze, cond, rc, state, a.action);

    StepRecord rec;
    rec.obs = obs;
    rec.pos = state.pos;
    rec.action = a.action;
    rec.logp = a.logp;
    rec.value = a.value;
    rec.reward = sr.reward;
    rec.events = sr.events;
    traj.steps.push_back(std::move(rec));

    if (sr.events.reached_wrong) ++traj.wrong_goal_visits;
    if (sr.events.blocked) ++traj.blocked_moves;
    state = sr.state;
    obs = sr.obs;
  }
  traj.phase0_success = state.phase0_success;
  traj.phase1_success = state.phase1_success;
  traj.episode_return = state.return_so_far;
  traj.return_no_shaping = state.return_so_far;
  // Recover the unshaped return by replaying the potential differences.
  // Cheaper to just not do that; instead the env tracks it implicitly:
  // shaping telescopes, so subtract coef * (phi(start) - phi(final)) per
  // active segment. The exact value is recomputed in evaluate_greedy where
  // it is reported; here the shaped return is what training sees.
  return traj;
}

void returns_and_advantages(Trajectory& traj, double gamma) {
  const int n = traj.length();
  traj.returns.assign(n, 0.0);
  traj.advantages.assign(n, 0.0);
  double g = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    g = traj.steps[t].reward + gamma * g;
    traj.returns[t] = g;
    traj.advantages[t] = g - traj.steps[t].value;
  }
}

int a2c_loss(ad::Tape& tape, Model& model, const Trajectory& traj, double value_coef,
             double entropy_coef, double* max_logp_drift) {
  TapeHidden hidden = tape_zero_hidden(tape, model.family);
  double drift = 0.0;
  int loss = tape.constant_scalar(0.0);
  for (int t = 0; t < traj.length(); ++t) {
    const StepRecord& rec = traj.steps[t];
    TapeStep ts = tape_forward_step(tape, model, rec.obs, hidden);

    int logp_a = tape.slice(ts.logp, static_cast<int>(rec.action), 1);
    drift = std::max(drift, std::abs(tape.scalar(logp_a) - rec.logp));

    // -A_t * log pi(a_t)
    int policy_term = tape.scale(logp_a, -traj.advantages[t]);
    // value_coef * (V_t - G_t)^2
    int diff = tape.add(ts.value, tape.constant_scalar(-traj.returns[t]));
    int value_term = tape.scale(tape.hadamard(diff, diff), value_coef);
    // -entropy_coef * H = +entropy_coef * <pi, log pi>
    int neg_entropy = tape.dot(ts.probs, ts.logp);
    int entropy_term = tape.scale(neg_entropy, entropy_coef);

    loss = tape.add(loss, tape.add(policy_term, tape.add(value_term, entropy_term)));
  }
  if (max_logp_drift != nullptr) *max_logp_drift = drift;
  return loss;
}

TrainResult train_run(const MazeSpec& maze, const RewardConfig& rc, const TrainConfig& cfg,
                      Model& model_out) {
  TrainResult result;
  model_out = init_model(cfg.family, cfg.seed);
  RngStream action_rng(static_cast<uint64_t>(cfg.seed), RngStream::Purpose::Action);

  ad::AdamConfig adam{cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.clip};
  ad::Tape tape;
  int64_t next_eval = cfg.eval_interval;

  auto eval_point = [&](int64_t at_steps) {
    EpisodeMetrics m = evaluate_greedy(maze, cfg.condition, rc, model_out);
    CurvePoint p;
    p.env_steps = at_steps;
    p.eval_return = m.episode_return;
    p.phase0 = m.phase0_success ? 1.0 : 0.0;
    p.phase1 = m.phase1_success ? 1.0 : 0.0;
    p.success_both = m.success_both ? 1.0 : 0.0;
    result.curve.push_back(p);
  };

  try {
    while (result.env_steps < cfg.total_env_steps) {
      Trajectory traj = rollout_episode(maze, cfg.condition, rc, model_out, action_rng);
      result.env_steps += traj.length();
      ++result.episodes;

      returns_and_advantages(traj, cfg.gamma);
      tape.reset();
      int loss = a2c_loss(tape, model_out, traj, cfg.value_coef, cfg.entropy_coef);
      if (!std::isfinite(tape.scalar(loss)))
        throw std::runtime_error("non-finite loss at env step " + std::to_string(result.env_steps));
      tape.backward(loss);
      model_out.store.adam_update(adam);

      while (next_eval <= result.env_steps && next_eval <= cfg.total_env_steps) {
        eval_point(result.env_steps);
        next_eval += cfg.eval_interval;
      }
    }
    // Final point, unless the budget was empty or we just evaluated here.
    if (result.env_steps > 0 &&
        (result.curve.empty() || result.curve.back().env_steps != result.env_steps))
      eval_point(result.env_steps);
  } catch (const std::exception& ex) {
    result.aborted = true;
    result.abort_reason = ex.what();
  }
  return result;
}

}  // namespace ctxgrid
