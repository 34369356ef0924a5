#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctxgrid/grid.hpp"
#include "ctxgrid/model.hpp"

namespace ctxgrid {

struct TrainConfig {
  Condition condition;
  ModelFamily family;
  int seed = 0;
  int64_t total_env_steps = 300000;
  double gamma = 0.99;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip = 1.0;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  int64_t eval_interval = 10000;
};

struct StepRecord {
  Observation obs;
  Coord pos;  // position when the action was chosen
  Action action = Action::Up;
  double logp = 0.0;
  double value = 0.0;
  double reward = 0.0;
  StepEvents events;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  bool phase0_success = false;
  bool phase1_success = false;
  double episode_return = 0.0;     // includes shaping
  double return_no_shaping = 0.0;  // shaping term removed
  int wrong_goal_visits = 0;
  int blocked_moves = 0;
  std::vector<double> returns;     // filled by returns_and_advantages
  std::vector<double> advantages;
  int length() const { return static_cast<int>(steps.size()); }
};

// One sampled episode; hidden state starts at zero and is never reset
// mid-episode.
Trajectory rollout_episode(const MazeSpec& maze, const Condition& cond, const RewardConfig& rc,
                           const Model& model, RngStream& rng);

// Discounted return-to-go and A_t = G_t - V_t (episodes always terminate, so
// there is no bootstrap tail).
void returns_and_advantages(Trajectory& traj, double gamma);

// Rebuilds the episode on the tape and assembles
//   loss = -sum A_t log pi(a_t) + value_coef * sum (V_t - G_t)^2
//          - entropy_coef * sum H(pi_t),
// with advantages and returns frozen as constants. Returns the loss node.
// `max_logp_drift`, when given, receives the largest |stored - recomputed|
// log-prob (an on-policy consistency diagnostic).
int a2c_loss(ad::Tape& tape, Model& model, const Trajectory& traj, double value_coef,
             double entropy_coef, double* max_logp_drift = nullptr);

struct CurvePoint {
  int64_t env_steps = 0;
  double eval_return = 0.0;
  double phase0 = 0.0;
  double phase1 = 0.0;
  double success_both = 0.0;
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  int64_t env_steps = 0;
  int episodes = 0;
  bool aborted = false;
  std::string abort_reason;
};

// Full training run: rollout -> loss -> update until the step budget is
// consumed, greedy evaluation every eval_interval steps. Deterministic for a
// fixed (config, seed). The model is created inside and returned via
// `model_out`.
TrainResult train_run(const MazeSpec& maze, const RewardConfig& rc, const TrainConfig& cfg,
                      Model& model_out);

}  // namespace ctxgrid
