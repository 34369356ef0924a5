#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "ctxgrid/grid.hpp"
#include "ctxgrid/params.hpp"
#include "ctxgrid/rng.hpp"
#include "ctxgrid/tape.hpp"

namespace ctxgrid {

using ad::Mat;
using ad::Vec;

enum class FamilyTag : uint8_t { L, M, I };

// One of the three policy families. All share the LSTM backbone; they differ
// only in how context enters: input concatenation (L), extra recurrent
// dimensions (M), or a post-recurrence residual operator (I).
struct ModelFamily {
  FamilyTag tag = FamilyTag::L;
  int d = 32;          // base recurrent size
  int m = 0;           // extra memory (M only)
  double alpha = 0.1;  // intervention strength (I only)
  int feature_dim = 64;

  int recurrent_size() const { return tag == FamilyTag::M ? d + m : d; }
  int input_dim() const { return tag == FamilyTag::L ? 47 : 45; }
  std::string name() const;  // "L", "I", "M16", ...
  int64_t expected_param_count() const;

  // Parses "L" / "I" / "M<k>". By default M accepts only k in {8,16,32,64};
  // `permissive` lifts that restriction. Throws std::invalid_argument.
  static ModelFamily parse(const std::string& text, int d = 32, double alpha = 0.1,
                           bool permissive = false);
};

struct Model {
  ModelFamily family;
  int seed = 0;
  ad::ParamStore store;
  // Parameter ids into `store`.
  int enc_W = -1, enc_b = -1;
  int lstm_W = -1, lstm_b = -1;  // gate order: [input; forget; cell; output]
  int pol_W = -1, pol_b = -1;
  int val_W = -1, val_b = -1;
  int ivn_W[2] = {-1, -1};  // W_A, W_B (family I only)
};

// Weights ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)); biases zero except the
// forget-gate block at +1; intervention operators exactly zero.
Model init_model(const ModelFamily& family, int seed);

// Recurrent carry (h = latent output, c = cell state), zero at episode start.
struct Hidden {
  Vec h, c;
};
Hidden zero_hidden(const ModelFamily& family);

// One-hot input: 9 patch cells x 5 classes, plus the 2-dim context one-hot
// for family L only.
void encode_obs_input(const ModelFamily& family, const Observation& obs, Vec& out);

// phi(x): affine + tanh to feature_dim.
Vec encode_obs(const Model& model, const Observation& obs);

// z' = z + alpha * W_c z for family I; pass-through copy for L and M.
Vec intervene(const Model& model, const Vec& z, Context c);

// pi = softmax(policy head), V = value head.
void policy_value(const Model& model, const Vec& z_post, Eigen::Vector4d& probs, double& value);

struct StepEval {
  Vec z;       // pre-intervention latent (the LSTM output)
  Vec z_post;  // what the heads actually saw
  Eigen::Vector4d probs;
  double value = 0.0;
};

// Full no-grad step: encode -> LSTM -> intervene -> heads. Advances `hidden`
// in place; the carry never sees the intervention.
StepEval forward_step(const Model& model, const Observation& obs, Hidden& hidden);

// LSTM cell on plain vectors (shared by forward_step and the probe's
// single-step counterfactual replay).
void lstm_cell(const Model& model, const Vec& features, const Vec& h_prev, const Vec& c_prev,
               Vec& h_out, Vec& c_out);

struct ActResult {
  Action action = Action::Up;
  double logp = 0.0;
  double value = 0.0;
  StepEval eval;
};

// Greedy mode breaks ties toward the lowest action index; sample mode draws
// from pi using `rng` (required in that mode).
ActResult act(const Model& model, const Observation& obs, Hidden& hidden, bool greedy,
              RngStream* rng);

double log_prob(const Eigen::Vector4d& probs, Action a);

// --- tape-side forward (training) ------------------------------------

struct TapeHidden {
  int h = -1, c = -1;  // node ids
};

struct TapeStep {
  int z = -1, z_post = -1, probs = -1, logp = -1, value = -1;
};

TapeHidden tape_zero_hidden(ad::Tape& tape, const ModelFamily& family);

// Mirrors forward_step on the tape; `hidden` is advanced with the
// un-intervened carry.
TapeStep tape_forward_step(ad::Tape& tape, Model& model, const Observation& obs,
                           TapeHidden& hidden);

}  // namespace ctxgrid
