#include "ctxgrid/model.hpp"

#include <cmath>
#include <stdexcept>

namespace ctxgrid {

std::string ModelFamily::name() const {
  switch (tag) {
    case FamilyTag::L: return "L";
    case FamilyTag::I: return "I";
    case FamilyTag::M: return "M" + std::to_string(m);
  }
  return "?";
}

int64_t ModelFamily::expected_param_count() const {
  const int64_t in = input_dim();
  const int64_t f = feature_dim;
  const int64_t h = recurrent_size();
  int64_t n = f * in + f;              // encoder
  n += 4 * h * (f + h) + 4 * h;        // LSTM
  n += 4 * h + 4 + h + 1;              // heads
  if (tag == FamilyTag::I) n += 2 * static_cast<int64_t>(d) * d;
  return n;
}

ModelFamily ModelFamily::parse(const std::string& text, int d, double alpha, bool permissive) {
  ModelFamily fam;
  fam.d = d;
  fam.alpha = alpha;
  if (text == "L") {
    fam.tag = FamilyTag::L;
    fam.alpha = 0.0;
  } else if (text == "I") {
    fam.tag = FamilyTag::I;
    if (!(alpha > 0.0)) throw std::invalid_argument("family I requires alpha > 0");
  } else if (text.size() > 1 && text[0] == 'M') {
    fam.tag = FamilyTag::M;
    fam.alpha = 0.0;
    try {
      size_t used = 0;
      fam.m = std::stoi(text.substr(1), &used);
      if (used != text.size() - 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw std::invalid_argument("bad family: " + text);
    }
    if (fam.m < 1) throw std::invalid_argument("family M requires m >= 1: " + text);
    if (!permissive && fam.m != 8 && fam.m != 16 && fam.m != 32 && fam.m != 64)
      throw std::invalid_argument("family " + text +
                                  " is outside the benchmark set {M8,M16,M32,M64}; "
                                  "pass the permissive flag to allow it");
  } else {
    throw std::invalid_argument("bad family: " + text);
  }
  return fam;
}

namespace {

void init_uniform(ad::ParamStore& store, int id, RngStream& rng) {
  auto& e = store.entry(id);
  const double k = 1.0 / std::sqrt(static_cast<double>(e.value.cols()));
  rng.fill_uniform(e.value, -k, k);
}

}  // namespace

Model init_model(const ModelFamily& family, int seed) {
  Model model;
  model.family = family;
  model.seed = seed;
  auto& s = model.store;
  const int in = family.input_dim();
  const int f = family.feature_dim;
  const int h = family.recurrent_size();

  model.enc_W = s.add("enc.W", f, in);
  model.enc_b = s.add("enc.b", f, 1);
  model.lstm_W = s.add("lstm.W", 4 * h, f + h);
  model.lstm_b = s.add("lstm.b", 4 * h, 1);
  model.pol_W = s.add("policy.W", kNumActions, h);
  model.pol_b = s.add("policy.b", kNumActions, 1);
  model.val_W = s.add("value.W", 1, h);
  model.val_b = s.add("value.b", 1, 1);
  if (family.tag == FamilyTag::I) {
    model.ivn_W[0] = s.add("ivn.WA", family.d, family.d);
    model.ivn_W[1] = s.add("ivn.WB", family.d, family.d);
    // left at zero: the intervention starts as the exact identity
  }

  RngStream rng(static_cast<uint64_t>(seed), RngStream::Purpose::Init);
  init_uniform(s, model.enc_W, rng);
  init_uniform(s, model.lstm_W, rng);
  init_uniform(s, model.pol_W, rng);
  init_uniform(s, model.val_W, rng);
  s.entry(model.lstm_b).value.block(h, 0, h, 1).setConstant(1.0);  // forget gate

  if (s.total_params() != family.expected_param_count())
    throw std::logic_error("parameter count mismatch for family " + family.name());
  return model;
}

Hidden zero_hidden(const ModelFamily& family) {
  Hidden hid;
  hid.h = Vec::Zero(family.recurrent_size());
  hid.c = Vec::Zero(family.recurrent_size());
  return hid;
}

void encode_obs_input(const ModelFamily& family, const Observation& obs, Vec& out) {
  out.setZero(family.input_dim());
  for (int i = 0; i < kPatchCells; ++i)
    out[i * kNumCellClasses + static_cast<int>(obs.patch[i])] = 1.0;
  if (family.tag == FamilyTag::L)
    out[kPatchCells * kNumCellClasses + static_cast<int>(obs.context)] = 1.0;
}

Vec encode_obs(const Model& model, const Observation& obs) {
  Vec x;
  encode_obs_input(model.family, obs, x);
  Vec f = model.store.entry(model.enc_W).value * x + model.store.entry(model.enc_b).value.col(0);
  ad::kernels::tanh_inplace(f);
  return f;
}

void lstm_cell(const Model& model, const Vec& features, const Vec& h_prev, const Vec& c_prev,
               Vec& h_out, Vec& c_out) {
  const int h = model.family.recurrent_size();
  Vec u(features.size() + h);
  u.head(features.size()) = features;
  u.tail(h) = h_prev;

  Vec gates = model.store.entry(model.lstm_W).value * u +
              model.store.entry(model.lstm_b).value.col(0);
  Vec gi = gates.segment(0, h);
  Vec gf = gates.segment(h, h);
  Vec gc = gates.segment(2 * h, h);
  Vec go = gates.segment(3 * h, h);
  ad::kernels::sigmoid_inplace(gi);
  ad::kernels::sigmoid_inplace(gf);
  ad::kernels::tanh_inplace(gc);
  ad::kernels::sigmoid_inplace(go);

  c_out = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gc);
  Vec ct = c_out;
  ad::kernels::tanh_inplace(ct);
  h_out = go.cwiseProduct(ct);
}

Vec intervene(const Model& model, const Vec& z, Context c) {
  if (model.family.tag != FamilyTag::I) return z;
  const Mat& W = model.store.entry(model.ivn_W[static_cast<int>(c)]).value;
  return z + model.family.alpha * (W * z);
}

void policy_value(const Model& model, const Vec& z_post, Eigen::Vector4d& probs, double& value) {
  Vec logits = model.store.entry(model.pol_W).value * z_post +
               model.store.entry(model.pol_b).value.col(0);
  Vec p;
  ad::kernels::softmax(logits, p);
  probs = p;
  value = (model.store.entry(model.val_W).value * z_post)(0) +
          model.store.entry(model.val_b).value(0, 0);
}

StepEval forward_step(const Model& model, const Observation& obs, Hidden& hidden) {
  StepEval out;
  Vec features = encode_obs(model, obs);
  Vec h_next, c_next;
  lstm_cell(model, features, hidden.h, hidden.c, h_next, c_next);
  hidden.h = h_next;
  hidden.c = c_next;
  out.z = h_next;
  out.z_post = intervene(model, out.z, obs.context);
  policy_value(model, out.z_post, out.probs, out.value);
  return out;
}

double log_prob(const Eigen::Vector4d& probs, Action a) {
  return std::log(probs[static_cast<int>(a)]);
}

ActResult act(const Model& model, const Observation& obs, Hidden& hidden, bool greedy,
              RngStream* rng) {
  ActResult r;
  r.eval = forward_step(model, obs, hidden);
  int idx = 0;
  if (greedy) {
    for (int i = 1; i < kNumActions; ++i)
      if (r.eval.probs[i] > r.eval.probs[idx]) idx = i;
  } else {
    if (rng == nullptr) throw std::invalid_argument("act: sample mode needs an rng");
    idx = rng->categorical(r.eval.probs);
  }
  r.action = static_cast<Action>(idx);
  r.logp = log_prob(r.eval.probs, r.action);
  r.value = r.eval.value;
  return r;
}

TapeHidden tape_zero_hidden(ad::Tape& tape, const ModelFamily& family) {
  TapeHidden hid;
  const Vec zero = Vec::Zero(family.recurrent_size());
  hid.h = tape.constant(zero);
  hid.c = tape.constant(zero);
  return hid;
}

TapeStep tape_forward_step(ad::Tape& tape, Model& model, const Observation& obs,
                           TapeHidden& hidden) {
  auto& s = model.store;
  const int h = model.family.recurrent_size();

  Vec x;
  encode_obs_input(model.family, obs, x);
  int xin = tape.constant(x);
  int features = tape.tanh(tape.add(tape.matvec(s, model.enc_W, xin), tape.leaf(s, model.enc_b)));

  int u = tape.concat(features, hidden.h);
  int gates = tape.add(tape.matvec(s, model.lstm_W, u), tape.leaf(s, model.lstm_b));
  int gi = tape.sigmoid(tape.slice(gates, 0, h));
  int gf = tape.sigmoid(tape.slice(gates, h, h));
  int gc = tape.tanh(tape.slice(gates, 2 * h, h));
  int go = tape.sigmoid(tape.slice(gates, 3 * h, h));
  int c_next = tape.add(tape.hadamard(gf, hidden.c), tape.hadamard(gi, gc));
  int z = tape.hadamard(go, tape.tanh(c_next));
  hidden.h = z;
  hidden.c = c_next;

  TapeStep step;
  step.z = z;
  step.z_post = z;
  if (model.family.tag == FamilyTag::I) {
    const int w = model.ivn_W[static_cast<int>(obs.context)];
    step.z_post = tape.add(z, tape.scale(tape.matvec(s, w, z), model.family.alpha));
  }
  int logits = tape.add(tape.matvec(s, model.pol_W, step.z_post), tape.leaf(s, model.pol_b));
  step.probs = tape.softmax(logits);
  step.logp = tape.log(step.probs);
  step.value = tape.add(tape.matvec(s, model.val_W, step.z_post), tape.leaf(s, model.val_b));
  return step;
}

}  // namespace ctxgrid
