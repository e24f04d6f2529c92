#include "ranl/model.hpp"

#include <algorithm>
#include "json.hpp"

#include "ranl/errors.hpp"
#include "ranl/ops.hpp"
#include "ranl/rng.hpp"

namespace ranl {

std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::ranl:
      return "ranl";
    case Architecture::vqa_plus:
      return "vqa+";
  }
  return "?";
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be >= 1");
  };
  positive(feature_dim, "feature_dim");
  positive(embed_dim, "embed_dim");
  positive(hidden, "hidden");
  positive(frames, "frames");
  positive(max_decode_len, "max_decode_len");
  if (vocab_size <= kReservedTokens) throw ConfigError("vocab_size must exceed the 4 reserved tokens");
  if (answer_classes < 2) throw ConfigError("answer_classes must be >= 2");
  if (reasoning_steps < 0) throw ConfigError("reasoning_steps must be >= 0");
}

LstmCellParams LstmCellParams::zeros(std::size_t input, std::size_t hidden) {
  LstmCellParams cell;
  for (std::size_t g = 0; g < kGateCount; ++g) {
    cell.wx[g] = Tensor(Shape::matrix(hidden, input));
    cell.wh[g] = Tensor(Shape::matrix(hidden, hidden));
    cell.b[g] = Tensor(Shape::vector(hidden));
  }
  return cell;
}

namespace {

constexpr const char* kGateNames[kGateCount] = {"i", "f", "o", "g"};

template <typename Params, typename Fn>
void visit_params(Params& p, Fn&& fn) {
  auto cell = [&](const std::string& prefix, auto& c) {
    for (std::size_t g = 0; g < kGateCount; ++g) {
      fn(prefix + ".wx." + kGateNames[g], c.wx[g]);
      fn(prefix + ".wh." + kGateNames[g], c.wh[g]);
      fn(prefix + ".b." + kGateNames[g], c.b[g]);
    }
  };
  cell("video.fwd", p.video_fwd);
  cell("video.bwd", p.video_bwd);
  cell("question.fwd", p.question_fwd);
  cell("question.bwd", p.question_bwd);
  cell("decoder", p.decoder);
  fn("word_embedding", p.word_embedding);
  fn("attribute_embedding", p.attribute_embedding);
  fn("attn.query", p.attn_query);
  fn("attn.frame", p.attn_frame);
  fn("attn.bias", p.attn_bias);
  fn("cls.weight", p.cls_weight);
  fn("cls.bias", p.cls_bias);
  fn("out.weight", p.out_weight);
  fn("out.bias", p.out_bias);
  if (p.pool_weight.size() > 0) {
    fn("pool.weight", p.pool_weight);
    fn("pool.bias", p.pool_bias);
  }
}

bool is_bias(const std::string& name) {
  return name.find(".b.") != std::string::npos || name.ends_with("bias");
}

}  // namespace

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  const std::size_t h = config.hidden;
  const std::size_t j = config.joint_dim();
  const std::size_t w = config.vocab_size;
  ModelParams p;
  p.video_fwd = LstmCellParams::zeros(config.feature_dim, h);
  p.video_bwd = LstmCellParams::zeros(config.feature_dim, h);
  p.question_fwd = LstmCellParams::zeros(config.embed_dim, h);
  p.question_bwd = LstmCellParams::zeros(config.embed_dim, h);
  p.decoder = LstmCellParams::zeros(config.embed_dim, j);
  p.word_embedding = Tensor(Shape::matrix(w, config.embed_dim));
  p.attribute_embedding = Tensor(Shape::matrix(w, j));
  p.attn_query = Tensor(Shape::matrix(1, j));
  p.attn_frame = Tensor(Shape::matrix(1, j));
  p.attn_bias = Tensor(Shape::vector(1));
  p.cls_weight = Tensor(Shape::matrix(config.answer_classes, j));
  p.cls_bias = Tensor(Shape::vector(config.answer_classes));
  p.out_weight = Tensor(Shape::matrix(w, j));
  p.out_bias = Tensor(Shape::vector(w));
  if (config.architecture == Architecture::vqa_plus) {
    p.pool_weight = Tensor(Shape::matrix(j, config.feature_dim));
    p.pool_bias = Tensor(Shape::vector(j));
  }
  return p;
}

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = zeros(config);
  Rng rng(seed);
  p.for_each([&](const std::string& name, Tensor& t) {
    if (is_bias(name)) {
      if (name.ends_with(".b.f")) std::fill(t.values().begin(), t.values().end(), 1.0);
      return;
    }
    for (double& v : t.values()) v = rng.normal(0.0, 0.1);
  });
  return p;
}

void ModelParams::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
  visit_params(*this, fn);
}

void ModelParams::for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const {
  visit_params(*this, fn);
}

std::vector<Tensor*> ModelParams::tensors() {
  std::vector<Tensor*> out;
  for_each([&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

void ModelParams::zero_grads() {
  for_each([](const std::string&, Tensor& t) {
    t.enable_grad();
    t.zero_grad();
  });
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&](const std::string&, const Tensor& t) { ok = ok && t.all_finite(); });
  return ok;
}

bool ModelParams::same_values(const ModelParams& other) const {
  std::vector<const Tensor*> mine, theirs;
  for_each([&](const std::string&, const Tensor& t) { mine.push_back(&t); });
  other.for_each([&](const std::string&, const Tensor& t) { theirs.push_back(&t); });
  if (mine.size() != theirs.size()) return false;
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (!mine[i]->same_values(*theirs[i])) return false;
  }
  return true;
}

std::size_t expected_parameter_count(const ModelConfig& c) {
  const std::size_t h = c.hidden;
  const std::size_t j = c.joint_dim();
  auto lstm = [](std::size_t in, std::size_t hid) { return 4 * (hid * in + hid * hid + hid); };
  std::size_t n = 2 * lstm(c.feature_dim, h) + 2 * lstm(c.embed_dim, h) + lstm(c.embed_dim, j);
  n += c.vocab_size * c.embed_dim + c.vocab_size * j;  // embeddings
  n += 2 * j + 1;                                      // attention
  n += c.answer_classes * (j + 1);                     // classifier
  n += c.vocab_size * (j + 1);                         // decoder output
  if (c.architecture == Architecture::vqa_plus) n += j * (c.feature_dim + 1);
  return n;
}

AttentionTrace AttentionTrace::from(const Reasoning& reasoning) {
  auto copy = [](Var v) {
    const auto values = v.value().values();
    return std::vector<double>(values.begin(), values.end());
  };
  AttentionTrace trace;
  for (const AttentionStep& step : reasoning.trace) {
    trace.steps.push_back({copy(step.scores), copy(step.weights), copy(step.attended), copy(step.state)});
  }
  return trace;
}

std::string AttentionTrace::to_json() const {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (std::size_t r = 0; r < steps.size(); ++r) doc[std::to_string(r + 1)] = steps[r].weights;
  return doc.dump();
}

// ---------------------------------------------------------------------------

Net::Net(const ModelConfig& config, ModelParams& params, Tape& tape) : config_(config), tape_(&tape) {
  bind(params, &params);
}

Net::Net(const ModelConfig& config, const ModelParams& params, Tape& tape) : config_(config), tape_(&tape) {
  bind(params, nullptr);
}

void Net::bind(const ModelParams& params, ModelParams* mutable_params) {
  config_.validate();
  // `mutable_params` is either null or the same object as `params`.
  auto bind_one = [&](const Tensor& t) -> Var {
    Var v = mutable_params == nullptr ? tape_->constant_ref(t) : tape_->param(const_cast<Tensor&>(t));
    parameters_.push_back(v);
    return v;
  };
  auto bind_cell = [&](const LstmCellParams& c) {
    CellVars v;
    for (std::size_t g = 0; g < kGateCount; ++g) {
      v.wx[g] = bind_one(c.wx[g]);
      v.wh[g] = bind_one(c.wh[g]);
      v.b[g] = bind_one(c.b[g]);
    }
    return v;
  };
  video_fwd_ = bind_cell(params.video_fwd);
  video_bwd_ = bind_cell(params.video_bwd);
  question_fwd_ = bind_cell(params.question_fwd);
  question_bwd_ = bind_cell(params.question_bwd);
  decoder_ = bind_cell(params.decoder);
  word_embedding_ = bind_one(params.word_embedding);
  attribute_embedding_ = bind_one(params.attribute_embedding);
  attn_query_ = bind_one(params.attn_query);
  attn_frame_ = bind_one(params.attn_frame);
  attn_bias_ = bind_one(params.attn_bias);
  cls_weight_ = bind_one(params.cls_weight);
  cls_bias_ = bind_one(params.cls_bias);
  out_weight_ = bind_one(params.out_weight);
  out_bias_ = bind_one(params.out_bias);
  if (config_.architecture == Architecture::vqa_plus) {
    if (params.pool_weight.size() == 0) throw ConfigError("mean-pool baseline requires pool parameters");
    pool_weight_ = bind_one(params.pool_weight);
    pool_bias_ = bind_one(params.pool_bias);
  }
  if (word_embedding_.shape() != Shape::matrix(config_.vocab_size, config_.embed_dim) ||
      cls_weight_.shape() != Shape::matrix(config_.answer_classes, config_.joint_dim()) ||
      video_fwd_.wx[0].shape() != Shape::matrix(config_.hidden, config_.feature_dim)) {
    throw DimensionError("model parameters do not match the model config");
  }
}

LstmState Net::lstm_step(const CellVars& cell, Var x, Var h_prev, Var c_prev) const {
  std::array<Var, kGateCount> act;
  for (std::size_t g = 0; g < kGateCount; ++g) {
    Var pre = ops::add(ops::affine(cell.wx[g], x, cell.b[g]), ops::matvec(cell.wh[g], h_prev));
    act[g] = g == kCandidate ? ops::tanh_map(pre) : ops::sigmoid(pre);
  }
  Var c = ops::add(ops::hadamard(act[kForgetGate], c_prev), ops::hadamard(act[kInputGate], act[kCandidate]));
  Var h = ops::hadamard(act[kOutputGate], ops::tanh_map(c));
  return {h, c};
}

Var Net::bilstm_encode(std::span<const Var> sequence, const CellVars& fwd, const CellVars& bwd) const {
  if (sequence.empty()) throw DataError("bilstm_encode: empty sequence");
  const std::size_t n = sequence.size();
  const std::size_t h = fwd.wh[0].shape().rows;
  std::vector<Var> forward(n), backward(n);
  LstmState state{tape_->constant(Tensor::zeros(h)), tape_->constant(Tensor::zeros(h))};
  for (std::size_t t = 0; t < n; ++t) {
    state = lstm_step(fwd, sequence[t], state.h, state.c);
    forward[t] = state.h;
  }
  state = {tape_->constant(Tensor::zeros(h)), tape_->constant(Tensor::zeros(h))};
  for (std::size_t t = n; t-- > 0;) {
    state = lstm_step(bwd, sequence[t], state.h, state.c);
    backward[t] = state.h;
  }
  std::vector<Var> rows(n);
  for (std::size_t t = 0; t < n; ++t) rows[t] = ops::concat(forward[t], backward[t]);
  return ops::stack_rows(rows);
}

Var Net::encode_question(std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw DataError("encode_question: empty question");
  std::vector<Var> embedded;
  embedded.reserve(tokens.size());
  for (TokenId id : tokens) embedded.push_back(ops::embed_lookup(word_embedding_, id));
  Var states = bilstm_encode(embedded, question_fwd_, question_bwd_);
  // Final forward state (last row) joined with the final backward state,
  // which sits at row 0 after consuming the whole reversed question.
  const std::size_t h = config_.hidden;
  Var last_forward = ops::slice(ops::row(states, tokens.size() - 1), 0, h);
  Var last_backward = ops::slice(ops::row(states, 0), h, h);
  return ops::concat(last_forward, last_backward);
}

Var Net::attribute_row(TokenId id) const { return ops::embed_lookup(attribute_embedding_, id); }

Var Net::attribute_rep(std::span<const TokenId> attributes) const {
  if (attributes.empty()) return tape_->constant(Tensor::ones(config_.joint_dim()));
  std::vector<Var> rows;
  rows.reserve(attributes.size());
  for (TokenId id : attributes) rows.push_back(attribute_row(id));
  return ops::mean_rows(ops::stack_rows(rows));
}

Var Net::fuse(Var state, Var attribute) const { return ops::hadamard(state, attribute); }

EncodedVideo Net::encode_video(const Tensor& features, std::span<const std::vector<TokenId>> attributes) const {
  if (features.rank() != 2 || features.cols() != config_.feature_dim) {
    throw DimensionError("encode_video: features " + features.shape().str() + " but feature_dim is " +
                         std::to_string(config_.feature_dim));
  }
  if (features.rows() != config_.frames) {
    throw DimensionError("encode_video: " + std::to_string(features.rows()) + " frames but config expects " +
                         std::to_string(config_.frames));
  }
  if (config_.use_attributes && attributes.size() != features.rows()) {
    throw DimensionError("encode_video: " + std::to_string(attributes.size()) + " attribute sets for " +
                         std::to_string(features.rows()) + " frames");
  }
  std::vector<Var> frames;
  frames.reserve(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto r = features.row(i);
    frames.push_back(tape_->constant(Tensor::vector(std::vector<double>(r.begin(), r.end()))));
  }
  EncodedVideo video;
  video.states = bilstm_encode(frames, video_fwd_, video_bwd_);
  if (!config_.use_attributes) {
    video.fused = video.states;
    return video;
  }
  std::vector<Var> fused(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    fused[i] = fuse(ops::row(video.states, i), attribute_rep(attributes[i]));
  }
  video.fused = ops::stack_rows(fused);
  video.attributes_used = true;
  return video;
}

std::pair<Var, Var> Net::attention_scores(Var query, Var fused) const {
  Var query_term = ops::affine(attn_query_, query, attn_bias_);
  Var frame_term = ops::matvec(fused, ops::flatten(attn_frame_));
  Var scores = ops::tanh_map(ops::add_scalar(frame_term, query_term));
  return {scores, ops::softmax_vec(scores)};
}

Var Net::attend(Var weights, Var fused) const { return ops::vecmat(weights, fused); }

Reasoning Net::reason(Var question, const EncodedVideo& video, int steps) const {
  Reasoning out;
  out.state = question;
  for (int r = 0; r < steps; ++r) {
    auto [scores, weights] = attention_scores(out.state, video.fused);
    Var attended = attend(weights, video.fused);
    out.state = ops::add(out.state, attended);
    out.trace.push_back({scores, weights, attended, out.state});
  }
  return out;
}

Var Net::pooled_joint(const Tensor& features, Var question) const {
  if (!pool_weight_.valid()) throw ConfigError("pooled_joint requires the mean-pool architecture");
  if (features.rank() != 2 || features.cols() != config_.feature_dim) {
    throw DimensionError("pooled_joint: features " + features.shape().str());
  }
  Var pooled = ops::mean_rows(tape_->constant_ref(features));
  return ops::hadamard(ops::affine(pool_weight_, pooled, pool_bias_), question);
}

Var Net::class_logits(Var joint) const { return ops::affine(cls_weight_, joint, cls_bias_); }

Var Net::classify(Var joint) const { return ops::softmax_vec(class_logits(joint)); }

LstmState Net::decoder_start(Var joint) const {
  return {joint, tape_->constant(Tensor::zeros(config_.joint_dim()))};
}

Var Net::decoder_step_logits(LstmState& state, TokenId input) const {
  state = lstm_step(decoder_, ops::embed_lookup(word_embedding_, input), state.h, state.c);
  return ops::affine(out_weight_, state.h, out_bias_);
}

std::vector<Var> Net::decoder_logits(Var joint, std::span<const TokenId> answer) const {
  LstmState state = decoder_start(joint);
  std::vector<Var> logits;
  logits.reserve(answer.size() + 1);
  logits.push_back(decoder_step_logits(state, kBosId));
  for (TokenId id : answer) logits.push_back(decoder_step_logits(state, id));
  return logits;
}

std::vector<TokenId> Net::decode_answer(Var joint, std::size_t max_len) const {
  LstmState state = decoder_start(joint);
  std::vector<TokenId> out;
  TokenId input = kBosId;
  while (out.size() < max_len) {
    const auto scores = decoder_step_logits(state, input).value().values();
    const auto best = static_cast<TokenId>(std::max_element(scores.begin(), scores.end()) - scores.begin());
    if (best == kEosId) break;
    out.push_back(best);
    input = best;
  }
  return out;
}

Reasoning Net::joint_representation(const ExampleView& example) const {
  if (example.features == nullptr) throw DataError("example " + std::string(example.id) + " has no features");
  try {
    Var question = encode_question(example.question);
    if (config_.architecture == Architecture::vqa_plus) {
      return Reasoning{pooled_joint(*example.features, question), {}};
    }
    EncodedVideo video = encode_video(*example.features, example.attributes);
    return reason(question, video, config_.reasoning_steps);
  } catch (const IndexError& e) {
    throw IndexError(std::string(e.what()) + " (instance " + std::string(example.id) + ")");
  } catch (const DimensionError& e) {
    throw DimensionError(std::string(e.what()) + " (instance " + std::string(example.id) + ")");
  } catch (const DataError& e) {
    throw DataError(std::string(e.what()) + " (instance " + std::string(example.id) + ")");
  }
}

McForward Net::forward_mc(const ExampleView& example) const {
  McForward out;
  out.reasoning = joint_representation(example);
  out.logits = class_logits(out.reasoning.state);
  out.probabilities = ops::softmax_vec(out.logits);
  return out;
}

OeForward Net::forward_oe(const ExampleView& example) const {
  OeForward out;
  out.reasoning = joint_representation(example);
  out.logits = decoder_logits(out.reasoning.state, example.answer);
  out.targets.assign(example.answer.begin(), example.answer.end());
  out.targets.push_back(kEosId);
  return out;
}

Model Model::create(const ModelConfig& config, std::uint64_t seed) {
  return Model{config, ModelParams::initialize(config, seed)};
}

McPrediction predict_mc(const Model& model, const ExampleView& example) {
  Tape tape;
  Net net(model.config, model.params, tape);
  McForward fwd = net.forward_mc(example);
  McPrediction out;
  const auto probs = fwd.probabilities.value().values();
  out.probabilities.assign(probs.begin(), probs.end());
  std::vector<ClassId> candidates(example.candidates.begin(), example.candidates.end());
  if (candidates.empty()) {
    for (ClassId c = 0; c < probs.size(); ++c) candidates.push_back(c);
  }
  const auto logits = fwd.logits.value().values();
  out.predicted = candidates.front();
  for (ClassId c : candidates) {
    if (c >= logits.size()) throw IndexError("candidate class " + std::to_string(c) + " out of range");
    if (logits[c] > logits[out.predicted]) out.predicted = c;
  }
  out.trace = AttentionTrace::from(fwd.reasoning);
  return out;
}

OePrediction predict_oe(const Model& model, const ExampleView& example) {
  Tape tape;
  Net net(model.config, model.params, tape);
  Reasoning reasoning = net.joint_representation(example);
  OePrediction out;
  out.tokens = net.decode_answer(reasoning.state, model.config.max_decode_len);
  out.trace = AttentionTrace::from(reasoning);
  return out;
}

}  // namespace ranl
