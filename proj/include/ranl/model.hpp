#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ranl/tape.hpp"
#include "ranl/tensor.hpp"
#include "ranl/types.hpp"

namespace ranl {

enum class Architecture {
  ranl,      // attribute-augmented temporal attention with reasoning steps
  vqa_plus,  // mean-pooled frame features multiplied into the question state
};

std::string_view to_string(Architecture a);

struct ModelConfig {
  std::size_t feature_dim = 32;
  std::size_t embed_dim = 16;
  std::size_t hidden = 16;  // per LSTM direction
  std::size_t frames = 8;
  std::size_t vocab_size = 64;
  int reasoning_steps = 1;
  bool use_attributes = true;
  std::size_t answer_classes = 8;
  std::size_t max_decode_len = 4;
  Architecture architecture = Architecture::ranl;

  // Width shared by the question state, fused frames and reasoning state.
  std::size_t joint_dim() const { return 2 * hidden; }

  // Throws ConfigError on any out-of-range field.
  void validate() const;
};

enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kOutputGate = 2, kCandidate = 3 };
inline constexpr std::size_t kGateCount = 4;

struct LstmCellParams {
  std::array<Tensor, kGateCount> wx;  // [H x in]
  std::array<Tensor, kGateCount> wh;  // [H x H]
  std::array<Tensor, kGateCount> b;   // [H]

  static LstmCellParams zeros(std::size_t input, std::size_t hidden);
  std::size_t input_dim() const { return wx[0].cols(); }
  std::size_t hidden_dim() const { return wx[0].rows(); }
};

// Every learned tensor of the network.
struct ModelParams {
  LstmCellParams video_fwd;
  LstmCellParams video_bwd;
  LstmCellParams question_fwd;
  LstmCellParams question_bwd;
  LstmCellParams decoder;        // input E, hidden 2H
  Tensor word_embedding;         // [|W| x E]
  Tensor attribute_embedding;    // [|W| x 2H]
  Tensor attn_query;             // [1 x 2H]
  Tensor attn_frame;             // [1 x 2H]
  Tensor attn_bias;              // [1]
  Tensor cls_weight;             // [C x 2H]
  Tensor cls_bias;               // [C]
  Tensor out_weight;             // [|W| x 2H]
  Tensor out_bias;               // [|W|]
  Tensor pool_weight;            // [2H x D_f], mean-pool baseline only
  Tensor pool_bias;              // [2H], mean-pool baseline only

  static ModelParams zeros(const ModelConfig& config);
  // Zero-mean Gaussian weights with std 0.1, zero biases, forget-gate bias 1.
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);

  // Visits every tensor in a fixed order with its stable name.
  void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
  void for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const;

  std::vector<Tensor*> tensors();
  std::size_t parameter_count() const;
  void zero_grads();
  bool all_finite() const;
  bool same_values(const ModelParams& other) const;
};

// Number of scalar parameters a config implies, computed from dimensions alone.
std::size_t expected_parameter_count(const ModelConfig& config);

// Input view of one (video, question) pair.
struct ExampleView {
  std::string_view id;
  const Tensor* features = nullptr;                          // [N x D_f]
  std::span<const std::vector<TokenId>> attributes;          // N sets
  std::span<const TokenId> question;
  std::span<const TokenId> answer;                           // open-ended target, without <eos>
  ClassId answer_class = 0;
  std::span<const ClassId> candidates;
};

struct EncodedVideo {
  Var states;  // H_v [N x 2H]
  Var fused;   // G [N x 2H]
  bool attributes_used = false;
};

struct AttentionStep {
  Var scores;    // s [N]
  Var weights;   // alpha [N]
  Var attended;  // m [2H]
  Var state;     // z_r [2H]
};

struct Reasoning {
  Var state;  // z_R
  std::vector<AttentionStep> trace;
};

struct LstmState {
  Var h;
  Var c;
};

// Plain-value copy of a reasoning trace, detached from any tape.
struct AttentionTrace {
  struct Step {
    std::vector<double> scores;
    std::vector<double> weights;
    std::vector<double> attended;
    std::vector<double> state;
  };
  std::vector<Step> steps;

  static AttentionTrace from(const Reasoning& reasoning);
  // {"1": [alpha_1 ... alpha_N], "2": [...], ...}
  std::string to_json() const;
};

struct McForward {
  Var logits;         // [C]
  Var probabilities;  // [C]
  Reasoning reasoning;
};

struct OeForward {
  std::vector<Var> logits;  // one [|W|] per decoder position
  std::vector<TokenId> targets;
  Reasoning reasoning;
};

// Binds model parameters onto one tape and builds the network graph. A Net
// built from a mutable ModelParams routes gradients into it; one built from a
// const ModelParams treats every parameter as a constant.
class Net {
 public:
  Net(const ModelConfig& config, ModelParams& params, Tape& tape);
  Net(const ModelConfig& config, const ModelParams& params, Tape& tape);

  const ModelConfig& config() const { return config_; }
  Tape& tape() const { return *tape_; }

  struct CellVars {
    std::array<Var, kGateCount> wx, wh, b;
  };

  LstmState lstm_step(const CellVars& cell, Var x, Var h_prev, Var c_prev) const;
  // Row t is [h_t^fwd, h_{L+1-t}^bwd]; the backward cell reads the sequence reversed.
  Var bilstm_encode(std::span<const Var> sequence, const CellVars& fwd, const CellVars& bwd) const;

  Var encode_question(std::span<const TokenId> tokens) const;
  Var attribute_rep(std::span<const TokenId> attributes) const;
  Var fuse(Var state, Var attribute) const;
  EncodedVideo encode_video(const Tensor& features, std::span<const std::vector<TokenId>> attributes) const;

  std::pair<Var, Var> attention_scores(Var query, Var fused) const;
  Var attend(Var weights, Var fused) const;
  Reasoning reason(Var question, const EncodedVideo& video, int steps) const;

  // Mean-pool baseline joint representation: (W_p mean(v) + b_p) * h_q.
  Var pooled_joint(const Tensor& features, Var question) const;

  Var class_logits(Var joint) const;
  Var classify(Var joint) const;

  // Teacher-forced decoder logits for inputs <bos>, y_1 .. y_L; L+1 positions.
  std::vector<Var> decoder_logits(Var joint, std::span<const TokenId> answer) const;
  // Greedy decoding from h_0 = joint, c_0 = 0; excludes <bos>/<eos>.
  std::vector<TokenId> decode_answer(Var joint, std::size_t max_len) const;

  // Everything up to the answer head: z_R (or the pooled joint state).
  Reasoning joint_representation(const ExampleView& example) const;
  McForward forward_mc(const ExampleView& example) const;
  OeForward forward_oe(const ExampleView& example) const;

  const CellVars& video_fwd() const { return video_fwd_; }
  const CellVars& video_bwd() const { return video_bwd_; }
  const CellVars& question_fwd() const { return question_fwd_; }
  const CellVars& question_bwd() const { return question_bwd_; }
  const CellVars& decoder() const { return decoder_; }
  // Every bound parameter, in ModelParams::for_each order.
  const std::vector<Var>& parameter_vars() const { return parameters_; }

 private:
  void bind(const ModelParams& params, ModelParams* mutable_params);
  Var attribute_row(TokenId id) const;
  LstmState decoder_start(Var joint) const;
  Var decoder_step_logits(LstmState& state, TokenId input) const;

  ModelConfig config_;
  Tape* tape_;
  CellVars video_fwd_, video_bwd_, question_fwd_, question_bwd_, decoder_;
  Var word_embedding_, attribute_embedding_;
  Var attn_query_, attn_frame_, attn_bias_;
  Var cls_weight_, cls_bias_, out_weight_, out_bias_;
  Var pool_weight_, pool_bias_;
  std::vector<Var> parameters_;
};

// Parameters plus the config that shaped them.
struct Model {
  ModelConfig config;
  ModelParams params;

  static Model create(const ModelConfig& config, std::uint64_t seed);
};

// Convenience inference wrappers; each uses a private tape.
struct McPrediction {
  ClassId predicted = 0;
  std::vector<double> probabilities;
  AttentionTrace trace;
};

// argmax over the example's candidates (all classes when none are given).
McPrediction predict_mc(const Model& model, const ExampleView& example);

struct OePrediction {
  std::vector<TokenId> tokens;
  AttentionTrace trace;
};

OePrediction predict_oe(const Model& model, const ExampleView& example);

}  // namespace ranl
