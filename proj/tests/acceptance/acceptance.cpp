// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero
// if any measured criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ranl/checkpoint.hpp"
#include "ranl/diagnostics.hpp"
#include "ranl/ops.hpp"
#include "ranl/rng.hpp"
#include "ranl/synth.hpp"
#include "ranl/train.hpp"

using namespace ranl;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kGradTol = 1e-4;
constexpr double kGradEps = 1e-5;
constexpr double kGradSeconds = 60.0;
constexpr int kAttentionPasses = 1000;
constexpr double kAlphaSumTol = 1e-9;
constexpr double kUniformTol = 1e-12;
constexpr int kMetricCases = 200;
constexpr int kAdagradSteps = 10;
constexpr double kAdagradTol = 1e-12;
constexpr double kLearnTarget = 0.90;
constexpr double kLearnSeconds = 300.0;
constexpr int kLearnEpochs = 30;
constexpr double kDeskLearningRate = 0.05;

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Model with every tensor (biases too) drawn at std 0.5, so attention is far
// from uniform.
Model random_model(const ModelConfig& c, std::uint64_t seed) {
  Model m = Model::create(c, seed);
  Rng rng(seed ^ 0x5eed);
  for (Tensor* t : m.params.tensors()) {
    for (double& x : t->values()) x = 0.5 * rng.normal();
  }
  return m;
}

ModelConfig desk_config(const Dataset& d, int steps) {
  ModelConfig c;  // N=8, D_f=32, E=16, H=16
  c.vocab_size = d.lexicon.vocab.size();
  c.answer_classes = d.lexicon.classes.size();
  c.reasoning_steps = steps;
  return c;
}

TrainConfig desk_train(std::uint64_t seed) {
  TrainConfig tc;
  tc.learning_rate = kDeskLearningRate;
  tc.epochs = kLearnEpochs;
  tc.seed = seed;
  return tc;
}

Dataset desk_data(RuleKind kind, std::uint64_t seed) {
  SynthOptions o;
  o.sizes = SplitSizes{2000, 300, 0};
  o.seed = seed;
  return synth_generate(PlantedRule::standard(kind), o);
}

// ---------------------------------------------------------------------------

void reference_corpus() {
  // The original corpus is not distributed, so absolute accuracies on it
  // cannot be measured. Reported as a failure and excluded from the exit code.
  std::printf(
      "FAIL reference-corpus-accuracy: not reproducible, the original video QA corpus is unavailable; "
      "planted-task criteria below substitute (excluded from exit status)\n");
}

void gradient_integrity() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t checked = 0;
  bool passed = true;
  for (Task task : {Task::mc, Task::oe}) {
    const GradCheckReport r = check_model_gradients(tiny_config(), task, 1, kGradEps, kGradTol);
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    passed = passed && r.passed;
  }
  const double secs = seconds_since(t0);
  report(passed && worst <= kGradTol && secs < kGradSeconds, "gradient-integrity",
         fmt("tiny config, mc+oe, %zu entries, max rel error %.3e (tol %.0e), %.2fs (limit %.0fs)", checked, worst,
             kGradTol, secs, kGradSeconds));
}

void attention_contract() {
  double worst_sum = 0.0;
  double min_alpha = 1.0;
  std::size_t vectors = 0;
  for (int pass = 0; pass < kAttentionPasses; ++pass) {
    ModelConfig c = pass % 2 ? small_config() : tiny_config();
    c.reasoning_steps = 1 + pass % 3;
    c.frames = 1 + pass % 7;
    const Model m = random_model(c, 1000 + pass);
    const VideoInstance v = random_instance(c, 5000 + pass);
    const AttentionTrace trace = pass % 4 == 3 ? predict_oe(m, v.example(0)).trace : predict_mc(m, v.example(0)).trace;
    for (const auto& step : trace.steps) {
      double sum = 0.0;
      for (double a : step.weights) {
        sum += a;
        min_alpha = std::min(min_alpha, a);
      }
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      ++vectors;
    }
  }

  double worst_uniform = 0.0;
  for (int pass = 0; pass < 100; ++pass) {
    ModelConfig c = small_config();
    c.frames = 2 + pass % 6;
    Model m = random_model(c, 9000 + pass);
    for (double& x : m.params.attn_frame.values()) x = 0.0;
    const VideoInstance v = random_instance(c, 9500 + pass);
    for (const auto& step : predict_mc(m, v.example(0)).trace.steps) {
      for (double a : step.weights) worst_uniform = std::max(worst_uniform, std::abs(a - 1.0 / c.frames));
    }
  }
  report(worst_sum <= kAlphaSumTol && min_alpha >= 0.0 && worst_uniform <= kUniformTol, "attention-contract",
         fmt("%d passes, %zu alpha vectors, max |sum-1| %.2e (tol %.0e), min alpha %.3e; zero frame weights: "
             "max |alpha-1/N| %.2e (tol %.0e)",
             kAttentionPasses, vectors, worst_sum, kAlphaSumTol, min_alpha, worst_uniform, kUniformTol));
}

void reasoning_identities() {
  bool r0 = true, zero_frames = true, no_attr = true;
  for (int trial = 0; trial < 20; ++trial) {
    ModelConfig c = small_config();
    const Model m = random_model(c, 300 + trial);
    VideoInstance v = random_instance(c, 400 + trial);

    {
      Tape t;
      Net net(c, m.params, t);
      const Var hq = net.encode_question(v.qa[0].question);
      const Reasoning r = net.reason(hq, net.encode_video(v.features, v.attributes), 0);
      r0 = r0 && r.state.value().same_values(hq.value()) && r.trace.empty();
    }
    for (int R = 1; R <= 3; ++R) {
      Tape t;
      Net net(c, m.params, t);
      const Var hq = net.encode_question(v.qa[0].question);
      EncodedVideo video;
      video.fused = video.states = t.constant(Tensor(Shape::matrix(c.frames, c.joint_dim())));
      zero_frames = zero_frames && net.reason(hq, video, R).state.value().same_values(hq.value());
    }
    {
      ModelConfig off = c;
      off.use_attributes = false;
      VideoInstance empty = v;
      for (auto& a : empty.attributes) a.clear();
      const Model m_off{off, m.params};
      const McPrediction a = predict_mc(m_off, v.example(0));
      const McPrediction b = predict_mc(m, empty.example(0));
      no_attr = no_attr && a.probabilities == b.probabilities && a.trace.steps.size() == b.trace.steps.size();
      for (std::size_t r = 0; r < a.trace.steps.size() && no_attr; ++r) {
        no_attr = a.trace.steps[r].state == b.trace.steps[r].state && a.trace.steps[r].weights == b.trace.steps[r].weights;
      }
      no_attr = no_attr && predict_oe(m_off, v.example(0)).tokens == predict_oe(m, empty.example(0)).tokens;
    }
  }
  report(r0 && zero_frames && no_attr, "reasoning-identities",
         fmt("20 trials, bit-exact: R=0 returns question state %s; zero fused frames keep it for R=1..3 %s; "
             "attributes off == empty attribute sets %s",
             r0 ? "yes" : "NO", zero_frames ? "yes" : "NO", no_attr ? "yes" : "NO"));
}

// Brute force: correct iff the answer and output agree at some position among
// the first K after padding both to a common length.
int brute_force_score(const std::vector<TokenId>& y, const std::vector<TokenId>& o, std::size_t K) {
  const std::size_t len = std::max(y.size(), o.size());
  std::vector<TokenId> yp(len, kPadId), op(len, kPadId);
  std::copy(y.begin(), y.end(), yp.begin());
  std::copy(o.begin(), o.end(), op.begin());
  bool all_differ = true;
  for (std::size_t i = 0; i < K; ++i) all_differ = all_differ && yp[i] != op[i];
  return all_differ ? 0 : 1;
}

void metric_oracle() {
  Rng rng(77);
  int agree = 0, hits = 0;
  for (int i = 0; i < kMetricCases; ++i) {
    ModelConfig c = tiny_config();
    c.max_decode_len = 1 + rng.below(4);
    Model m = random_model(c, 700 + i);
    for (double& x : m.params.out_bias.values()) x = 3.0 * rng.normal();
    VideoInstance v = random_instance(c, 800 + i);
    const std::vector<TokenId> o = predict_oe(m, v.example(0)).tokens;

    // Answer built from the output with random edits so both outcomes occur.
    std::vector<TokenId> y(1 + rng.below(4));
    for (std::size_t j = 0; j < y.size(); ++j) {
      const bool copy = j < o.size() && rng.below(3) == 0;
      y[j] = copy ? o[j] : kReservedTokens + rng.below(c.vocab_size - kReservedTokens);
    }
    const std::size_t K = 1 + rng.below(y.size());
    v.qa[0].answer = y;
    const TaskMetrics got = evaluate_accuracy(m, {v}, Task::oe, K);
    const int expected = brute_force_score(y, o, K);
    agree += got.overall.accuracy == static_cast<double>(expected);
    hits += expected;
  }
  report(agree == kMetricCases, "metric-oracle",
         fmt("%d/%d randomized (answer, output, K) cases match brute force exactly (%d correct, %d incorrect)", agree,
             kMetricCases, hits, kMetricCases - hits));
}

void optimizer_oracle() {
  // f(theta) = a/2 (theta - c)^2, gradient from the tape, step from AdaGrad.
  const double a = 3.0, c = 1.5, lr = 0.1, eps = 1e-8;
  Tensor theta = Tensor::vector({-2.0});
  std::vector<double> acc = {0.0};
  double hand_theta = -2.0, hand_acc = 0.0, worst = 0.0;
  for (int step = 0; step < kAdagradSteps; ++step) {
    theta.zero_grad();
    {
      Tape t;
      const Var v = t.param(theta);
      const Var d = ops::add(v, t.constant(Tensor::vector({-c})));
      t.backward(ops::scale(ops::sum_squares(d), a / 2));
    }
    adagrad_update(theta.values(), theta.grad(), acc, lr, eps);
    const double g = a * (hand_theta - c);
    hand_acc += g * g;
    hand_theta -= lr * g / (std::sqrt(hand_acc) + eps);
    worst = std::max(worst, std::abs(theta[0] - hand_theta));
  }
  report(worst <= kAdagradTol, "optimizer-oracle",
         fmt("%d AdaGrad steps on a 1-D quadratic, max |theta - recurrence| %.2e (tol %.0e)", kAdagradSteps, worst,
             kAdagradTol));
}

void learnability() {
  const Dataset d = desk_data(RuleKind::one_hop, 1);

  std::map<ClassId, std::size_t> counts;
  for (const auto& v : d.splits.train) ++counts[v.qa[0].answer_class];
  const ClassId majority =
      std::max_element(counts.begin(), counts.end(), [](auto& x, auto& y) { return x.second < y.second; })->first;
  std::size_t majority_hits = 0;
  for (const auto& v : d.splits.valid) majority_hits += v.qa[0].answer_class == majority;
  const double baseline = double(majority_hits) / d.splits.valid.size();
  const double baseline_limit = 1.0 / d.lexicon.classes.size() + 0.05;

  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult r = train(Model::create(desk_config(d, 1), 1), d, desk_train(1), Task::mc);
  const double secs = seconds_since(t0);
  report(r.best_val_accuracy >= kLearnTarget && secs < kLearnSeconds && baseline <= baseline_limit &&
             d.lexicon.classes.size() == 8,
         "one-hop-learnability",
         fmt("2000/300 instances, C=%zu, R=1: validation accuracy %.4f at epoch %d (target %.2f within %d epochs), "
             "%.1fs (limit %.0fs); majority baseline %.4f (limit %.3f)",
             d.lexicon.classes.size(), r.best_val_accuracy, r.best_epoch, kLearnTarget, kLearnEpochs, secs,
             kLearnSeconds, baseline, baseline_limit));
}

void reasoning_depth() {
  std::map<int, std::vector<double>> acc;
  std::string detail;
  for (int steps : {1, 3}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const Dataset d = desk_data(RuleKind::two_hop, seed);
      const TrainResult r = train(Model::create(desk_config(d, steps), seed), d, desk_train(seed), Task::mc);
      acc[steps].push_back(r.best_val_accuracy);
      detail += fmt("R=%d seed %d: %.4f; ", steps, int(seed), r.best_val_accuracy);
    }
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double m1 = median(acc[1]), m3 = median(acc[3]);
  report(m3 >= m1, "reasoning-depth-ordering",
         detail + fmt("median R=3 %.4f vs R=1 %.4f (margin %+.4f)", m3, m1, m3 - m1));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void reproducibility() {
  SynthOptions o;
  o.sizes = SplitSizes{150, 50, 0};
  o.seed = 12;
  o.frames = 5;
  o.feature_dim = 8;
  const Dataset d = synth_generate(PlantedRule::standard(RuleKind::two_hop), o);
  ModelConfig c = desk_config(d, 2);
  c.frames = 5;
  c.feature_dim = 8;
  c.hidden = 8;
  c.embed_dim = 8;
  TrainConfig tc = desk_train(12);
  tc.epochs = 3;

  bool curves = true;
  for (Task task : {Task::mc, Task::oe}) {
    const TrainResult a = train(Model::create(c, 12), d, tc, task);
    const TrainResult b = train(Model::create(c, 12), d, tc, task);
    curves = curves && a.step_losses.size() == b.step_losses.size() &&
             std::memcmp(a.step_losses.data(), b.step_losses.data(), a.step_losses.size() * sizeof(double)) == 0 &&
             a.report.curve_csv() == b.report.curve_csv();
  }

  const fs::path dir = fs::temp_directory_path() / "ranl_acceptance";
  fs::remove_all(dir);
  bool infer_same = true;
  for (Task task : {Task::mc, Task::oe}) {
    const TrainResult r = train(Model::create(c, 13), d, tc, task);
    const fs::path path = dir / (std::string(to_string(task)) + ".ckpt");
    save_checkpoint(path, Checkpoint{r.best.config, r.best.params, d.lexicon, task});
    const Model loaded = load_checkpoint(path).model();
    for (const auto& v : d.splits.valid) {
      if (task == Task::mc) {
        const McPrediction x = predict_mc(r.best, v.example(0)), y = predict_mc(loaded, v.example(0));
        infer_same = infer_same && x.predicted == y.predicted && x.probabilities == y.probabilities;
      } else {
        infer_same = infer_same && predict_oe(r.best, v.example(0)).tokens == predict_oe(loaded, v.example(0)).tokens;
      }
    }
  }

  bool synth_same = true;
  for (RuleKind kind : {RuleKind::one_hop, RuleKind::two_hop}) {
    SynthOptions s;
    s.count = 300;
    s.seed = 21;
    write_dataset(synth_generate(PlantedRule::standard(kind), s), dir / "a");
    write_dataset(synth_generate(PlantedRule::standard(kind), s), dir / "b");
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
      ++files;
      synth_same = synth_same && slurp(e.path()) == slurp(dir / "b" / e.path().filename());
    }
    synth_same = synth_same && files > 0;
    fs::remove_all(dir / "a");
    fs::remove_all(dir / "b");
  }
  fs::remove_all(dir);
  report(curves && infer_same && synth_same, "reproducibility",
         fmt("fixed-seed loss curves bitwise identical (mc+oe) %s; checkpoint save/load/infer identical %s; "
             "synth byte-deterministic %s",
             curves ? "yes" : "NO", infer_same ? "yes" : "NO", synth_same ? "yes" : "NO"));
}

}  // namespace

int main() {
  reference_corpus();
  gradient_integrity();
  attention_contract();
  reasoning_identities();
  metric_oracle();
  optimizer_oracle();
  learnability();
  reasoning_depth();
  reproducibility();
  std::printf("%d measured criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
