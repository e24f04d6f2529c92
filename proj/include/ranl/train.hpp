#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ranl/dataset.hpp"
#include "ranl/model.hpp"
#include "ranl/tape.hpp"

namespace ranl {

struct TrainConfig {
  double learning_rate = 0.01;
  double adagrad_eps = 1e-8;
  double lambda = 1e-4;  // L2 trade-off
  int epochs = 30;
  int patience = 5;      // epochs without validation improvement before stopping
  std::uint64_t seed = 0;

  void validate() const;
};

// ---- losses ---------------------------------------------------------------

// Positionwise mismatches after padding both sequences with <pad> to
// max(length, |y|, |o|).
std::size_t exact_match_loss(std::span<const TokenId> y, std::span<const TokenId> o, std::size_t length);

// Sum of per-position cross-entropies (teacher forcing).
Var surrogate_loss_oe(std::span<const Var> logits, std::span<const TokenId> targets);

// loss + lambda * sum of squared entries of every parameter.
Var objective(Var loss, std::span<const Var> params, double lambda);

// Task loss of one example: cross-entropy over the classes (mc) or the
// surrogate sequence loss (oe).
Var task_loss(const Net& net, const ExampleView& example, Task task);

// ---- optimizer ------------------------------------------------------------

// Squared-gradient accumulators, one per parameter tensor.
struct OptimizerState {
  std::vector<Tensor> accumulators;

  static OptimizerState for_params(const ModelParams& params);
};

// acc += g^2; theta -= lr * g / (sqrt(acc) + eps), elementwise.
void adagrad_update(std::span<double> theta, std::span<const double> grad, std::span<double> acc, double lr,
                    double eps);

// Applies adagrad_update to every parameter using its gradient slot.
void adagrad_step(ModelParams& params, OptimizerState& state, double lr, double eps);

// ---- metrics --------------------------------------------------------------

// 1 - prod_{i<=K} 1[y_i != o_i] with both sides padded to `length`: 1 iff one
// of the first K positions matches. Throws ContractError if K == 0 or K > |y|.
int positional_score(std::span<const TokenId> y, std::span<const TokenId> o, std::size_t K, std::size_t length);

// 1 iff the sequences are identical.
int strict_score(std::span<const TokenId> y, std::span<const TokenId> o);

struct TypeAccuracy {
  double accuracy = 0.0;  // positionwise formula
  double strict = 0.0;    // whole-answer exact match
  std::size_t count = 0;
};

struct TaskMetrics {
  Task task = Task::mc;
  TypeAccuracy overall;
  std::array<TypeAccuracy, 3> by_type;  // indexed by QType

  const TypeAccuracy& of(QType q) const { return by_type[static_cast<std::size_t>(q)]; }
};

// Scores every example of a split. For mc the prediction is the argmax over
// the example's candidates and K must be 1. Results do not depend on
// `workers`.
TaskMetrics evaluate_accuracy(const Model& model, const std::vector<VideoInstance>& split, Task task,
                              std::size_t K = 1, std::size_t workers = 1);

struct LossPoint {
  std::size_t step = 0;
  int epoch = 0;
  double loss = 0.0;          // mean objective over the epoch
  double val_accuracy = 0.0;
};

struct MetricsReport {
  std::string variant;
  std::vector<TaskMetrics> tasks;
  std::vector<LossPoint> curve;
  double wall_seconds = 0.0;

  std::string to_json() const;
  std::string curve_csv() const;
};

// ---- training -------------------------------------------------------------

struct TrainResult {
  Model best;                      // parameters of the best validation epoch
  MetricsReport report;            // validation metrics of `best`, loss curve
  std::vector<double> step_losses; // objective value of every SGD step
  double best_val_accuracy = 0.0;
  int best_epoch = 0;              // 0 = initial parameters
};

// Sequential single-example SGD with diagonal AdaGrad. Each epoch visits the
// train split in a seeded shuffled order, then scores the validation split
// (train split if there is none); the best epoch is kept. Throws
// DivergenceError on a non-finite objective or parameter.
TrainResult train(const Model& initial, const Dataset& dataset, const TrainConfig& config, Task task);

}  // namespace ranl
