#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ranl/dataset.hpp"
#include "ranl/model.hpp"
#include "ranl/train.hpp"

namespace ranl {

// Variant names: "ranl-a" (no attributes), "ranl1".."ranl3" (reasoning
// steps), "vqa+" (mean-pool baseline, no attention, no attributes).
inline constexpr std::string_view kDefaultVariants[] = {"vqa+", "ranl-a", "ranl1", "ranl2", "ranl3"};

// Throws ConfigError for unknown names.
ModelConfig apply_variant(ModelConfig base, std::string_view variant);

struct AblationRun {
  std::string variant;
  Task task = Task::mc;
  std::uint64_t seed = 0;
  double val_accuracy = 0.0;  // best validation accuracy
  TaskMetrics test;           // evaluation split metrics of the best epoch
  std::string error;          // non-empty when the run failed
};

struct AblationTable {
  std::vector<std::string> variants;
  std::vector<Task> tasks;
  std::vector<AblationRun> runs;

  std::vector<const AblationRun*> runs_of(std::string_view variant, Task task) const;
  // Mean over successful seeds of the evaluation-split metrics.
  std::optional<TaskMetrics> mean(std::string_view variant, Task task) const;
  std::optional<double> median_val_accuracy(std::string_view variant, Task task) const;

  // Rows = variants; columns = what/who/other/total per task.
  std::string to_text() const;
  std::string to_json() const;
};

// Trains and evaluates every variant for every task and seed. Seed s uses
// train.seed + s both for parameter init and for shuffling, so variants share
// seeds. Metrics come from the test split (validation when there is none).
// A failing run is recorded with its error and does not stop the others.
AblationTable run_ablation(const Dataset& dataset, const ModelConfig& base, const TrainConfig& train_config,
                           std::span<const std::string> variants, std::span<const Task> tasks, std::size_t seeds);

}  // namespace ranl
