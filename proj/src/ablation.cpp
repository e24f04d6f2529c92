#include "ranl/ablation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "ranl/errors.hpp"

namespace ranl {

ModelConfig apply_variant(ModelConfig base, std::string_view variant) {
  if (variant == "vqa+") {
    base.architecture = Architecture::vqa_plus;
    base.use_attributes = false;
    base.reasoning_steps = 0;
  } else if (variant == "ranl-a") {
    base.architecture = Architecture::ranl;
    base.use_attributes = false;
  } else if (variant.starts_with("ranl") && variant.size() == 5 && variant[4] >= '0' && variant[4] <= '9') {
    base.architecture = Architecture::ranl;
    base.use_attributes = true;
    base.reasoning_steps = variant[4] - '0';
  } else {
    throw ConfigError("unknown variant '" + std::string(variant) + "'");
  }
  return base;
}

std::vector<const AblationRun*> AblationTable::runs_of(std::string_view variant, Task task) const {
  std::vector<const AblationRun*> out;
  for (const auto& r : runs) {
    if (r.variant == variant && r.task == task && r.error.empty()) out.push_back(&r);
  }
  return out;
}

std::optional<TaskMetrics> AblationTable::mean(std::string_view variant, Task task) const {
  const auto rs = runs_of(variant, task);
  if (rs.empty()) return std::nullopt;
  TaskMetrics m;
  m.task = task;
  auto add = [](TypeAccuracy& into, const TypeAccuracy& from) {
    into.accuracy += from.accuracy;
    into.strict += from.strict;
    into.count += from.count;
  };
  for (const auto* r : rs) {
    add(m.overall, r->test.overall);
    for (std::size_t q = 0; q < 3; ++q) add(m.by_type[q], r->test.by_type[q]);
  }
  const double n = static_cast<double>(rs.size());
  auto div = [&](TypeAccuracy& a) {
    a.accuracy /= n;
    a.strict /= n;
    a.count /= rs.size();
  };
  div(m.overall);
  for (auto& t : m.by_type) div(t);
  return m;
}

std::optional<double> AblationTable::median_val_accuracy(std::string_view variant, Task task) const {
  const auto rs = runs_of(variant, task);
  if (rs.empty()) return std::nullopt;
  std::vector<double> v;
  for (const auto* r : rs) v.push_back(r->val_accuracy);
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::string AblationTable::to_text() const {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-8s", "Method");
  out << buf;
  for (Task t : tasks) {
    const char* name = t == Task::oe ? "open-ended" : "multiple-choice";
    std::snprintf(buf, sizeof buf, " | %-34s", name);
    out << buf;
  }
  out << "\n";
  std::snprintf(buf, sizeof buf, "%-8s", "");
  out << buf;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    std::snprintf(buf, sizeof buf, " | %7s %7s %7s %9s", "What", "Who", "Other", "Total");
    out << buf;
  }
  out << "\n";
  for (const auto& v : variants) {
    std::snprintf(buf, sizeof buf, "%-8s", v.c_str());
    out << buf;
    for (Task t : tasks) {
      if (auto m = mean(v, t)) {
        std::snprintf(buf, sizeof buf, " | %7.4f %7.4f %7.4f %9.4f", m->of(QType::what).accuracy,
                      m->of(QType::who).accuracy, m->of(QType::other).accuracy, m->overall.accuracy);
      } else {
        std::snprintf(buf, sizeof buf, " | %7s %7s %7s %9s", "-", "-", "-", "failed");
      }
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

std::string AblationTable::to_json() const {
  nlohmann::ordered_json doc;
  doc["variants"] = variants;
  auto& task_names = doc["tasks"] = nlohmann::ordered_json::array();
  for (Task t : tasks) task_names.push_back(std::string(to_string(t)));
  auto metrics_json = [](const TaskMetrics& m) {
    nlohmann::ordered_json j;
    for (QType q : kAllQTypes) j[std::string(to_string(q))] = m.of(q).accuracy;
    j["total"] = m.overall.accuracy;
    j["total_strict"] = m.overall.strict;
    return j;
  };
  auto& grid = doc["grid"] = nlohmann::ordered_json::object();
  for (const auto& v : variants) {
    nlohmann::ordered_json row;
    for (Task t : tasks) {
      if (auto m = mean(v, t)) row[std::string(to_string(t))] = metrics_json(*m);
    }
    grid[v] = std::move(row);
  }
  auto& runs_json = doc["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : runs) {
    nlohmann::ordered_json j;
    j["variant"] = r.variant;
    j["task"] = std::string(to_string(r.task));
    j["seed"] = r.seed;
    if (r.error.empty()) {
      j["val_accuracy"] = r.val_accuracy;
      j["test"] = metrics_json(r.test);
    } else {
      j["error"] = r.error;
    }
    runs_json.push_back(std::move(j));
  }
  return doc.dump(2);
}

AblationTable run_ablation(const Dataset& dataset, const ModelConfig& base, const TrainConfig& train_config,
                           std::span<const std::string> variants, std::span<const Task> tasks, std::size_t seeds) {
  AblationTable table;
  table.variants.assign(variants.begin(), variants.end());
  table.tasks.assign(tasks.begin(), tasks.end());
  const auto& eval_split = dataset.splits.test.empty() ? dataset.splits.valid : dataset.splits.test;
  for (const auto& variant : variants) {
    for (Task task : tasks) {
      for (std::size_t s = 0; s < seeds; ++s) {
        AblationRun run;
        run.variant = variant;
        run.task = task;
        run.seed = train_config.seed + s;
        try {
          const ModelConfig config = apply_variant(base, variant);
          TrainConfig tc = train_config;
          tc.seed = run.seed;
          TrainResult result = train(Model::create(config, run.seed), dataset, tc, task);
          run.val_accuracy = result.best_val_accuracy;
          run.test = evaluate_accuracy(result.best, eval_split, task);
        } catch (const std::exception& e) {
          run.error = e.what();
        }
        table.runs.push_back(std::move(run));
      }
    }
  }
  return table;
}

}  // namespace ranl
