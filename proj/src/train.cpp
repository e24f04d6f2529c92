#include "ranl/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "ranl/errors.hpp"
#include "ranl/ops.hpp"
#include "ranl/rng.hpp"

namespace ranl {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(adagrad_eps > 0.0)) throw ConfigError("adagrad_eps must be > 0");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

std::size_t exact_match_loss(std::span<const TokenId> y, std::span<const TokenId> o, std::size_t length) {
  const std::size_t m = std::max({length, y.size(), o.size()});
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const TokenId yi = i < y.size() ? y[i] : kPadId;
    const TokenId oi = i < o.size() ? o[i] : kPadId;
    if (yi != oi) ++mismatches;
  }
  return mismatches;
}

Var surrogate_loss_oe(std::span<const Var> logits, std::span<const TokenId> targets) {
  if (logits.size() != targets.size() || logits.empty()) {
    throw DimensionError("surrogate_loss_oe: " + std::to_string(logits.size()) + " logit rows for " +
                         std::to_string(targets.size()) + " targets");
  }
  Var total = ops::cross_entropy(logits[0], targets[0]);
  for (std::size_t i = 1; i < logits.size(); ++i) total = ops::add(total, ops::cross_entropy(logits[i], targets[i]));
  return total;
}

Var objective(Var loss, std::span<const Var> params, double lambda) {
  if (lambda == 0.0 || params.empty()) return loss;
  Var reg = ops::sum_squares(params[0]);
  for (std::size_t i = 1; i < params.size(); ++i) reg = ops::add(reg, ops::sum_squares(params[i]));
  return ops::add(loss, ops::scale(reg, lambda));
}

Var task_loss(const Net& net, const ExampleView& example, Task task) {
  if (task == Task::mc) {
    McForward fwd = net.forward_mc(example);
    return ops::cross_entropy(fwd.logits, example.answer_class);
  }
  OeForward fwd = net.forward_oe(example);
  return surrogate_loss_oe(fwd.logits, fwd.targets);
}

OptimizerState OptimizerState::for_params(const ModelParams& params) {
  OptimizerState state;
  params.for_each([&](const std::string&, const Tensor& t) { state.accumulators.emplace_back(t.shape()); });
  return state;
}

void adagrad_update(std::span<double> theta, std::span<const double> grad, std::span<double> acc, double lr,
                    double eps) {
  if (theta.size() != grad.size() || theta.size() != acc.size()) {
    throw DimensionError("adagrad_update: mismatched parameter, gradient and accumulator sizes");
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    if (g == 0.0) continue;
    acc[i] += g * g;
    theta[i] -= lr * g / (std::sqrt(acc[i]) + eps);
  }
}

void adagrad_step(ModelParams& params, OptimizerState& state, double lr, double eps) {
  std::size_t k = 0;
  params.for_each([&](const std::string& name, Tensor& t) {
    if (k >= state.accumulators.size()) throw DimensionError("optimizer state has fewer slots than parameters");
    Tensor& acc = state.accumulators[k++];
    if (!t.has_grad()) return;
    if (acc.size() != t.size()) throw DimensionError("optimizer slot for " + name + " has the wrong size");
    adagrad_update(t.values(), t.grad(), acc.values(), lr, eps);
  });
}

int positional_score(std::span<const TokenId> y, std::span<const TokenId> o, std::size_t K, std::size_t length) {
  if (K == 0 || K > y.size()) {
    throw ContractError("accuracy: K=" + std::to_string(K) + " exceeds answer length " + std::to_string(y.size()));
  }
  const std::size_t m = std::max({length, y.size(), o.size()});
  int all_mismatch = 1;
  for (std::size_t i = 0; i < K && i < m; ++i) {
    const TokenId yi = i < y.size() ? y[i] : kPadId;
    const TokenId oi = i < o.size() ? o[i] : kPadId;
    all_mismatch *= yi != oi ? 1 : 0;
  }
  return 1 - all_mismatch;
}

int strict_score(std::span<const TokenId> y, std::span<const TokenId> o) {
  return std::equal(y.begin(), y.end(), o.begin(), o.end()) ? 1 : 0;
}

namespace {

struct Scored {
  int positional = 0;
  int strict = 0;
  QType qtype = QType::what;
};

Scored score_example(const Model& model, const ExampleRef& ref, Task task, std::size_t K) {
  const QaPair& pair = ref.pair();
  Scored s;
  s.qtype = pair.qtype;
  if (task == Task::mc) {
    const ClassId predicted = predict_mc(model, ref.view()).predicted;
    const TokenId y[] = {pair.answer_class};
    const TokenId o[] = {predicted};
    s.positional = positional_score(y, o, K, 1);
    s.strict = strict_score(y, o);
  } else {
    const std::vector<TokenId> o = predict_oe(model, ref.view()).tokens;
    s.positional = positional_score(pair.answer, o, K, model.config.max_decode_len);
    s.strict = strict_score(pair.answer, o);
  }
  return s;
}

void finish(TypeAccuracy& acc, double positional, double strict) {
  if (acc.count == 0) return;
  acc.accuracy = positional / static_cast<double>(acc.count);
  acc.strict = strict / static_cast<double>(acc.count);
}

}  // namespace

TaskMetrics evaluate_accuracy(const Model& model, const std::vector<VideoInstance>& split, Task task, std::size_t K,
                              std::size_t workers) {
  const std::vector<ExampleRef> refs = examples_of(split);
  if (task == Task::mc && K != 1) throw ContractError("accuracy: K=" + std::to_string(K) + " exceeds answer length 1");
  for (const auto& ref : refs) {
    if (K == 0 || K > ref.pair().answer.size()) {
      if (task == Task::oe) {
        throw ContractError("accuracy: K=" + std::to_string(K) + " exceeds answer length " +
                            std::to_string(ref.pair().answer.size()) + " of video '" + ref.video->video_id + "'");
      }
    }
  }

  std::vector<Scored> scored(refs.size());
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, refs.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < refs.size(); ++i) scored[i] = score_example(model, refs[i], task, K);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < refs.size(); i += workers) scored[i] = score_example(model, refs[i], task, K);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  TaskMetrics metrics;
  metrics.task = task;
  double positional = 0.0, strict = 0.0;
  std::array<double, 3> type_positional{}, type_strict{};
  for (const Scored& s : scored) {
    const auto q = static_cast<std::size_t>(s.qtype);
    positional += s.positional;
    strict += s.strict;
    type_positional[q] += s.positional;
    type_strict[q] += s.strict;
    ++metrics.by_type[q].count;
  }
  metrics.overall.count = scored.size();
  finish(metrics.overall, positional, strict);
  for (std::size_t q = 0; q < 3; ++q) finish(metrics.by_type[q], type_positional[q], type_strict[q]);
  return metrics;
}

namespace {

nlohmann::ordered_json accuracy_json(const TypeAccuracy& a) {
  return {{"accuracy", a.accuracy}, {"strict", a.strict}, {"count", a.count}};
}

}  // namespace

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["variant"] = variant;
  auto& tasks_json = doc["tasks"] = nlohmann::ordered_json::object();
  for (const auto& t : tasks) {
    nlohmann::ordered_json entry;
    entry["overall"] = accuracy_json(t.overall);
    for (QType q : kAllQTypes) entry[std::string(to_string(q))] = accuracy_json(t.of(q));
    tasks_json[std::string(to_string(t.task))] = std::move(entry);
  }
  auto& curve_json = doc["curve"] = nlohmann::ordered_json::array();
  for (const auto& p : curve) {
    curve_json.push_back({{"step", p.step}, {"epoch", p.epoch}, {"loss", p.loss}, {"val_accuracy", p.val_accuracy}});
  }
  doc["wall_seconds"] = wall_seconds;
  return doc.dump(2);
}

std::string MetricsReport::curve_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "step,epoch,loss,val_accuracy\n";
  for (const auto& p : curve) out << p.step << ',' << p.epoch << ',' << p.loss << ',' << p.val_accuracy << '\n';
  return out.str();
}

TrainResult train(const Model& initial, const Dataset& dataset, const TrainConfig& config, Task task) {
  config.validate();
  initial.config.validate();
  const auto started = std::chrono::steady_clock::now();

  const auto& validation = dataset.splits.valid.empty() ? dataset.splits.train : dataset.splits.valid;
  std::vector<ExampleRef> order = examples_of(dataset.splits.train);

  Model model = initial;
  OptimizerState state = OptimizerState::for_params(model.params);
  Rng rng(config.seed);

  TrainResult result;
  result.report.variant = std::string(to_string(model.config.architecture));
  TaskMetrics best_metrics = evaluate_accuracy(model, validation, task);
  result.best = model;
  result.best_val_accuracy = best_metrics.overall.accuracy;

  {
    double initial_loss = 0.0;
    for (const auto& ref : order) {
      Tape tape;
      Net net(model.config, std::as_const(model.params), tape);
      initial_loss += objective(task_loss(net, ref.view(), task), net.parameter_vars(), config.lambda)[0];
    }
    const double mean = order.empty() ? 0.0 : initial_loss / static_cast<double>(order.size());
    result.report.curve.push_back({0, 0, mean, best_metrics.overall.accuracy});
  }

  std::size_t step = 0;
  int stale = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (const auto& ref : order) {
      model.params.zero_grads();
      Tape tape;
      Net net(model.config, model.params, tape);
      Var obj = objective(task_loss(net, ref.view(), task), net.parameter_vars(), config.lambda);
      const double value = obj[0];
      ++step;
      if (!std::isfinite(value)) {
        throw DivergenceError("non-finite objective at step " + std::to_string(step) + " (epoch " +
                              std::to_string(epoch) + ", video '" + ref.video->video_id + "')");
      }
      tape.backward(obj);
      adagrad_step(model.params, state, config.learning_rate, config.adagrad_eps);
      if (!model.params.all_finite()) {
        throw DivergenceError("non-finite parameter after step " + std::to_string(step) + " (epoch " +
                              std::to_string(epoch) + ")");
      }
      result.step_losses.push_back(value);
      epoch_loss += value;
    }

    TaskMetrics metrics = evaluate_accuracy(model, validation, task);
    const double mean = order.empty() ? 0.0 : epoch_loss / static_cast<double>(order.size());
    result.report.curve.push_back({step, epoch, mean, metrics.overall.accuracy});
    if (metrics.overall.accuracy > result.best_val_accuracy) {
      result.best_val_accuracy = metrics.overall.accuracy;
      result.best_epoch = epoch;
      result.best = model;
      best_metrics = metrics;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }

  result.report.tasks.push_back(best_metrics);
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace ranl
