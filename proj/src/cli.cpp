#include "ranl/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ranl/ablation.hpp"
#include "ranl/checkpoint.hpp"
#include "ranl/dataset.hpp"
#include "ranl/diagnostics.hpp"
#include "ranl/errors.hpp"
#include "ranl/run_config.hpp"
#include "ranl/synth.hpp"
#include "ranl/train.hpp"

namespace ranl {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string format_metrics(const TaskMetrics& m) {
  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-8s %9s %9s %7s\n", to_string(m.task).data(), "accuracy", "strict", "count");
  out += buf;
  auto row = [&](const char* name, const TypeAccuracy& a) {
    std::snprintf(buf, sizeof buf, "%-8s %9.4f %9.4f %7zu\n", name, a.accuracy, a.strict, a.count);
    out += buf;
  };
  for (QType q : kAllQTypes) row(to_string(q).data(), m.of(q));
  row("total", m.overall);
  return out;
}

nlohmann::ordered_json metrics_json(const TaskMetrics& m) {
  nlohmann::ordered_json j;
  auto acc = [](const TypeAccuracy& a) {
    return nlohmann::ordered_json{{"accuracy", a.accuracy}, {"strict", a.strict}, {"count", a.count}};
  };
  j["task"] = std::string(to_string(m.task));
  j["overall"] = acc(m.overall);
  for (QType q : kAllQTypes) j[std::string(to_string(q))] = acc(m.of(q));
  return j;
}

// Collects "--set key=value" pairs plus dedicated flags into config entries.
struct FlagEntries {
  std::vector<std::string> sets;
  ConfigEntries entries;

  void put(const std::string& key, const std::string& value) {
    entries.values[key] = value;
    entries.where[key] = "--" + key;
  }
  ConfigEntries resolve() {
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set " + s + ": expected key=value");
      const std::string key = s.substr(0, eq);
      if (!is_config_key(key)) throw ConfigError("--set " + s + ": unknown key '" + key + "'");
      if (!entries.values.count(key)) {
        entries.values[key] = s.substr(eq + 1);
        entries.where[key] = "--set " + key;
      }
    }
    return entries;
  }
};

RunConfig load_run_config(const std::string& config_path, FlagEntries& flags) {
  ConfigEntries file;
  fs::path base;
  if (!config_path.empty()) {
    file = read_config_file(config_path);
    base = fs::path(config_path).parent_path();
  }
  return resolve_run_config(file, flags.resolve(), base);
}

Dataset load_for(const RunConfig& rc) {
  if (rc.manifest.empty()) throw ConfigError("no manifest given (config key 'manifest' or --manifest)");
  LoadOptions opts;
  opts.max_vocab = rc.max_vocab;
  opts.frames = rc.model.frames;
  opts.feature_dim = rc.model.feature_dim;
  return load_dataset(rc.manifest, opts);
}

// Model size fields that follow the data rather than the config.
void fit_to_lexicon(RunConfig& rc, const Lexicon& lexicon) {
  rc.model.vocab_size = lexicon.vocab.size();
  rc.model.answer_classes = lexicon.classes.size();
}

void write_provenance(const fs::path& dir, const RunConfig& rc) {
  write_file(dir / "config.resolved", rc.to_text());
  write_file(dir / "seed", std::to_string(rc.train.seed) + "\n");
}

const std::vector<VideoInstance>& pick_split(const Dataset& d, const std::string& name) {
  if (!name.empty()) {
    const auto s = parse_split(name);
    if (!s) throw ConfigError("unknown split '" + name + "'");
    return d.splits.part(*s);
  }
  if (!d.splits.test.empty()) return d.splits.test;
  if (!d.splits.valid.empty()) return d.splits.valid;
  return d.splits.train;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"r-ANL video question answering", "ranl"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model and write its artifacts");
  std::string train_config_path, train_out, train_task, train_manifest;
  std::uint64_t train_seed = 0;
  FlagEntries train_flags;
  train_cmd->add_option("--config", train_config_path, "Config file")->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", train_seed, "Seed for init and shuffling");
  train_cmd->add_option("--task", train_task, "mc or oe")->check(CLI::IsMember({"mc", "oe"}));
  train_cmd->add_option("--manifest", train_manifest, "Dataset manifest");
  train_cmd->add_option("--out", train_out, "Output directory");
  train_cmd->add_option("--set", train_flags.sets, "Override a config key (key=value)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a dataset split");
  std::string eval_ckpt, eval_manifest, eval_task, eval_split, eval_out;
  std::size_t eval_k = 1, eval_workers = 1;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--manifest", eval_manifest, "Dataset manifest")->required();
  eval_cmd->add_option("--K", eval_k, "Accuracy depth");
  eval_cmd->add_option("--task", eval_task, "mc or oe (default: the checkpoint's)")
      ->check(CLI::IsMember({"mc", "oe"}));
  eval_cmd->add_option("--split", eval_split, "train, valid or test (default: test, else valid)")
      ->check(CLI::IsMember({"train", "valid", "test"}));
  eval_cmd->add_option("--workers", eval_workers, "Evaluation threads")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", eval_out, "Directory for metrics.json");

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "Answer one question about one video");
  std::string infer_ckpt, infer_manifest, infer_video, infer_question;
  bool infer_trace = false;
  infer_cmd->add_option("--checkpoint", infer_ckpt, "Checkpoint file")->required();
  infer_cmd->add_option("--manifest", infer_manifest, "Manifest holding the video")->required();
  infer_cmd->add_option("--video", infer_video, "video_id")->required();
  infer_cmd->add_option("--question", infer_question, "Question text")->required();
  infer_cmd->add_flag("--trace", infer_trace, "Print the attention trace as JSON");

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and compare model variants");
  std::string ablate_config, ablate_variants = "vqa+,ranl-a,ranl1,ranl2,ranl3", ablate_tasks, ablate_out;
  std::size_t ablate_seeds = 1;
  FlagEntries ablate_flags;
  ablate_cmd->add_option("--config", ablate_config, "Config file")->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--variants", ablate_variants, "Comma-separated variant names");
  ablate_cmd->add_option("--seeds", ablate_seeds, "Seeds per variant")->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--tasks", ablate_tasks, "Comma-separated tasks (default: the config's)");
  ablate_cmd->add_option("--out", ablate_out, "Output directory");
  ablate_cmd->add_option("--set", ablate_flags.sets, "Override a config key (key=value)");

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the full model");
  std::string grad_dims = "tiny", grad_task;
  double grad_tol = 1e-4, grad_eps = 1e-5;
  std::uint64_t grad_seed = 1;
  grad_cmd->add_option("--dims", grad_dims, "tiny or small")->check(CLI::IsMember({"tiny", "small"}));
  grad_cmd->add_option("--tol", grad_tol, "Maximum relative error");
  grad_cmd->add_option("--eps", grad_eps, "Central difference step");
  grad_cmd->add_option("--seed", grad_seed, "Seed for parameters and instance");
  grad_cmd->add_option("--task", grad_task, "mc or oe (default: both)")->check(CLI::IsMember({"mc", "oe"}));

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a planted-rule dataset");
  std::string synth_rule, synth_out;
  SynthOptions synth;
  std::size_t synth_train = 0, synth_valid = 0, synth_test = 0;
  synth_cmd->add_option("--rule", synth_rule, "one-hop or two-hop")
      ->required()
      ->check(CLI::IsMember({"one-hop", "two-hop"}));
  synth_cmd->add_option("--count", synth.count, "Total instances, split in reference proportions");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--frames", synth.frames, "Frames per video");
  synth_cmd->add_option("--feature-dim", synth.feature_dim, "Feature dimension");
  synth_cmd->add_option("--candidates", synth.candidates, "Candidates per question (0 = all classes)");
  auto* train_opt = synth_cmd->add_option("--train", synth_train, "Explicit train size");
  auto* valid_opt = synth_cmd->add_option("--valid", synth_valid, "Explicit valid size");
  auto* test_opt = synth_cmd->add_option("--test", synth_test, "Explicit test size");

  // dataset validate
  auto* dataset_cmd = app.add_subcommand("dataset", "Dataset utilities");
  dataset_cmd->require_subcommand(1);
  auto* validate_cmd = dataset_cmd->add_subcommand("validate", "Load and check a manifest");
  std::string validate_manifest;
  std::size_t validate_frames = 0, validate_dim = 0;
  validate_cmd->add_option("--manifest", validate_manifest, "Manifest file")->required();
  validate_cmd->add_option("--frames", validate_frames, "Required frame count");
  validate_cmd->add_option("--feature-dim", validate_dim, "Required feature dimension");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().back()->help());
      return kExitOk;
    }
    err << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) {
      if (train_cmd->count("--seed")) train_flags.put("seed", std::to_string(train_seed));
      if (!train_task.empty()) train_flags.put("task", train_task);
      if (!train_manifest.empty()) train_flags.put("manifest", train_manifest);
      if (!train_out.empty()) train_flags.put("out", train_out);
      RunConfig rc = load_run_config(train_config_path, train_flags);
      if (rc.out.empty()) throw ConfigError("no output directory given (config key 'out' or --out)");
      const Dataset data = load_for(rc);
      fit_to_lexicon(rc, data.lexicon);
      write_provenance(rc.out, rc);
      TrainResult result = train(Model::create(rc.model, rc.train.seed), data, rc.train, rc.task);
      Checkpoint ckpt{result.best.config, result.best.params, data.lexicon, rc.task};
      save_checkpoint(rc.out / "best.ckpt", ckpt);
      write_file(rc.out / "metrics.json", result.report.to_json());
      write_file(rc.out / "loss_curve.csv", result.report.curve_csv());
      out << "best epoch " << result.best_epoch << ", validation accuracy " << result.best_val_accuracy << "\n";
      if (!result.report.tasks.empty()) out << format_metrics(result.report.tasks.front());
      out << "wrote " << (rc.out / "best.ckpt").string() << "\n";
      return kExitOk;
    }

    if (eval_cmd->parsed()) {
      const Checkpoint ckpt = load_checkpoint(eval_ckpt);
      const Task task = eval_task.empty() ? ckpt.task : *parse_task(eval_task);
      LoadOptions opts;
      opts.frames = ckpt.config.frames;
      opts.feature_dim = ckpt.config.feature_dim;
      const Dataset data = load_dataset(eval_manifest, ckpt.lexicon, opts);
      const auto& split = pick_split(data, eval_split);
      if (split.empty()) throw DataError(eval_manifest + ": the selected split is empty");
      const TaskMetrics m = evaluate_accuracy(ckpt.model(), split, task, eval_k, eval_workers);
      out << format_metrics(m);
      if (!eval_out.empty()) {
        nlohmann::ordered_json doc = metrics_json(m);
        doc["K"] = eval_k;
        doc["checkpoint"] = eval_ckpt;
        doc["manifest"] = eval_manifest;
        write_file(fs::path(eval_out) / "metrics.json", doc.dump(2));
      }
      return kExitOk;
    }

    if (infer_cmd->parsed()) {
      const Checkpoint ckpt = load_checkpoint(infer_ckpt);
      LoadOptions opts;
      opts.frames = ckpt.config.frames;
      opts.feature_dim = ckpt.config.feature_dim;
      const Dataset data = load_dataset(infer_manifest, ckpt.lexicon, opts);
      const VideoInstance* video = nullptr;
      for (SplitName s : {SplitName::train, SplitName::valid, SplitName::test}) {
        for (const auto& v : data.splits.part(s)) {
          if (v.video_id == infer_video) video = &v;
        }
      }
      if (!video) throw DataError(infer_manifest + ": no video '" + infer_video + "'");
      const auto tokens = words(infer_question);
      if (tokens.empty()) throw DataError("empty question");

      VideoInstance query = *video;
      QaPair qa;
      qa.question = ckpt.lexicon.vocab.encode(tokens);
      query.qa = {qa};
      const ExampleView example = query.example(0);
      const Model model = ckpt.model();
      AttentionTrace trace;
      if (ckpt.task == Task::mc) {
        const McPrediction p = predict_mc(model, example);
        out << "answer: " << ckpt.lexicon.classes.label(p.predicted) << "\n";
        char buf[40];
        for (ClassId c = 0; c < p.probabilities.size(); ++c) {
          std::snprintf(buf, sizeof buf, "%.17g", p.probabilities[c]);
          out << "p(" << ckpt.lexicon.classes.label(c) << ") = " << buf << "\n";
        }
        trace = p.trace;
      } else {
        const OePrediction p = predict_oe(model, example);
        std::string answer;
        for (const auto& w : ckpt.lexicon.vocab.decode(p.tokens)) answer += (answer.empty() ? "" : " ") + w;
        out << "answer: " << answer << "\n";
        trace = p.trace;
      }
      if (infer_trace) out << trace.to_json() << "\n";
      return kExitOk;
    }

    if (ablate_cmd->parsed()) {
      if (!ablate_out.empty()) ablate_flags.put("out", ablate_out);
      RunConfig rc = load_run_config(ablate_config, ablate_flags);
      const Dataset data = load_for(rc);
      fit_to_lexicon(rc, data.lexicon);
      const auto variants = split_list(ablate_variants, ',');
      if (variants.empty()) throw ConfigError("--variants is empty");
      for (const auto& v : variants) apply_variant(rc.model, v);
      std::vector<Task> tasks;
      for (const auto& t : split_list(ablate_tasks, ',')) {
        const auto parsed = parse_task(t);
        if (!parsed) throw ConfigError("--tasks: unknown task '" + t + "'");
        tasks.push_back(*parsed);
      }
      if (tasks.empty()) tasks.push_back(rc.task);
      if (!rc.out.empty()) write_provenance(rc.out, rc);
      const AblationTable table = run_ablation(data, rc.model, rc.train, variants, tasks, ablate_seeds);
      out << table.to_text();
      for (const auto& r : table.runs) {
        if (!r.error.empty()) err << "warning: " << r.variant << "/" << to_string(r.task) << " seed " << r.seed
                                  << " failed: " << r.error << "\n";
      }
      if (!rc.out.empty()) {
        write_file(rc.out / "metrics.json", table.to_json());
        write_file(rc.out / "table.txt", table.to_text());
      }
      return kExitOk;
    }

    if (grad_cmd->parsed()) {
      const ModelConfig config = grad_dims == "small" ? small_config() : tiny_config();
      std::vector<Task> tasks;
      if (grad_task.empty()) tasks = {Task::mc, Task::oe};
      else tasks = {*parse_task(grad_task)};
      double worst = 0.0;
      bool passed = true;
      char buf[160];
      for (Task t : tasks) {
        const GradCheckReport r = check_model_gradients(config, t, grad_seed, grad_eps, grad_tol);
        std::snprintf(buf, sizeof buf, "%s: max_rel_error %.3e over %zu entries\n", to_string(t).data(),
                      r.max_rel_error, r.checked);
        out << buf;
        worst = std::max(worst, r.max_rel_error);
        passed = passed && r.passed;
      }
      std::snprintf(buf, sizeof buf, "max_rel_error %.3e (tol %.1e) %s\n", worst, grad_tol, passed ? "ok" : "FAILED");
      out << buf;
      return passed ? kExitOk : kExitFailure;
    }

    if (synth_cmd->parsed()) {
      if (train_opt->count() || valid_opt->count() || test_opt->count()) {
        synth.sizes = SplitSizes{synth_train, synth_valid, synth_test};
      }
      const PlantedRule rule = PlantedRule::standard(*parse_rule_kind(synth_rule));
      const Dataset data = synth_generate(rule, synth);
      write_dataset(data, synth_out);
      out << "wrote " << data.splits.train.size() << " train, " << data.splits.valid.size() << " valid, "
          << data.splits.test.size() << " test videos to " << (fs::path(synth_out) / "manifest.jsonl").string()
          << "\n";
      return kExitOk;
    }

    if (validate_cmd->parsed()) {
      LoadOptions opts;
      if (validate_frames) opts.frames = validate_frames;
      if (validate_dim) opts.feature_dim = validate_dim;
      const Dataset data = load_dataset(validate_manifest, opts);
      std::size_t pairs = 0;
      for (SplitName s : {SplitName::train, SplitName::valid, SplitName::test}) {
        for (const auto& v : data.splits.part(s)) pairs += v.qa.size();
      }
      out << "ok: " << data.splits.video_count() << " videos, " << pairs << " question-answer pairs, vocabulary "
          << data.lexicon.vocab.size() << ", " << data.lexicon.classes.size() << " answer classes\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace ranl
