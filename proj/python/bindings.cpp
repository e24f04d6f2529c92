#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "ranl/checkpoint.hpp"
#include "ranl/cli.hpp"
#include "ranl/dataset.hpp"
#include "ranl/diagnostics.hpp"
#include "ranl/errors.hpp"
#include "ranl/synth.hpp"
#include "ranl/train.hpp"

namespace py = pybind11;
using namespace ranl;

namespace {

Task task_of(const std::string& name) {
  const auto t = parse_task(name);
  if (!t) throw ConfigError("unknown task '" + name + "'");
  return *t;
}

py::dict metrics_dict(const TaskMetrics& m) {
  py::dict d;
  d["task"] = std::string(to_string(m.task));
  d["accuracy"] = m.overall.accuracy;
  d["strict"] = m.overall.strict;
  d["count"] = m.overall.count;
  for (QType q : kAllQTypes) d[py::str(std::string(to_string(q)))] = m.of(q).accuracy;
  return d;
}

const VideoInstance& find_video(const Dataset& d, const std::string& id) {
  for (SplitName s : {SplitName::train, SplitName::valid, SplitName::test}) {
    for (const auto& v : d.splits.part(s)) {
      if (v.video_id == id) return v;
    }
  }
  throw DataError("no video '" + id + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "r-ANL video question answering core";

  py::register_exception<Error>(m, "RanlError", PyExc_RuntimeError);

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("feature_dim", &ModelConfig::feature_dim)
      .def_readwrite("embed_dim", &ModelConfig::embed_dim)
      .def_readwrite("hidden", &ModelConfig::hidden)
      .def_readwrite("frames", &ModelConfig::frames)
      .def_readwrite("vocab_size", &ModelConfig::vocab_size)
      .def_readwrite("reasoning_steps", &ModelConfig::reasoning_steps)
      .def_readwrite("use_attributes", &ModelConfig::use_attributes)
      .def_readwrite("answer_classes", &ModelConfig::answer_classes)
      .def_readwrite("max_decode_len", &ModelConfig::max_decode_len)
      .def_property(
          "architecture", [](const ModelConfig& c) { return std::string(to_string(c.architecture)); },
          [](ModelConfig& c, const std::string& a) {
            if (a == "ranl") c.architecture = Architecture::ranl;
            else if (a == "vqa+") c.architecture = Architecture::vqa_plus;
            else throw ConfigError("unknown architecture '" + a + "'");
          })
      .def("validate", &ModelConfig::validate)
      .def("parameter_count", [](const ModelConfig& c) { return expected_parameter_count(c); });

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("adagrad_eps", &TrainConfig::adagrad_eps)
      .def_readwrite("lambda_", &TrainConfig::lambda)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("patience", &TrainConfig::patience)
      .def_readwrite("seed", &TrainConfig::seed);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("vocabulary", [](const Dataset& d) { return d.lexicon.vocab.tokens(); })
      .def_property_readonly("classes", [](const Dataset& d) { return d.lexicon.classes.labels(); })
      .def("split_size", [](const Dataset& d, const std::string& s) {
        const auto name = parse_split(s);
        if (!name) throw ConfigError("unknown split '" + s + "'");
        return d.splits.part(*name).size();
      })
      .def("video_ids", [](const Dataset& d, const std::string& s) {
        const auto name = parse_split(s);
        if (!name) throw ConfigError("unknown split '" + s + "'");
        std::vector<std::string> ids;
        for (const auto& v : d.splits.part(*name)) ids.push_back(v.video_id);
        return ids;
      });

  m.def(
      "synth",
      [](const std::string& rule, std::size_t train, std::size_t valid, std::size_t test, std::uint64_t seed,
         std::size_t frames, std::size_t feature_dim) {
        const auto kind = parse_rule_kind(rule);
        if (!kind) throw ConfigError("unknown rule '" + rule + "'");
        SynthOptions o;
        o.sizes = SplitSizes{train, valid, test};
        o.seed = seed;
        o.frames = frames;
        o.feature_dim = feature_dim;
        return synth_generate(PlantedRule::standard(*kind), o);
      },
      py::arg("rule"), py::arg("train"), py::arg("valid"), py::arg("test") = 0, py::arg("seed") = 0,
      py::arg("frames") = 8, py::arg("feature_dim") = 32, "Planted-rule dataset with explicit split sizes.");

  m.def(
      "load_dataset",
      [](const std::filesystem::path& manifest, std::size_t max_vocab) {
        LoadOptions o;
        o.max_vocab = max_vocab;
        return load_dataset(manifest, o);
      },
      py::arg("manifest"), py::arg("max_vocab") = 6500);
  m.def("write_dataset", [](const Dataset& d, const std::filesystem::path& dir) { write_dataset(d, dir); });

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_readonly("config", &Checkpoint::config)
      .def_property_readonly("task", [](const Checkpoint& c) { return std::string(to_string(c.task)); })
      .def("save", [](const Checkpoint& c, const std::filesystem::path& p) { save_checkpoint(p, c); })
      .def("predict",
           [](const Checkpoint& c, const Dataset& d, const std::string& video_id, const std::string& question) {
             VideoInstance v = find_video(d, video_id);
             std::vector<std::string> words;
             std::istringstream in(question);
             for (std::string w; in >> w;) words.push_back(w);
             QaPair qa;
             qa.question = c.lexicon.vocab.encode(words);
             v.qa = {qa};
             py::dict out;
             if (c.task == Task::mc) {
               const McPrediction p = predict_mc(c.model(), v.example(0));
               out["answer"] = c.lexicon.classes.label(p.predicted);
               out["probabilities"] = p.probabilities;
               out["trace"] = p.trace.to_json();
             } else {
               const OePrediction p = predict_oe(c.model(), v.example(0));
               out["answer"] = c.lexicon.vocab.decode(p.tokens);
               out["trace"] = p.trace.to_json();
             }
             return out;
           })
      .def("evaluate",
           [](const Checkpoint& c, const Dataset& d, const std::string& split, std::size_t K) {
             const auto name = parse_split(split);
             if (!name) throw ConfigError("unknown split '" + split + "'");
             return metrics_dict(evaluate_accuracy(c.model(), d.splits.part(*name), c.task, K));
           },
           py::arg("dataset"), py::arg("split") = "valid", py::arg("K") = 1);
  m.def("load_checkpoint", [](const std::filesystem::path& p) { return load_checkpoint(p); });

  m.def(
      "train",
      [](const Dataset& d, ModelConfig config, const TrainConfig& tc, const std::string& task) {
        config.vocab_size = d.lexicon.vocab.size();
        config.answer_classes = d.lexicon.classes.size();
        const Task t = task_of(task);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(Model::create(config, tc.seed), d, tc, t);
        }
        py::dict out;
        out["best_val_accuracy"] = r.best_val_accuracy;
        out["best_epoch"] = r.best_epoch;
        std::vector<double> losses;
        for (const auto& p : r.report.curve) losses.push_back(p.loss);
        out["epoch_losses"] = losses;
        out["checkpoint"] = Checkpoint{r.best.config, r.best.params, d.lexicon, t};
        return out;
      },
      py::arg("dataset"), py::arg("config"), py::arg("train_config"), py::arg("task") = "mc",
      "Trains from seeded init; model vocabulary and class count follow the dataset.");

  m.def(
      "gradcheck",
      [](const std::string& dims, const std::string& task, std::uint64_t seed, double eps, double tol) {
        const ModelConfig c = dims == "small" ? small_config() : tiny_config();
        const GradCheckReport r = check_model_gradients(c, task_of(task), seed, eps, tol);
        py::dict out;
        out["max_rel_error"] = r.max_rel_error;
        out["max_abs_error"] = r.max_abs_error;
        out["checked"] = r.checked;
        out["passed"] = r.passed;
        return out;
      },
      py::arg("dims") = "tiny", py::arg("task") = "mc", py::arg("seed") = 1, py::arg("eps") = 1e-5,
      py::arg("tol") = 1e-4);

  m.def(
      "positional_score",
      [](const std::vector<TokenId>& y, const std::vector<TokenId>& o, std::size_t K, std::size_t length) {
        return positional_score(y, o, K, length);
      },
      py::arg("y"), py::arg("o"), py::arg("K"), py::arg("length"));

  m.def(
      "adagrad_update",
      [](std::vector<double> theta, const std::vector<double>& grad, std::vector<double> acc, double lr,
         double eps) {
        if (theta.size() != grad.size() || theta.size() != acc.size()) {
          throw DimensionError("adagrad_update: length mismatch");
        }
        adagrad_update(theta, grad, acc, lr, eps);
        return py::make_tuple(theta, acc);
      },
      py::arg("theta"), py::arg("grad"), py::arg("acc"), py::arg("lr"), py::arg("eps"),
      "Returns (theta, acc) after one step.");

  m.def(
      "run",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_command(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a command-line subcommand; returns (exit_code, stdout, stderr).");
}
