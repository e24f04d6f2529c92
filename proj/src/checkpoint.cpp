#include "ranl/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ranl/errors.hpp"

namespace ranl {

using json = nlohmann::ordered_json;

namespace {

json config_json(const ModelConfig& c) {
  return {{"feature_dim", c.feature_dim},     {"embed_dim", c.embed_dim},
          {"hidden", c.hidden},               {"frames", c.frames},
          {"vocab_size", c.vocab_size},       {"reasoning_steps", c.reasoning_steps},
          {"use_attributes", c.use_attributes}, {"answer_classes", c.answer_classes},
          {"max_decode_len", c.max_decode_len}, {"architecture", std::string(to_string(c.architecture))}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.feature_dim = j.at("feature_dim").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.frames = j.at("frames").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.reasoning_steps = j.at("reasoning_steps").get<int>();
  c.use_attributes = j.at("use_attributes").get<bool>();
  c.answer_classes = j.at("answer_classes").get<std::size_t>();
  c.max_decode_len = j.at("max_decode_len").get<std::size_t>();
  const auto arch = j.at("architecture").get<std::string>();
  if (arch == "ranl") {
    c.architecture = Architecture::ranl;
  } else if (arch == "vqa+") {
    c.architecture = Architecture::vqa_plus;
  } else {
    throw ConfigError("unknown architecture '" + arch + "'");
  }
  c.validate();
  return c;
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["task"] = std::string(to_string(ckpt.task));
  doc["config"] = config_json(ckpt.config);
  doc["vocabulary"] = ckpt.lexicon.vocab.tokens();
  doc["answer_classes"] = ckpt.lexicon.classes.labels();
  auto& params = doc["params"] = json::object();
  ckpt.params.for_each([&](const std::string& name, const Tensor& t) {
    json entry;
    entry["shape"] = t.shape().extents();
    entry["values"] = std::vector<double>(t.values().begin(), t.values().end());
    params[name] = std::move(entry);
  });
  return doc.dump();
}

Checkpoint checkpoint_from_string(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(source + ": " + e.what());
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw DataError(source + ": unsupported checkpoint format_version " + std::to_string(version));
    }
    Checkpoint ckpt;
    const auto task = parse_task(doc.at("task").get<std::string>());
    if (!task) throw DataError(source + ": unknown task");
    ckpt.task = *task;
    ckpt.config = config_from(doc.at("config"));
    ckpt.lexicon.vocab = Vocabulary::from_tokens(doc.at("vocabulary").get<std::vector<std::string>>());
    ckpt.lexicon.classes = ClassIndex(doc.at("answer_classes").get<std::vector<std::string>>());
    ckpt.params = ModelParams::zeros(ckpt.config);
    const json& params = doc.at("params");
    std::size_t seen = 0;
    ckpt.params.for_each([&](const std::string& name, Tensor& t) {
      if (!params.contains(name)) throw DataError(source + ": missing parameter " + name);
      const json& entry = params.at(name);
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      if (shape != t.shape().extents()) {
        throw DimensionMismatchError(source + ": parameter " + name + " has shape mismatching the config");
      }
      const auto values = entry.at("values").get<std::vector<double>>();
      if (values.size() != t.size()) throw DimensionMismatchError(source + ": parameter " + name + " value count");
      std::copy(values.begin(), values.end(), t.values().begin());
      ++seen;
    });
    if (seen != params.size()) throw DataError(source + ": unexpected extra parameters");
    return ckpt;
  } catch (const json::exception& e) {
    throw ParseError(source + ": " + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << checkpoint_to_string(ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingFileError("missing checkpoint " + path.string());
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str(), path.string());
}

}  // namespace ranl
