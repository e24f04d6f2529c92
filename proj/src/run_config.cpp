#include "ranl/run_config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ranl/errors.hpp"

namespace ranl {

namespace {

constexpr std::array<const char*, 21> kKeys = {
    "feature_dim", "embed_dim",    "hidden",  "frames",   "vocab_size", "reasoning_steps", "use_attributes",
    "answer_classes", "max_decode_len", "architecture", "learning_rate", "adagrad_eps", "lambda", "epochs",
    "patience",    "seed",         "task",    "manifest", "checkpoint", "out",             "workers"};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& text, const std::string& where) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(where + ": bad value '" + text + "' for " + key);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text, const std::string& where) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw ConfigError(where + ": bad value '" + text + "' for " + key + " (expected true/false)");
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

bool is_config_key(const std::string& key) {
  return std::any_of(kKeys.begin(), kKeys.end(), [&](const char* k) { return key == k; });
}

ConfigEntries parse_config_text(const std::string& text, const std::string& source) {
  ConfigEntries out;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!is_config_key(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    if (out.values.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    out.values[key] = value;
    out.where[key] = where;
  }
  return out;
}

ConfigEntries read_config_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingFileError("missing config file " + path.string());
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

RunConfig resolve_run_config(const ConfigEntries& file, const ConfigEntries& flags,
                             const std::filesystem::path& base_dir) {
  RunConfig rc;
  auto apply = [&](const ConfigEntries& entries, bool from_file) {
    for (const auto& [key, value] : entries.values) {
      const auto it = entries.where.find(key);
      const std::string where = it != entries.where.end() ? it->second : "--" + key;
      auto path = [&] {
        std::filesystem::path p(value);
        return from_file && p.is_relative() && !base_dir.empty() ? (base_dir / p).lexically_normal() : p;
      };
      if (key == "feature_dim") rc.model.feature_dim = parse_number<std::size_t>(key, value, where);
      else if (key == "embed_dim") rc.model.embed_dim = parse_number<std::size_t>(key, value, where);
      else if (key == "hidden") rc.model.hidden = parse_number<std::size_t>(key, value, where);
      else if (key == "frames") rc.model.frames = parse_number<std::size_t>(key, value, where);
      else if (key == "vocab_size") rc.max_vocab = parse_number<std::size_t>(key, value, where);
      else if (key == "reasoning_steps") rc.model.reasoning_steps = parse_number<int>(key, value, where);
      else if (key == "use_attributes") rc.model.use_attributes = parse_bool(key, value, where);
      else if (key == "answer_classes") rc.model.answer_classes = parse_number<std::size_t>(key, value, where);
      else if (key == "max_decode_len") rc.model.max_decode_len = parse_number<std::size_t>(key, value, where);
      else if (key == "architecture") {
        if (value == "ranl") rc.model.architecture = Architecture::ranl;
        else if (value == "vqa+") rc.model.architecture = Architecture::vqa_plus;
        else throw ConfigError(where + ": unknown architecture '" + value + "'");
      } else if (key == "learning_rate") rc.train.learning_rate = parse_number<double>(key, value, where);
      else if (key == "adagrad_eps") rc.train.adagrad_eps = parse_number<double>(key, value, where);
      else if (key == "lambda") rc.train.lambda = parse_number<double>(key, value, where);
      else if (key == "epochs") rc.train.epochs = parse_number<int>(key, value, where);
      else if (key == "patience") rc.train.patience = parse_number<int>(key, value, where);
      else if (key == "seed") rc.train.seed = parse_number<std::uint64_t>(key, value, where);
      else if (key == "task") {
        const auto t = parse_task(value);
        if (!t) throw ConfigError(where + ": unknown task '" + value + "'");
        rc.task = *t;
      } else if (key == "manifest") rc.manifest = path();
      else if (key == "checkpoint") rc.checkpoint = path();
      else if (key == "out") rc.out = path();
      else if (key == "workers") rc.workers = parse_number<std::size_t>(key, value, where);
      else throw ConfigError(where + ": unknown key '" + key + "'");
    }
  };
  apply(file, true);
  apply(flags, false);
  try {
    rc.train.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("resolved config: ") + e.what());
  }
  if (rc.workers == 0) throw ConfigError("resolved config: workers must be >= 1");
  if (rc.max_vocab <= kReservedTokens) throw ConfigError("resolved config: vocab_size must exceed 4");
  return rc;
}

std::string RunConfig::to_text() const {
  std::ostringstream text;
  text << "feature_dim = " << model.feature_dim << "\n"
      << "embed_dim = " << model.embed_dim << "\n"
      << "hidden = " << model.hidden << "\n"
      << "frames = " << model.frames << "\n"
      << "vocab_size = " << max_vocab << "\n"
      << "reasoning_steps = " << model.reasoning_steps << "\n"
      << "use_attributes = " << (model.use_attributes ? "true" : "false") << "\n"
      << "answer_classes = " << model.answer_classes << "\n"
      << "max_decode_len = " << model.max_decode_len << "\n"
      << "architecture = " << to_string(model.architecture) << "\n"
      << "learning_rate = " << format_double(train.learning_rate) << "\n"
      << "adagrad_eps = " << format_double(train.adagrad_eps) << "\n"
      << "lambda = " << format_double(train.lambda) << "\n"
      << "epochs = " << train.epochs << "\n"
      << "patience = " << train.patience << "\n"
      << "seed = " << train.seed << "\n"
      << "task = " << to_string(task) << "\n"
      << "manifest = " << manifest.string() << "\n"
      << "checkpoint = " << checkpoint.string() << "\n"
      << "out = " << out.string() << "\n"
      << "workers = " << workers << "\n";
  return text.str();
}

}  // namespace ranl
