#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "ranl/model.hpp"
#include "ranl/train.hpp"
#include "ranl/types.hpp"

namespace ranl {

// Everything a run needs, resolved from command-line flags, then the config
// file, then built-in defaults.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  Task task = Task::mc;
  std::size_t max_vocab = 6500;
  std::size_t workers = 1;
  std::filesystem::path manifest;
  std::filesystem::path checkpoint;
  std::filesystem::path out;

  // `key = value` lines in a fixed key order; parses back to the same config.
  std::string to_text() const;
};

// Parsed `key = value` pairs. Values keep their text; `where` records the
// source location of each key for error messages.
struct ConfigEntries {
  std::map<std::string, std::string> values;
  std::map<std::string, std::string> where;
};

// Flat text: one `key = value` per line, `#` starts a comment, blank lines
// ignored. Throws ConfigError naming source:line on malformed lines, unknown
// keys and duplicates.
ConfigEntries parse_config_text(const std::string& text, const std::string& source);
ConfigEntries read_config_file(const std::filesystem::path& path);

// Applies `file` then `flags` over the defaults. Relative paths from a file
// are taken relative to `base_dir`; flag paths are used as given. Throws
// ConfigError naming the key's source on a bad value.
RunConfig resolve_run_config(const ConfigEntries& file, const ConfigEntries& flags,
                             const std::filesystem::path& base_dir = {});

bool is_config_key(const std::string& key);

}  // namespace ranl
