#pragma once

#include <filesystem>
#include <string>

#include "ranl/dataset.hpp"
#include "ranl/model.hpp"

namespace ranl {

inline constexpr int kCheckpointFormatVersion = 1;

// A trained model with everything needed to run it on raw text: config,
// parameters, vocabulary and answer labels. Stored as one JSON document whose
// numbers round-trip exactly.
struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  Lexicon lexicon;
  Task task = Task::mc;

  Model model() const { return Model{config, params}; }
};

std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(const std::string& text, const std::string& source = "<string>");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws MissingFileError naming the path when it does not exist.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ranl
