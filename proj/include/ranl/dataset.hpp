#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ranl/model.hpp"
#include "ranl/tensor.hpp"
#include "ranl/types.hpp"
#include "ranl/vocab.hpp"

namespace ranl {

struct QaPair {
  std::vector<TokenId> question;
  std::vector<TokenId> answer;
  ClassId answer_class = 0;
  std::vector<ClassId> candidates;
  QType qtype = QType::what;
};

struct VideoInstance {
  std::string video_id;
  Tensor features;                               // [N x D_f]
  std::vector<std::vector<TokenId>> attributes;  // one set per frame
  std::vector<QaPair> qa;

  std::size_t frames() const { return features.rows(); }
  ExampleView example(std::size_t qa_index) const;
};

enum class SplitName { train, valid, test };

std::string_view to_string(SplitName s);
std::optional<SplitName> parse_split(std::string_view s);

struct DatasetSplit {
  std::vector<VideoInstance> train;
  std::vector<VideoInstance> valid;
  std::vector<VideoInstance> test;

  const std::vector<VideoInstance>& part(SplitName s) const;
  std::vector<VideoInstance>& part(SplitName s);
  std::size_t video_count() const { return train.size() + valid.size() + test.size(); }
};

// Shared token vocabulary (question words, answers and attributes) plus the
// answer label set.
struct Lexicon {
  Vocabulary vocab;
  ClassIndex classes;

  bool operator==(const Lexicon&) const = default;
};

struct Dataset {
  Lexicon lexicon;
  DatasetSplit splits;
};

// (video, qa index) pairs of a split, in file order.
struct ExampleRef {
  const VideoInstance* video;
  std::size_t qa;

  ExampleView view() const { return video->example(qa); }
  const QaPair& pair() const { return video->qa[qa]; }
};

std::vector<ExampleRef> examples_of(const std::vector<VideoInstance>& videos);

// String-level record, as found in a manifest line or produced by a generator.
struct RawQa {
  std::vector<std::string> question;
  std::vector<std::string> answer;
  std::string answer_class;
  std::vector<std::string> candidates;
  QType qtype = QType::what;
};

struct RawVideo {
  std::string video_id;
  SplitName split = SplitName::train;
  Tensor features;
  std::vector<std::vector<std::string>> attributes;
  std::vector<RawQa> qa;
  std::size_t line = 0;  // 1-based manifest line, 0 when generated
};

struct LoadOptions {
  std::size_t max_vocab = 6500;
  // When set, every instance must match.
  std::optional<std::size_t> frames;
  std::optional<std::size_t> feature_dim;
};

// Reads a JSON-lines manifest and its little-endian float32 feature files.
// Builds the vocabulary from train-split tokens (all splits when there is no
// train split) and the class index from every label in the manifest.
Dataset load_dataset(const std::filesystem::path& manifest, const LoadOptions& options = {});

// Same, but resolves tokens and labels against an existing lexicon (e.g. one
// restored from a checkpoint). Unknown words map to <Unk>; unknown labels are
// rejected.
Dataset load_dataset(const std::filesystem::path& manifest, const Lexicon& lexicon,
                     const LoadOptions& options = {});

// Validates raw records and maps them to ids (lexicon built as above).
Dataset resolve_dataset(const std::vector<RawVideo>& raw, const LoadOptions& options = {});
Dataset resolve_dataset(const std::vector<RawVideo>& raw, const Lexicon& lexicon, const LoadOptions& options = {});

// Writes `<dir>/<manifest_name>` plus one feature file per video under
// `<dir>/features/`. Output bytes depend only on the dataset.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                   const std::string& manifest_name = "manifest.jsonl");

// Checks the VideoInstance invariants; throws DataError subclasses.
void validate_instance(const VideoInstance& video, const Lexicon& lexicon);

}  // namespace ranl
