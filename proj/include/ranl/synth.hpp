#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ranl/dataset.hpp"

namespace ranl {

enum class RuleKind { one_hop, two_hop };

std::string_view to_string(RuleKind k);
std::optional<RuleKind> parse_rule_kind(std::string_view s);

// Ground-truth mapping from question cue + frame attributes to the answer.
//
// one-hop: each family pairs a cue word with a set of attribute tokens. A
//   video carries exactly one attribute of the asked family, at a random
//   frame; the answer is that attribute.
// two-hop: a video carries one `first` attribute and one `second` attribute
//   at two distinct frames; the answer is "<first>+<second>", whatever the
//   cue word.
//
// Other frames hold at most one attribute from `noise`, which never decides an
// answer. Frame features are Gaussian noise and carry no signal.
struct PlantedRule {
  struct Family {
    QType qtype;
    std::string cue;
    std::vector<std::string> attributes;
  };

  RuleKind kind = RuleKind::one_hop;
  std::vector<Family> families;     // one-hop answer families; cues for two-hop
  std::vector<std::string> first;   // two-hop
  std::vector<std::string> second;  // two-hop
  std::vector<std::string> noise;
  std::vector<std::string> fillers;

  static PlantedRule standard(RuleKind kind);

  // Throws ConfigError when the rule is unusable (no classes, overlapping
  // token roles, missing cues...).
  void validate() const;

  // All answer labels, sorted.
  std::vector<std::string> classes() const;

  // Reads the rule: the answer implied by a question and per-frame attributes.
  // Throws DataError if the instance does not carry the cue or attributes.
  std::string answer(const std::vector<std::string>& question,
                     const std::vector<std::vector<std::string>>& attributes) const;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
  std::size_t total() const { return train + valid + test; }
};

// Train/valid/test shares of the reference corpus (88,350 / 6,481 / 4,590
// question-answer pairs).
SplitSizes table_split(std::size_t count);

struct SynthOptions {
  std::size_t count = 1000;
  std::size_t frames = 8;
  std::size_t feature_dim = 32;
  std::uint64_t seed = 0;
  // Overrides the default proportional split; count is ignored when set.
  std::optional<SplitSizes> sizes;
  // Candidates listed per question, including the answer. 0 = every class.
  std::size_t candidates = 0;
  std::size_t max_vocab = 6500;
};

// Raw records in generation order; the same seed always yields the same bytes.
std::vector<RawVideo> synth_records(const PlantedRule& rule, const SynthOptions& options);

Dataset synth_generate(const PlantedRule& rule, const SynthOptions& options);

}  // namespace ranl
