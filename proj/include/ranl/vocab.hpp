#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ranl/types.hpp"

namespace ranl {

// Token <-> id bijection. Ids 0..3 are always <pad>, <bos>, <eos>, <Unk>;
// lookups of unknown tokens return the <Unk> id.
class Vocabulary {
 public:
  Vocabulary();
  // Rebuilds from an id-ordered token list whose first four entries are the
  // reserved tokens.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  // Returns the existing id if the token is already present.
  TokenId add(const std::string& token);
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kBosToken = "<bos>";
inline constexpr const char* kEosToken = "<eos>";
inline constexpr const char* kUnkToken = "<Unk>";

// Keeps the max_size - 4 most frequent tokens, ties broken lexicographically.
// Reserved tokens in the corpus are not counted.
Vocabulary build_vocab(std::span<const std::vector<std::string>> corpus, std::size_t max_size);

// Ordered label set for the multiple-choice head.
class ClassIndex {
 public:
  ClassIndex() = default;
  explicit ClassIndex(std::vector<std::string> labels);

  ClassId add(const std::string& label);
  bool contains(std::string_view label) const;
  // Throws BadTokenError for unknown labels.
  ClassId id(std::string_view label) const;
  const std::string& label(ClassId id) const;
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

  bool operator==(const ClassIndex& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, ClassId> ids_;
};

}  // namespace ranl
