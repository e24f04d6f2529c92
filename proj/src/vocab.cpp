#include "ranl/vocab.hpp"

#include <algorithm>
#include <map>

#include "ranl/errors.hpp"

namespace ranl {

Vocabulary::Vocabulary() {
  for (const char* t : {kPadToken, kBosToken, kEosToken, kUnkToken}) add(t);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  const char* reserved[] = {kPadToken, kBosToken, kEosToken, kUnkToken};
  if (tokens.size() < kReservedTokens) throw DataError("vocabulary is missing reserved tokens");
  for (std::size_t i = 0; i < kReservedTokens; ++i) {
    if (tokens[i] != reserved[i]) throw DataError("vocabulary entry " + std::to_string(i) + " must be " + reserved[i]);
  }
  Vocabulary v;
  for (std::size_t i = kReservedTokens; i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) throw DataError("duplicate vocabulary token '" + tokens[i] + "'");
    v.add(tokens[i]);
  }
  return v;
}

TokenId Vocabulary::add(const std::string& token) {
  auto [it, inserted] = ids_.try_emplace(token, tokens_.size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.contains(std::string(token)); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw IndexError("token id " + std::to_string(id) + " out of vocabulary");
  return tokens_[id];
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId i : ids) out.push_back(token(i));
  return out;
}

Vocabulary build_vocab(std::span<const std::vector<std::string>> corpus, std::size_t max_size) {
  if (max_size <= kReservedTokens) throw ConfigError("vocabulary max_size must exceed 4");
  Vocabulary vocab;
  std::map<std::string, std::size_t> counts;
  for (const auto& stream : corpus) {
    for (const auto& token : stream) {
      if (!vocab.contains(token)) ++counts[token];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // std::map iteration is lexicographic, so a stable sort by count keeps ties ordered.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(ranked.size(), max_size - kReservedTokens);
  for (std::size_t i = 0; i < keep; ++i) vocab.add(ranked[i].first);
  return vocab;
}

ClassIndex::ClassIndex(std::vector<std::string> labels) {
  for (auto& l : labels) {
    if (contains(l)) throw DataError("duplicate answer class '" + l + "'");
    add(l);
  }
}

ClassId ClassIndex::add(const std::string& label) {
  auto [it, inserted] = ids_.try_emplace(label, labels_.size());
  if (inserted) labels_.push_back(label);
  return it->second;
}

bool ClassIndex::contains(std::string_view label) const { return ids_.contains(std::string(label)); }

ClassId ClassIndex::id(std::string_view label) const {
  auto it = ids_.find(std::string(label));
  if (it == ids_.end()) throw BadTokenError("unknown answer class '" + std::string(label) + "'");
  return it->second;
}

const std::string& ClassIndex::label(ClassId id) const {
  if (id >= labels_.size()) throw IndexError("class id " + std::to_string(id) + " out of range");
  return labels_[id];
}

}  // namespace ranl
