#include "ranl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "ranl/errors.hpp"
#include "ranl/rng.hpp"

namespace ranl {

std::string_view to_string(RuleKind k) { return k == RuleKind::one_hop ? "one-hop" : "two-hop"; }

std::optional<RuleKind> parse_rule_kind(std::string_view s) {
  if (s == "one-hop") return RuleKind::one_hop;
  if (s == "two-hop") return RuleKind::two_hop;
  return std::nullopt;
}

PlantedRule PlantedRule::standard(RuleKind kind) {
  PlantedRule rule;
  rule.kind = kind;
  rule.noise = {"tree", "sky", "road", "wall", "light", "grass"};
  rule.fillers = {"is", "the", "in", "this", "video", "shown", "there", "seen"};
  if (kind == RuleKind::one_hop) {
    rule.families = {
        {QType::what, "what", {"ball", "cup", "book"}},
        {QType::who, "who", {"man", "woman", "child"}},
        {QType::other, "where", {"kitchen", "park"}},
    };
  } else {
    rule.families = {
        {QType::what, "what", {}},
        {QType::who, "who", {}},
        {QType::other, "which", {}},
    };
    rule.first = {"man", "woman"};
    rule.second = {"ball", "cup", "book", "phone"};
  }
  return rule;
}

void PlantedRule::validate() const {
  if (families.empty()) throw ConfigError("planted rule has no cue families");
  std::set<std::string> seen;
  auto claim = [&](const std::string& token, const char* role) {
    if (token.empty() || token.find_first_of(" \t\n+") != std::string::npos) {
      throw ConfigError(std::string("planted rule: invalid ") + role + " token '" + token + "'");
    }
    if (!seen.insert(token).second) throw ConfigError("planted rule: token '" + token + "' has two roles");
  };
  for (const auto& f : families) claim(f.cue, "cue");
  for (const auto& t : noise) claim(t, "noise");
  for (const auto& t : fillers) claim(t, "filler");
  if (kind == RuleKind::one_hop) {
    for (const auto& f : families) {
      if (f.attributes.empty()) throw ConfigError("planted rule: family '" + f.cue + "' has no attributes");
      for (const auto& a : f.attributes) claim(a, "attribute");
    }
  } else {
    if (first.empty() || second.empty()) throw ConfigError("planted rule: two-hop needs both attribute groups");
    for (const auto& a : first) claim(a, "attribute");
    for (const auto& a : second) claim(a, "attribute");
  }
  if (classes().size() < 2) throw ConfigError("planted rule must define at least 2 answers");
}

std::vector<std::string> PlantedRule::classes() const {
  std::vector<std::string> out;
  if (kind == RuleKind::one_hop) {
    for (const auto& f : families) out.insert(out.end(), f.attributes.begin(), f.attributes.end());
  } else {
    for (const auto& a : first)
      for (const auto& b : second) out.push_back(a + "+" + b);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string PlantedRule::answer(const std::vector<std::string>& question,
                                const std::vector<std::vector<std::string>>& attributes) const {
  const Family* family = nullptr;
  for (const auto& f : families) {
    if (std::find(question.begin(), question.end(), f.cue) != question.end()) family = &f;
  }
  if (family == nullptr) throw DataError("question carries no cue word");
  auto find_frame = [&](const std::vector<std::string>& group) -> std::optional<std::pair<std::size_t, std::string>> {
    for (std::size_t i = 0; i < attributes.size(); ++i) {
      for (const auto& a : attributes[i]) {
        if (std::find(group.begin(), group.end(), a) != group.end()) return std::make_pair(i, a);
      }
    }
    return std::nullopt;
  };
  if (kind == RuleKind::one_hop) {
    auto hit = find_frame(family->attributes);
    if (!hit) throw DataError("no attribute of the '" + family->cue + "' family in the video");
    return hit->second;
  }
  auto a = find_frame(first);
  auto b = find_frame(second);
  if (!a || !b) throw DataError("two-hop video lacks one of its key attributes");
  if (a->first == b->first) throw DataError("two-hop key attributes share a frame");
  return a->second + "+" + b->second;
}

SplitSizes table_split(std::size_t count) {
  constexpr std::size_t kTrain = 88350, kValid = 6481, kTotal = 88350 + 6481 + 4590;
  SplitSizes s;
  s.train = (count * kTrain + kTotal / 2) / kTotal;
  s.valid = (count * kValid + kTotal / 2) / kTotal;
  s.test = count - s.train - s.valid;
  return s;
}

std::vector<RawVideo> synth_records(const PlantedRule& rule, const SynthOptions& options) {
  rule.validate();
  const SplitSizes sizes = options.sizes.value_or(table_split(options.count));
  if (sizes.total() < 10) throw ConfigError("synthetic dataset needs at least 10 instances");
  if (options.frames < 2) throw ConfigError("synthetic videos need at least 2 frames");
  if (options.feature_dim == 0) throw ConfigError("feature_dim must be >= 1");

  const std::vector<std::string> classes = rule.classes();
  Rng rng(options.seed);

  // Stratified labels: every class appears floor or ceil of total / C times.
  std::vector<std::size_t> labels(sizes.total());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % classes.size();
  rng.shuffle(labels);

  std::vector<RawVideo> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    RawVideo v;
    char id[32];
    std::snprintf(id, sizeof id, "syn%06zu", i);
    v.video_id = id;
    v.split = i < sizes.train ? SplitName::train : (i < sizes.train + sizes.valid ? SplitName::valid : SplitName::test);

    v.features = Tensor(Shape::matrix(options.frames, options.feature_dim));
    for (double& x : v.features.values()) x = static_cast<double>(static_cast<float>(rng.normal()));

    v.attributes.assign(options.frames, {});
    for (auto& set : v.attributes) {
      if (rng.below(2) == 0) set.push_back(rule.noise[rng.below(rule.noise.size())]);
    }

    const std::string& label = classes[labels[i]];
    const PlantedRule::Family* family = nullptr;
    if (rule.kind == RuleKind::one_hop) {
      for (const auto& f : rule.families) {
        if (std::find(f.attributes.begin(), f.attributes.end(), label) != f.attributes.end()) family = &f;
      }
      v.attributes[rng.below(options.frames)].push_back(label);
    } else {
      family = &rule.families[rng.below(rule.families.size())];
      const auto plus = label.find('+');
      const std::size_t a = rng.below(options.frames);
      std::size_t b = rng.below(options.frames - 1);
      if (b >= a) ++b;
      v.attributes[a].push_back(label.substr(0, plus));
      v.attributes[b].push_back(label.substr(plus + 1));
    }

    RawQa qa;
    qa.qtype = family->qtype;
    qa.question.push_back(family->cue);
    const std::size_t extra = 2 + rng.below(4);  // 3..6 tokens in total
    for (std::size_t k = 0; k < extra; ++k) qa.question.push_back(rule.fillers[rng.below(rule.fillers.size())]);
    qa.answer = {label};
    qa.answer_class = label;
    if (options.candidates == 0 || options.candidates >= classes.size()) {
      qa.candidates = classes;
    } else {
      std::vector<std::string> others;
      for (const auto& c : classes) {
        if (c != label) others.push_back(c);
      }
      rng.shuffle(others);
      qa.candidates.assign(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(options.candidates - 1));
      qa.candidates.push_back(label);
      rng.shuffle(qa.candidates);
    }

    if (rule.answer(qa.question, v.attributes) != label) {
      throw ContractError("generated instance " + v.video_id + " disagrees with its rule");
    }
    v.qa.push_back(std::move(qa));
    out.push_back(std::move(v));
  }
  return out;
}

Dataset synth_generate(const PlantedRule& rule, const SynthOptions& options) {
  LoadOptions load;
  load.max_vocab = options.max_vocab;
  load.frames = options.frames;
  load.feature_dim = options.feature_dim;
  return resolve_dataset(synth_records(rule, options), load);
}

}  // namespace ranl
