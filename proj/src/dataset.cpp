#include "ranl/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "ranl/errors.hpp"

namespace ranl {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(SplitName s) {
  switch (s) {
    case SplitName::train:
      return "train";
    case SplitName::valid:
      return "valid";
    case SplitName::test:
      return "test";
  }
  return "?";
}

std::optional<SplitName> parse_split(std::string_view s) {
  if (s == "train") return SplitName::train;
  if (s == "valid") return SplitName::valid;
  if (s == "test") return SplitName::test;
  return std::nullopt;
}

const std::vector<VideoInstance>& DatasetSplit::part(SplitName s) const {
  switch (s) {
    case SplitName::train:
      return train;
    case SplitName::valid:
      return valid;
    case SplitName::test:
      return test;
  }
  return train;
}

std::vector<VideoInstance>& DatasetSplit::part(SplitName s) {
  return const_cast<std::vector<VideoInstance>&>(std::as_const(*this).part(s));
}

ExampleView VideoInstance::example(std::size_t qa_index) const {
  const QaPair& pair = qa.at(qa_index);
  ExampleView view;
  view.id = video_id;
  view.features = &features;
  view.attributes = attributes;
  view.question = pair.question;
  view.answer = pair.answer;
  view.answer_class = pair.answer_class;
  view.candidates = pair.candidates;
  return view;
}

std::vector<ExampleRef> examples_of(const std::vector<VideoInstance>& videos) {
  std::vector<ExampleRef> out;
  for (const auto& v : videos) {
    for (std::size_t q = 0; q < v.qa.size(); ++q) out.push_back({&v, q});
  }
  return out;
}

namespace {

constexpr SplitName kSplits[] = {SplitName::train, SplitName::valid, SplitName::test};

std::string where(const fs::path& file, std::size_t line) {
  return file.filename().string() + ":" + std::to_string(line);
}

std::string origin(const RawVideo& v) {
  std::string s = "video '" + v.video_id + "'";
  if (v.line > 0) s += " (manifest line " + std::to_string(v.line) + ")";
  return s;
}

Tensor read_features(const fs::path& file, const std::string& video_id, std::size_t frames, std::size_t dim) {
  if (!fs::exists(file)) throw MissingFileError("video '" + video_id + "': missing feature file " + file.string());
  std::ifstream in(file, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t expected = frames * dim * 4;
  if (bytes.size() != expected) {
    std::ostringstream msg;
    msg << "video '" << video_id << "': feature file " << file.filename().string() << " holds " << bytes.size() / 4
        << " floats (" << (dim == 0 ? 0 : bytes.size() / 4 / dim) << " rows), manifest says " << frames << "x"
        << dim;
    throw DimensionMismatchError(msg.str());
  }
  Tensor out(Shape::matrix(frames, dim));
  for (std::size_t i = 0; i < frames * dim; ++i) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + 4 * i);
    const std::uint32_t word = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
                               std::uint32_t(p[3]) << 24;
    out[i] = static_cast<double>(std::bit_cast<float>(word));
  }
  return out;
}

void write_features(const fs::path& file, const Tensor& features) {
  std::string bytes(features.size() * 4, '\0');
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto word = std::bit_cast<std::uint32_t>(static_cast<float>(features[i]));
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<char>((word >> (8 * b)) & 0xFF);
  }
  std::ofstream out(file, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("cannot write " + file.string());
}

template <typename T>
T field(const json& obj, const char* name, const fs::path& file, std::size_t line) {
  if (!obj.contains(name)) throw ParseError(where(file, line) + ": missing field '" + name + "'");
  try {
    return obj.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where(file, line) + ": field '" + name + "': " + e.what());
  }
}

std::vector<RawVideo> parse_manifest(const fs::path& manifest) {
  if (!fs::exists(manifest)) throw MissingFileError("missing manifest " + manifest.string());
  std::ifstream in(manifest);
  std::vector<RawVideo> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError(where(manifest, line) + ": " + e.what());
    }
    RawVideo v;
    v.line = line;
    v.video_id = field<std::string>(rec, "video_id", manifest, line);
    const auto frames = field<std::size_t>(rec, "n_frames", manifest, line);
    const auto dim = field<std::size_t>(rec, "feature_dim", manifest, line);
    const auto split = rec.contains("split") ? field<std::string>(rec, "split", manifest, line) : "train";
    if (auto s = parse_split(split)) {
      v.split = *s;
    } else {
      throw ParseError(where(manifest, line) + ": unknown split '" + split + "'");
    }
    v.attributes = field<std::vector<std::vector<std::string>>>(rec, "attributes", manifest, line);
    if (!rec.contains("qa") || !rec["qa"].is_array()) throw ParseError(where(manifest, line) + ": missing qa array");
    for (const json& q : rec["qa"]) {
      RawQa qa;
      qa.question = field<std::vector<std::string>>(q, "q", manifest, line);
      qa.answer = field<std::vector<std::string>>(q, "a", manifest, line);
      qa.answer_class = field<std::string>(q, "answer_class", manifest, line);
      qa.candidates = field<std::vector<std::string>>(q, "candidates", manifest, line);
      const auto qtype = field<std::string>(q, "qtype", manifest, line);
      if (auto t = parse_qtype(qtype)) {
        qa.qtype = *t;
      } else {
        throw ParseError(where(manifest, line) + ": unknown qtype '" + qtype + "'");
      }
      v.qa.push_back(std::move(qa));
    }
    const auto feature_file = field<std::string>(rec, "feature_file", manifest, line);
    v.features = read_features(manifest.parent_path() / feature_file, v.video_id, frames, dim);
    out.push_back(std::move(v));
  }
  return out;
}

void check_raw(const RawVideo& v, const LoadOptions& options) {
  if (v.video_id.empty()) throw DataError("manifest line " + std::to_string(v.line) + ": empty video_id");
  if (v.features.rank() != 2 || v.features.rows() == 0) {
    throw DimensionMismatchError(origin(v) + ": features must be a non-empty frame matrix");
  }
  if (v.attributes.size() != v.features.rows()) {
    throw DimensionMismatchError(origin(v) + ": " + std::to_string(v.attributes.size()) + " attribute sets for " +
                                 std::to_string(v.features.rows()) + " frames");
  }
  if (options.frames && v.features.rows() != *options.frames) {
    throw DimensionMismatchError(origin(v) + ": " + std::to_string(v.features.rows()) + " frames, expected " +
                                 std::to_string(*options.frames));
  }
  if (options.feature_dim && v.features.cols() != *options.feature_dim) {
    throw DimensionMismatchError(origin(v) + ": feature_dim " + std::to_string(v.features.cols()) + ", expected " +
                                 std::to_string(*options.feature_dim));
  }
  if (!v.features.all_finite()) throw DataError(origin(v) + ": non-finite feature value");
  auto check_tokens = [&](const std::vector<std::string>& tokens, const char* what) {
    for (const auto& t : tokens) {
      if (t.empty() || t.find_first_of(" \t\r\n") != std::string::npos) {
        throw BadTokenError(origin(v) + ": invalid " + what + " token '" + t + "'");
      }
    }
  };
  for (const auto& set : v.attributes) check_tokens(set, "attribute");
  for (const auto& qa : v.qa) {
    if (qa.question.empty()) throw BadTokenError(origin(v) + ": empty question");
    check_tokens(qa.question, "question");
    check_tokens(qa.answer, "answer");
    if (qa.answer_class.empty()) throw BadTokenError(origin(v) + ": empty answer_class");
    if (!qa.candidates.empty() &&
        std::find(qa.candidates.begin(), qa.candidates.end(), qa.answer_class) == qa.candidates.end()) {
      throw BadTokenError(origin(v) + ": answer_class '" + qa.answer_class + "' is not among its candidates");
    }
  }
}

Lexicon build_lexicon(const std::vector<RawVideo>& raw, const LoadOptions& options) {
  const bool has_train = std::any_of(raw.begin(), raw.end(), [](const RawVideo& v) { return v.split == SplitName::train; });
  std::vector<std::vector<std::string>> corpus;
  std::set<std::string> labels;
  for (const auto& v : raw) {
    for (const auto& qa : v.qa) {
      labels.insert(qa.answer_class);
      labels.insert(qa.candidates.begin(), qa.candidates.end());
    }
    if (has_train && v.split != SplitName::train) continue;
    for (const auto& set : v.attributes) corpus.push_back(set);
    for (const auto& qa : v.qa) {
      corpus.push_back(qa.question);
      corpus.push_back(qa.answer);
    }
  }
  return Lexicon{build_vocab(corpus, options.max_vocab), ClassIndex(std::vector<std::string>(labels.begin(), labels.end()))};
}

}  // namespace

void validate_instance(const VideoInstance& video, const Lexicon& lexicon) {
  const std::string who = "video '" + video.video_id + "'";
  if (video.features.rank() != 2 || video.features.rows() == 0) {
    throw DimensionMismatchError(who + ": features must be a non-empty frame matrix");
  }
  if (video.attributes.size() != video.features.rows()) {
    throw DimensionMismatchError(who + ": " + std::to_string(video.attributes.size()) + " attribute sets for " +
                                 std::to_string(video.features.rows()) + " frames");
  }
  auto check_ids = [&](const std::vector<TokenId>& ids) {
    for (TokenId id : ids) {
      if (id >= lexicon.vocab.size()) throw BadTokenError(who + ": token id " + std::to_string(id) + " out of range");
    }
  };
  for (const auto& set : video.attributes) check_ids(set);
  for (const auto& qa : video.qa) {
    if (qa.question.empty()) throw BadTokenError(who + ": empty question");
    check_ids(qa.question);
    check_ids(qa.answer);
    if (qa.answer_class >= lexicon.classes.size()) throw BadTokenError(who + ": answer class out of range");
    for (ClassId c : qa.candidates) {
      if (c >= lexicon.classes.size()) throw BadTokenError(who + ": candidate class out of range");
    }
  }
}

Dataset resolve_dataset(const std::vector<RawVideo>& raw, const LoadOptions& options) {
  for (const auto& v : raw) check_raw(v, options);
  return resolve_dataset(raw, build_lexicon(raw, options), options);
}

Dataset resolve_dataset(const std::vector<RawVideo>& raw, const Lexicon& lexicon, const LoadOptions& options) {
  Dataset out;
  out.lexicon = lexicon;
  std::unordered_set<std::string> seen;
  for (const auto& v : raw) {
    check_raw(v, options);
    if (!seen.insert(v.video_id).second) {
      throw DataError(origin(v) + ": duplicate video_id (splits must be disjoint by video)");
    }
    VideoInstance inst;
    inst.video_id = v.video_id;
    inst.features = v.features;
    for (const auto& set : v.attributes) inst.attributes.push_back(lexicon.vocab.encode(set));
    for (const auto& qa : v.qa) {
      QaPair pair;
      pair.question = lexicon.vocab.encode(qa.question);
      pair.answer = lexicon.vocab.encode(qa.answer);
      pair.qtype = qa.qtype;
      try {
        pair.answer_class = lexicon.classes.id(qa.answer_class);
        for (const auto& c : qa.candidates) pair.candidates.push_back(lexicon.classes.id(c));
      } catch (const BadTokenError& e) {
        throw BadTokenError(origin(v) + ": " + e.what());
      }
      inst.qa.push_back(std::move(pair));
    }
    validate_instance(inst, lexicon);
    out.splits.part(v.split).push_back(std::move(inst));
  }
  return out;
}

Dataset load_dataset(const fs::path& manifest, const LoadOptions& options) {
  return resolve_dataset(parse_manifest(manifest), options);
}

Dataset load_dataset(const fs::path& manifest, const Lexicon& lexicon, const LoadOptions& options) {
  return resolve_dataset(parse_manifest(manifest), lexicon, options);
}

void write_dataset(const Dataset& dataset, const fs::path& dir, const std::string& manifest_name) {
  fs::create_directories(dir / "features");
  std::ofstream manifest(dir / manifest_name, std::ios::binary);
  if (!manifest) throw DataError("cannot write " + (dir / manifest_name).string());
  const Lexicon& lex = dataset.lexicon;
  for (SplitName split : kSplits) {
    for (const auto& v : dataset.splits.part(split)) {
      const std::string feature_file = "features/" + v.video_id + ".f32";
      write_features(dir / feature_file, v.features);
      nlohmann::ordered_json rec;
      rec["video_id"] = v.video_id;
      rec["split"] = std::string(to_string(split));
      rec["feature_file"] = feature_file;
      rec["n_frames"] = v.features.rows();
      rec["feature_dim"] = v.features.cols();
      auto& attrs = rec["attributes"] = nlohmann::ordered_json::array();
      for (const auto& set : v.attributes) attrs.push_back(lex.vocab.decode(set));
      auto& qas = rec["qa"] = nlohmann::ordered_json::array();
      for (const auto& qa : v.qa) {
        nlohmann::ordered_json q;
        q["q"] = lex.vocab.decode(qa.question);
        q["a"] = lex.vocab.decode(qa.answer);
        q["answer_class"] = lex.classes.label(qa.answer_class);
        auto& cands = q["candidates"] = nlohmann::ordered_json::array();
        for (ClassId c : qa.candidates) cands.push_back(lex.classes.label(c));
        q["qtype"] = std::string(to_string(qa.qtype));
        qas.push_back(std::move(q));
      }
      manifest << rec.dump() << '\n';
    }
  }
}

}  // namespace ranl
