#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ranl/dataset.hpp"
#include "ranl/errors.hpp"
#include "ranl/synth.hpp"
#include "ranl/vocab.hpp"

using namespace ranl;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ranl_test_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

void write_floats(const fs::path& p, std::size_t count, float value = 0.25f) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  for (std::size_t i = 0; i < count; ++i) out.write(reinterpret_cast<const char*>(&value), 4);
}

std::string record(const std::string& id, const std::string& split = "train", std::size_t frames = 2,
                   std::size_t dim = 3, const std::string& answer_class = "dog",
                   const std::string& candidates = R"(["cat","dog"])") {
  std::ostringstream s;
  s << R"({"video_id":")" << id << R"(","split":")" << split << R"(","feature_file":"features/)" << id
    << R"(.f32","n_frames":)" << frames << R"(,"feature_dim":)" << dim << R"(,"attributes":[)";
  for (std::size_t i = 0; i < frames; ++i) s << (i ? "," : "") << (i == 0 ? R"(["dog"])" : "[]");
  s << R"(],"qa":[{"q":["what","is","it"],"a":[")" << answer_class << R"("],"answer_class":")" << answer_class
    << R"(","candidates":)" << candidates << R"(,"qtype":"what"}]})";
  return s.str();
}

}  // namespace

// ---- vocabulary ----

TEST(Vocabulary, ReservedIdsAndUnknown) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.id("<pad>"), kPadId);
  EXPECT_EQ(v.id("<bos>"), kBosId);
  EXPECT_EQ(v.id("<eos>"), kEosId);
  EXPECT_EQ(v.id("<Unk>"), kUnkId);
  const TokenId dog = v.add("dog");
  EXPECT_EQ(dog, 4u);
  EXPECT_EQ(v.add("dog"), dog);
  EXPECT_EQ(v.id("zebra"), kUnkId);
  EXPECT_THROW(v.token(99), IndexError);
}

TEST(Vocabulary, EncodeDecodeRoundTrip) {
  Vocabulary v;
  for (const char* t : {"a", "man", "is", "walking"}) v.add(t);
  const std::vector<std::string> words = {"man", "is", "walking", "a", "man"};
  EXPECT_EQ(v.decode(v.encode(words)), words);
}

TEST(BuildVocab, SingleTokenCorpus) {
  const std::vector<std::vector<std::string>> corpus = {{"hello", "hello"}};
  const Vocabulary v = build_vocab(corpus, 100);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_EQ(v.id("other"), kUnkId);
}

TEST(BuildVocab, TieBrokenLexicographically) {
  const std::vector<std::vector<std::string>> corpus = {{"b", "a"}, {"a", "b"}};
  const Vocabulary v = build_vocab(corpus, 5);
  EXPECT_TRUE(v.contains("a"));
  EXPECT_FALSE(v.contains("b"));
  EXPECT_EQ(v.id("b"), kUnkId);
}

TEST(BuildVocab, FrequencyOrderAndCap) {
  const std::vector<std::vector<std::string>> corpus = {{"z", "z", "z", "y", "y", "x", "w", "<eos>", "<eos>"}};
  const Vocabulary v = build_vocab(corpus, 7);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<pad>", "<bos>", "<eos>", "<Unk>", "z", "y", "w"}));
  EXPECT_THROW(build_vocab(corpus, 4), ConfigError);
}

TEST(ClassIndex, UnknownLabelIsBadToken) {
  ClassIndex c({"cat", "dog"});
  EXPECT_EQ(c.id("dog"), 1u);
  EXPECT_THROW(c.id("cow"), BadTokenError);
}

// ---- loading ----

TEST(Loader, EmptyManifestGivesEmptySplit) {
  const fs::path dir = scratch_dir("empty");
  write_text(dir / "m.jsonl", "");
  const Dataset d = load_dataset(dir / "m.jsonl");
  EXPECT_EQ(d.splits.video_count(), 0u);
}

TEST(Loader, WriteLoadRoundTripIsValueExact) {
  const fs::path dir = scratch_dir("roundtrip");
  SynthOptions o;
  o.sizes = SplitSizes{10, 0, 0};
  o.seed = 4;
  Dataset d = synth_generate(PlantedRule::standard(RuleKind::one_hop), o);
  d.splits.train.resize(1);
  write_dataset(d, dir);
  const Dataset back = load_dataset(dir / "manifest.jsonl");
  ASSERT_EQ(back.splits.train.size(), 1u);
  const auto& a = d.splits.train[0];
  const auto& b = back.splits.train[0];
  EXPECT_EQ(a.video_id, b.video_id);
  EXPECT_TRUE(a.features.same_values(b.features));
  const auto words = [](const Lexicon& l, const std::vector<TokenId>& ids) { return l.vocab.decode(ids); };
  for (std::size_t i = 0; i < a.frames(); ++i) {
    EXPECT_EQ(words(d.lexicon, a.attributes[i]), words(back.lexicon, b.attributes[i]));
  }
  EXPECT_EQ(words(d.lexicon, a.qa[0].question), words(back.lexicon, b.qa[0].question));
  EXPECT_EQ(d.lexicon.classes.label(a.qa[0].answer_class), back.lexicon.classes.label(b.qa[0].answer_class));
  EXPECT_EQ(a.qa[0].qtype, b.qa[0].qtype);
  // Writing the reloaded dataset reproduces the same bytes.
  const fs::path again = scratch_dir("roundtrip2");
  write_dataset(back, again);
  EXPECT_EQ(slurp(dir / "manifest.jsonl"), slurp(again / "manifest.jsonl"));
}

TEST(Loader, CorruptedRowCountNamesVideo) {
  const fs::path dir = scratch_dir("rows");
  write_text(dir / "m.jsonl", record("vid-ok") + "\n" + record("vid-bad") + "\n");
  write_floats(dir / "features/vid-ok.f32", 6);
  write_floats(dir / "features/vid-bad.f32", 9);  // 3 rows instead of 2
  try {
    load_dataset(dir / "m.jsonl");
    FAIL() << "expected DimensionMismatchError";
  } catch (const DimensionMismatchError& e) {
    EXPECT_NE(std::string(e.what()).find("vid-bad"), std::string::npos);
    EXPECT_STREQ(e.kind(), "dim-mismatch");
  }
}

TEST(Loader, DistinctErrorKinds) {
  const fs::path dir = scratch_dir("kinds");
  EXPECT_THROW(load_dataset(dir / "absent.jsonl"), MissingFileError);

  write_text(dir / "nofeat.jsonl", record("v1") + "\n");
  try {
    load_dataset(dir / "nofeat.jsonl");
    FAIL();
  } catch (const MissingFileError& e) {
    EXPECT_STREQ(e.kind(), "missing-file");
  }

  write_floats(dir / "features/v1.f32", 6);
  write_text(dir / "badclass.jsonl", record("v1", "train", 2, 3, "dog", R"(["cat"])") + "\n");
  try {
    load_dataset(dir / "badclass.jsonl");
    FAIL();
  } catch (const BadTokenError& e) {
    EXPECT_STREQ(e.kind(), "bad-token");
  }

  write_text(dir / "garbled.jsonl", record("v1") + "\n{not json\n");
  try {
    load_dataset(dir / "garbled.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_STREQ(e.kind(), "parse");
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos);
  }

  write_text(dir / "attrs.jsonl",
             R"({"video_id":"v1","feature_file":"features/v1.f32","n_frames":2,"feature_dim":3,"attributes":[[]],)"
             R"("qa":[{"q":["x"],"a":["dog"],"answer_class":"dog","candidates":["dog","cat"],"qtype":"who"}]})"
             "\n");
  EXPECT_THROW(load_dataset(dir / "attrs.jsonl"), DimensionMismatchError);

  write_text(dir / "dup.jsonl", record("v1") + "\n" + record("v1", "test") + "\n");
  EXPECT_THROW(load_dataset(dir / "dup.jsonl"), DataError);
}

TEST(Loader, RequiredDimensions) {
  const fs::path dir = scratch_dir("dims");
  write_text(dir / "m.jsonl", record("v1") + "\n");
  write_floats(dir / "features/v1.f32", 6);
  LoadOptions o;
  o.frames = 2;
  o.feature_dim = 3;
  EXPECT_NO_THROW(load_dataset(dir / "m.jsonl", o));
  o.frames = 40;
  EXPECT_THROW(load_dataset(dir / "m.jsonl", o), DimensionMismatchError);
}

TEST(Loader, VocabularyFromTrainAndSortedClasses) {
  const fs::path dir = scratch_dir("vocab");
  std::string train = record("t1");
  std::string test = record("x1", "test", 2, 3, "cat");
  // A question word seen only in the test split.
  const auto pos = test.find(R"("it")");
  test.replace(pos, 4, R"("unseen")");
  write_text(dir / "m.jsonl", train + "\n" + test + "\n");
  write_floats(dir / "features/t1.f32", 6);
  write_floats(dir / "features/x1.f32", 6);
  const Dataset d = load_dataset(dir / "m.jsonl");
  EXPECT_FALSE(d.lexicon.vocab.contains("unseen"));
  EXPECT_EQ(d.splits.test[0].qa[0].question.back(), kUnkId);
  EXPECT_EQ(d.lexicon.classes.labels(), (std::vector<std::string>{"cat", "dog"}));
  EXPECT_EQ(d.splits.train.size(), 1u);
  EXPECT_EQ(d.splits.test.size(), 1u);
}

TEST(Loader, ExistingLexiconRejectsUnknownLabels) {
  const fs::path dir = scratch_dir("lexicon");
  write_text(dir / "m.jsonl", record("v1") + "\n");
  write_floats(dir / "features/v1.f32", 6);
  Lexicon lex;
  lex.classes = ClassIndex({"cat", "cow"});
  EXPECT_THROW(load_dataset(dir / "m.jsonl", lex), BadTokenError);
}

TEST(ValidateInstance, RejectsBrokenInvariants) {
  Lexicon lex;
  lex.vocab.add("dog");
  lex.classes = ClassIndex({"a", "b"});
  VideoInstance v;
  v.video_id = "v";
  v.features = Tensor(Shape::matrix(2, 3));
  v.attributes = {{4}, {}};
  QaPair qa;
  qa.question = {4};
  qa.answer = {4};
  qa.answer_class = 1;
  qa.candidates = {0, 1};
  v.qa = {qa};
  EXPECT_NO_THROW(validate_instance(v, lex));
  VideoInstance bad = v;
  bad.attributes.pop_back();
  EXPECT_THROW(validate_instance(bad, lex), DimensionMismatchError);
  bad = v;
  bad.qa[0].question = {99};
  EXPECT_THROW(validate_instance(bad, lex), BadTokenError);
  bad = v;
  bad.qa[0].answer_class = 2;
  EXPECT_THROW(validate_instance(bad, lex), BadTokenError);
}

// ---- synthetic data ----

TEST(Synth, SameSeedSameBytes) {
  SynthOptions o;
  o.count = 120;
  o.seed = 7;
  const fs::path a = scratch_dir("synth_a"), b = scratch_dir("synth_b");
  write_dataset(synth_generate(PlantedRule::standard(RuleKind::two_hop), o), a);
  write_dataset(synth_generate(PlantedRule::standard(RuleKind::two_hop), o), b);
  EXPECT_EQ(slurp(a / "manifest.jsonl"), slurp(b / "manifest.jsonl"));
  for (const auto& entry : fs::directory_iterator(a / "features")) {
    EXPECT_EQ(slurp(entry.path()), slurp(b / "features" / entry.path().filename()));
  }
  o.seed = 8;
  const fs::path c = scratch_dir("synth_c");
  write_dataset(synth_generate(PlantedRule::standard(RuleKind::two_hop), o), c);
  EXPECT_NE(slurp(a / "manifest.jsonl"), slurp(c / "manifest.jsonl"));
}

TEST(Synth, RuleOracleLabelsEveryInstance) {
  for (RuleKind kind : {RuleKind::one_hop, RuleKind::two_hop}) {
    const PlantedRule rule = PlantedRule::standard(kind);
    SynthOptions o;
    o.count = 500;
    o.seed = 3;
    for (const auto& v : synth_records(rule, o)) {
      for (const auto& qa : v.qa) {
        EXPECT_EQ(rule.answer(qa.question, v.attributes), qa.answer_class);
        EXPECT_EQ(qa.answer, std::vector<std::string>{qa.answer_class});
        EXPECT_GE(qa.question.size(), 3u);
        EXPECT_LE(qa.question.size(), 6u);
        std::size_t cues = 0;
        for (const auto& w : qa.question) {
          for (const auto& f : rule.families) cues += (w == f.cue);
        }
        EXPECT_EQ(cues, 1u);
      }
    }
  }
}

TEST(Synth, TwoHopKeysAtDistinctFrames) {
  const PlantedRule rule = PlantedRule::standard(RuleKind::two_hop);
  SynthOptions o;
  o.count = 300;
  o.seed = 5;
  for (const auto& v : synth_records(rule, o)) {
    int first_frame = -1, second_frame = -1;
    for (std::size_t i = 0; i < v.attributes.size(); ++i) {
      for (const auto& a : v.attributes[i]) {
        if (std::find(rule.first.begin(), rule.first.end(), a) != rule.first.end()) first_frame = int(i);
        if (std::find(rule.second.begin(), rule.second.end(), a) != rule.second.end()) second_frame = int(i);
      }
    }
    ASSERT_GE(first_frame, 0);
    ASSERT_GE(second_frame, 0);
    EXPECT_NE(first_frame, second_frame);
  }
}

TEST(Synth, OneHopMajorityBaselineIsNearChance) {
  SynthOptions o;
  o.sizes = SplitSizes{2000, 300, 0};
  o.seed = 1;
  const Dataset d = synth_generate(PlantedRule::standard(RuleKind::one_hop), o);
  const std::size_t C = d.lexicon.classes.size();
  ASSERT_EQ(C, 8u);
  std::map<ClassId, std::size_t> train_counts;
  for (const auto& v : d.splits.train) ++train_counts[v.qa[0].answer_class];
  ClassId majority = 0;
  for (const auto& [c, n] : train_counts) {
    if (n > train_counts[majority]) majority = c;
  }
  std::size_t hits = 0;
  for (const auto& v : d.splits.valid) hits += v.qa[0].answer_class == majority;
  EXPECT_LE(double(hits) / d.splits.valid.size(), 1.0 / C + 0.05);
}

TEST(Synth, ClassFrequenciesNearUniform) {
  for (RuleKind kind : {RuleKind::one_hop, RuleKind::two_hop}) {
    SynthOptions o;
    o.count = 1000;
    o.seed = 9;
    const PlantedRule rule = PlantedRule::standard(kind);
    std::map<std::string, std::size_t> counts;
    for (const auto& v : synth_records(rule, o)) ++counts[v.qa[0].answer_class];
    const double uniform = 1000.0 / rule.classes().size();
    EXPECT_EQ(counts.size(), rule.classes().size());
    for (const auto& [label, n] : counts) EXPECT_NEAR(double(n), uniform, 0.1 * uniform) << label;
  }
}

TEST(Synth, CandidateSubsetsContainTheAnswer) {
  SynthOptions o;
  o.count = 200;
  o.seed = 2;
  o.candidates = 3;
  for (const auto& v : synth_records(PlantedRule::standard(RuleKind::one_hop), o)) {
    const auto& qa = v.qa[0];
    EXPECT_EQ(qa.candidates.size(), 3u);
    EXPECT_NE(std::find(qa.candidates.begin(), qa.candidates.end(), qa.answer_class), qa.candidates.end());
  }
}

TEST(Synth, SplitProportionsAndErrors) {
  const SplitSizes s = table_split(1000);
  EXPECT_EQ(s.total(), 1000u);
  EXPECT_EQ(s.train, 889u);
  EXPECT_EQ(s.valid, 65u);
  EXPECT_EQ(s.test, 46u);
  SynthOptions o;
  o.count = 9;
  EXPECT_THROW(synth_records(PlantedRule::standard(RuleKind::one_hop), o), ConfigError);
  PlantedRule broken = PlantedRule::standard(RuleKind::one_hop);
  broken.noise.push_back(broken.fillers.front());
  o.count = 50;
  EXPECT_THROW(synth_records(broken, o), ConfigError);
  PlantedRule empty = PlantedRule::standard(RuleKind::two_hop);
  empty.second.clear();
  EXPECT_THROW(synth_records(empty, o), ConfigError);
}

TEST(Synth, FeaturesAreUninformativeNoise) {
  SynthOptions o;
  o.count = 400;
  o.seed = 6;
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& v : synth_records(PlantedRule::standard(RuleKind::one_hop), o)) {
    for (double x : v.features.values()) {
      sum += x;
      sq += x * x;
      ++n;
    }
  }
  EXPECT_NEAR(sum / n, 0.0, 0.02);
  EXPECT_NEAR(sq / n, 1.0, 0.03);
}
