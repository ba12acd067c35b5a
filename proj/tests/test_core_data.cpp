#include <gtest/gtest.h>

#include <map>
#include <set>

#include "stylekit/core_data.hpp"
#include "stylekit/hash.hpp"
#include "stylekit/random.hpp"
#include "support/helpers.hpp"

using namespace stylekit;
using testutil::TempDir;
using testutil::write_text;

namespace {

const char* kValidLine =
    R"({"pair_id":"p1","feature_id":"active_voice","positive_text":"The dog chased the ball.",)"
    R"("negative_text":"The ball was chased by the dog.","attributes":{"topic":"pets"},"split":"train"})";

}  // namespace

TEST(Registry, ShipsFortyFeaturesWithDistinctPrompts) {
  const auto& reg = default_registry();
  EXPECT_EQ(reg.size(), 40u);
  const auto list = reg.ids();
  std::set<std::string> ids(list.begin(), list.end());
  EXPECT_EQ(ids.size(), 40u);
  for (const auto& f : reg.all()) {
    EXPECT_FALSE(f.positive_prompt.empty()) << f.id;
    EXPECT_NE(f.positive_prompt, f.negative_prompt) << f.id;
  }
  EXPECT_EQ(reg.at("active_voice").positive_prompt, "active");
  EXPECT_EQ(reg.at("active_voice").negative_prompt, "passive");
}

TEST(Registry, RejectsDuplicateIdsAndUnknownLookups) {
  FeatureRegistry reg;
  reg.add({"x", "X", FeatureCategory::tone, "a", "b", "", true, {}});
  EXPECT_THROW(reg.add({"x", "X2", FeatureCategory::tone, "c", "d", "", true, {}}), Error);
  EXPECT_THROW(reg.add({"y", "Y", FeatureCategory::tone, "same", "same", "", true, {}}), Error);
  EXPECT_THROW(reg.at("nope"), Error);
}

TEST(PromptLabel, CapitalizesFirstLetterOnly) {
  EXPECT_EQ(prompt_label("active"), "Active");
  EXPECT_EQ(prompt_label("digit-numeral"), "Digit-numeral");
}

TEST(LoadPairs, SingleValidLineRoundTrips) {
  TempDir dir;
  write_text(dir.file("p.jsonl"), std::string(kValidLine) + "\n");
  const auto pairs = load_pairs(dir.file("p.jsonl"));
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].pair_id, "p1");
  EXPECT_EQ(pairs[0].attributes.at("topic"), "pets");
  EXPECT_EQ(pairs[0].split, Split::train);

  write_text(dir.file("q.jsonl"), pairs_to_jsonl(pairs));
  EXPECT_EQ(load_pairs(dir.file("q.jsonl")), pairs);
}

TEST(LoadPairs, UnknownFeatureNamesTheLine) {
  TempDir dir;
  std::string bad = kValidLine;
  bad.replace(bad.find("active_voice"), 12, "nonexistent");
  write_text(dir.file("p.jsonl"), std::string(kValidLine) + "\n\n" + bad + "\n");
  try {
    load_pairs(dir.file("p.jsonl"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("nonexistent"), std::string::npos);
  }
}

TEST(LoadPairs, RejectsDuplicatesIdenticalTextsAndBadSplit) {
  TempDir dir;
  write_text(dir.file("dup.jsonl"), std::string(kValidLine) + "\n" + kValidLine + "\n");
  EXPECT_THROW(load_pairs(dir.file("dup.jsonl")), ParseError);

  std::string same = kValidLine;
  same.replace(same.find("The ball was chased by the dog."), 31, "The dog chased the ball.");
  write_text(dir.file("same.jsonl"), same + "\n");
  EXPECT_THROW(load_pairs(dir.file("same.jsonl")), ParseError);

  std::string split = kValidLine;
  split.replace(split.find("\"train\""), 7, "\"dev\"");
  write_text(dir.file("split.jsonl"), split + "\n");
  EXPECT_THROW(load_pairs(dir.file("split.jsonl")), ParseError);

  write_text(dir.file("junk.jsonl"), "{not json\n");
  EXPECT_THROW(load_pairs(dir.file("junk.jsonl")), ParseError);
  EXPECT_THROW(load_pairs(dir.file("missing.jsonl")), IoError);
}

TEST(LoadPairs, StrictRejectsUnknownFieldsLenientPreservesThem) {
  TempDir dir;
  std::string extra = kValidLine;
  extra.insert(1, R"("annotator_note":"ok",)");
  write_text(dir.file("p.jsonl"), extra + "\n");
  EXPECT_THROW(load_pairs(dir.file("p.jsonl")), ParseError);

  const auto pairs = load_pairs(dir.file("p.jsonl"), default_registry(), Strictness::lenient);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].extra.at("annotator_note"), "ok");
  EXPECT_NE(pairs_to_jsonl(pairs).find("annotator_note"), std::string::npos);
}

TEST(LoadPairs, FortyByHundredFixture) {
  TempDir dir;
  write_text(dir.file("p.jsonl"), pairs_to_jsonl(testutil::make_pairs(40, 100)));
  const auto pairs = load_pairs(dir.file("p.jsonl"));
  EXPECT_EQ(pairs.size(), 4000u);
  for (const auto& [f, idx] : group_by_feature(pairs)) EXPECT_EQ(idx.size(), 100u) << f;
}

TEST(SplitPairs, NinetyTenPerFeature) {
  const auto pairs = testutil::make_pairs(40, 100);
  const auto s = split_pairs(pairs, 0.9, 7);
  EXPECT_EQ(s.train.size(), 3600u);
  EXPECT_EQ(s.test.size(), 400u);
  for (const auto& [f, idx] : group_by_feature(s.train)) EXPECT_EQ(idx.size(), 90u) << f;
  for (const auto& [f, idx] : group_by_feature(s.test)) EXPECT_EQ(idx.size(), 10u) << f;
  for (const auto& p : s.train) EXPECT_EQ(p.split, Split::train);
  for (const auto& p : s.test) EXPECT_EQ(p.split, Split::test);
}

TEST(SplitPairs, HalfOfTwoGivesOneEach) {
  const auto s = split_pairs(testutil::make_pairs(3, 2), 0.5, 1);
  for (const auto& [f, idx] : group_by_feature(s.train)) EXPECT_EQ(idx.size(), 1u);
  for (const auto& [f, idx] : group_by_feature(s.test)) EXPECT_EQ(idx.size(), 1u);
}

TEST(SplitPairs, SameSeedSameSplitDifferentSeedDiffers) {
  const auto pairs = testutil::make_pairs(5, 40);
  const auto a = split_pairs(pairs, 0.9, 11);
  const auto b = split_pairs(pairs, 0.9, 11);
  const auto c = split_pairs(pairs, 0.9, 12);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.test, c.test);
}

TEST(SplitPairs, RepairsAnEmptySide) {
  // 0.9 of 2 rounds to 2; the lexicographically last pair moves to test.
  const auto s = split_pairs(testutil::make_pairs(1, 2), 0.9, 3);
  ASSERT_EQ(s.test.size(), 1u);
  EXPECT_EQ(s.test[0].pair_id, default_registry().ids()[0] + "-0001");
  EXPECT_THROW(split_pairs(testutil::make_pairs(1, 1), 0.5, 0), PreconditionError);
  EXPECT_THROW(split_pairs(testutil::make_pairs(1, 4), 1.0, 0), PreconditionError);
}

TEST(SplitPairs, PropertyPartitionAndStratification) {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t nf = 1 + rng.below(5), per = 2 + rng.below(30);
    const double frac = 0.05 + 0.9 * rng.uniform();
    const auto pairs = testutil::make_pairs(nf, per);
    const auto s = split_pairs(pairs, frac, rng.next());
    std::set<std::string> all;
    for (const auto& p : s.train) all.insert(p.pair_id);
    for (const auto& p : s.test) EXPECT_TRUE(all.insert(p.pair_id).second);
    EXPECT_EQ(all.size(), pairs.size());
    const auto tr = group_by_feature(s.train), te = group_by_feature(s.test);
    for (const auto& [f, idx] : group_by_feature(pairs)) {
      ASSERT_TRUE(tr.contains(f));
      ASSERT_TRUE(te.contains(f));
      const auto expect = static_cast<std::size_t>(std::floor(frac * static_cast<double>(per) + 0.5));
      const std::size_t clamped = std::clamp<std::size_t>(expect, 1, per - 1);
      EXPECT_EQ(tr.at(f).size(), clamped);
    }
  }
}

TEST(Embeddings, ValidatesDimensionKeysAndFiniteness) {
  EmbeddingSet e;
  e.add("a", {1.0, 2.0});
  EXPECT_THROW(e.add("b", {1.0}), DimensionError);
  EXPECT_THROW(e.add("a", {3.0, 4.0}), ValidationError);
  EXPECT_THROW(e.add("c", {std::nan(""), 1.0}), ValidationError);
  EXPECT_THROW(e.at("zzz"), NotFoundError);
  EXPECT_EQ(e.dim(), 2u);
}

TEST(Embeddings, FileRoundTripAndLineNumbers) {
  TempDir dir;
  EmbeddingSet e;
  e.add("x#pos", {0.25, -1.5, 3.0});
  e.add("x#neg", {1e-300, 2.0, 7.125});
  write_text(dir.file("e.jsonl"), embeddings_to_jsonl(e));
  const auto back = load_embeddings(dir.file("e.jsonl"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.values(1), e.values(1));

  write_text(dir.file("bad.jsonl"), R"({"key":"a","values":[1,2]})" "\n" R"({"key":"b","values":[1]})" "\n");
  try {
    load_embeddings(dir.file("bad.jsonl"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(SideRef, SentenceKeysAndJson) {
  SideRef r{"p9", Side::negative};
  EXPECT_EQ(r.key(), "p9#neg");
  EXPECT_EQ(sideref_from_json(to_json(r)), r);
  Triplet t{{"a", Side::positive}, {"b", Side::positive}, {"a", Side::negative}, "humor", true};
  EXPECT_EQ(triplet_from_json(to_json(t)), t);
}

TEST(WriteAtomic, ReplacesContentsWithoutLeavingTempFiles) {
  TempDir dir;
  write_atomic(dir.file("out/x.txt"), "one");
  write_atomic(dir.file("out/x.txt"), "two");
  EXPECT_EQ(read_file(dir.file("out/x.txt")), "two");
  EXPECT_FALSE(std::filesystem::exists(dir.file("out/x.txt.tmp")));
}

TEST(Hash, KnownSha256Vectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Rng, DeterministicStreamsAndUniformBelow) {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(Rng::derive(5, "x").next(), Rng::derive(5, "y").next());
  Rng r(1);
  std::map<std::uint64_t, int> counts;
  for (int i = 0; i < 60000; ++i) ++counts[r.below(6)];
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [k, c] : counts) EXPECT_NEAR(c, 10000, 400);
}
