#include <gtest/gtest.h>

#include <fstream>

#include "cdd/corpus.hpp"
#include "cdd/errors.hpp"
#include "cdd/tokenizer.hpp"
#include "test_util.hpp"

using namespace cdd;
using cdd::testing::corpus_of;
using cdd::testing::record;
using cdd::testing::TempDir;

TEST(Tokenizer, SplitsWordsAndPunctuation) {
  EXPECT_EQ(split_words("The A-Rosa Luna is 125.8 metres."),
            (std::vector<std::string>{"the", "a-rosa", "luna", "is", "125.8", "metres", "."}));
}

TEST(Tokenizer, EmptyText) {
  Vocabulary v;
  EXPECT_TRUE(split_words("").empty());
  EXPECT_TRUE(tokenize("", v).empty());
}

TEST(Tokenizer, SeparatorsAndNumbers) {
  EXPECT_EQ(split_words("x | p | 1,000 && y"),
            (std::vector<std::string>{"x", "|", "p", "|", "1,000", "&&", "y"}));
  EXPECT_EQ(split_words("end. (a), b-"), (std::vector<std::string>{"end", ".", "(", "a", ")", ",", "b", "-"}));
}

TEST(Tokenizer, FrozenVocabularyMapsUnknownToUnk) {
  Vocabulary v;
  tokenize("known words", v);
  v.freeze();
  const auto ids = tokenize("known stranger", v);
  ASSERT_EQ(ids.size(), 2u);
  EXPECT_EQ(ids[0], v.id("known"));
  EXPECT_EQ(ids[1], kUnk);
  EXPECT_FALSE(v.contains("stranger"));
}

TEST(Tokenizer, ConstVocabularyNeverInserts) {
  Vocabulary v;
  tokenize("a b", v);
  const Vocabulary& cv = v;
  EXPECT_EQ(tokenize("a c", cv), (TokenSequence{v.id("a"), kUnk}));
  EXPECT_EQ(v.size(), kNumReserved + 2u);
}

TEST(Tokenizer, RoundTripUpToCaseAndSpacing) {
  Vocabulary v;
  const std::string text = "The A-Rosa Luna is 125.8 metres. It has the owner Bei Group.";
  const auto ids = tokenize(text, v);
  const auto back = detokenize(ids, v);
  EXPECT_EQ(back, "the a-rosa luna is 125.8 metres. it has the owner bei group.");
  EXPECT_EQ(tokenize(back, v), ids);
}

TEST(Tokenizer, DetokenizeDropsReservedIds) {
  Vocabulary v;
  auto ids = tokenize("a b .", v);
  ids.insert(ids.begin(), kBos);
  ids.push_back(kEos);
  EXPECT_EQ(detokenize(ids, v), "a b.");
}

TEST(Tokenizer, RandomInVocabularySequencesRoundTrip) {
  Vocabulary v;
  tokenize("alpha beta gamma 12.5 a-b . , | &&", v);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<TokenId> pick(kNumReserved, static_cast<TokenId>(v.size() - 1));
  for (int trial = 0; trial < 200; ++trial) {
    TokenSequence s(1 + trial % 9);
    for (auto& t : s) t = pick(rng);
    EXPECT_EQ(tokenize(detokenize(s, v), v), s) << detokenize(s, v);
  }
}

TEST(Vocabulary, ReservedIds) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.token(kBos), "<bos>");
  EXPECT_EQ(v.token(kEos), "<eos>");
  EXPECT_EQ(v.token(kUnk), "<unk>");
  EXPECT_EQ(v.token(kSep), "<sep>");
  EXPECT_EQ(v.id("never"), kUnk);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  TempDir dir;
  Vocabulary v;
  tokenize("one two three", v);
  v.save(dir.file("vocab.txt"));
  const auto loaded = Vocabulary::load(dir.file("vocab.txt"));
  EXPECT_EQ(loaded, v);
  EXPECT_TRUE(loaded.frozen());
  std::ifstream in(dir.file("vocab.txt"));
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "<bos>");
}

TEST(Vocabulary, LoadRejectsBadReservedLines) {
  TempDir dir;
  std::ofstream(dir.file("bad.txt")) << "<eos>\n<bos>\n<unk>\n<sep>\n";
  EXPECT_THROW(Vocabulary::load(dir.file("bad.txt")), SchemaError);
  std::ofstream(dir.file("dup.txt")) << "<bos>\n<eos>\n<unk>\n<sep>\na\na\n";
  EXPECT_THROW(Vocabulary::load(dir.file("dup.txt")), SchemaError);
}

TEST(Linearize, SingleTriple) {
  const auto r = record(0, {{"A", "country", "B"}}, {"A has the country B."});
  EXPECT_EQ(linearize_text(r), "A | country | B");
  auto c = corpus_of({r});
  EXPECT_EQ(linearize(r, c.vocab), tokenize("a | country | b", c.vocab));
}

TEST(Linearize, TriplesJoinedInOrder) {
  const auto r = record(0, {{"A", "country", "B"}, {"A", "city", "C"}}, {"x"});
  EXPECT_EQ(linearize_text(r), "A | country | B && A | city | C");
}

TEST(Linearize, IdempotentThroughDetokenize) {
  const auto r = record(0, {{"A-b", "length", "12.5"}, {"A-b", "owner", "X Group"}}, {"x"});
  auto c = corpus_of({r});
  const auto ids = linearize(r, c.vocab);
  EXPECT_EQ(tokenize(detokenize(ids, c.vocab), c.vocab), ids);
  EXPECT_EQ(linearize(r, c.vocab), ids);
}

TEST(Split, SizesAndPartition) {
  std::vector<DataRecord> rs;
  for (int i = 0; i < 1000; ++i) rs.push_back(record(i, {{"s", "p", "o"}}, {"s p o ."}));
  const auto c = corpus_of(rs);
  const auto s = split(c, {}, 11);
  EXPECT_EQ(s.train.records.size(), 800u);
  EXPECT_EQ(s.val.records.size(), 100u);
  EXPECT_EQ(s.test.records.size(), 100u);
  std::set<std::int64_t> ids;
  for (const auto* part : {&s.train, &s.val, &s.test}) {
    for (const auto& r : part->records) EXPECT_TRUE(ids.insert(r.id).second);
  }
  EXPECT_EQ(ids.size(), 1000u);
}

TEST(Split, DeterministicPerSeed) {
  std::vector<DataRecord> rs;
  for (int i = 0; i < 50; ++i) rs.push_back(record(i, {{"s", "p", "o"}}, {"s p o ."}));
  const auto c = corpus_of(rs);
  const auto a = split(c, {}, 5);
  const auto b = split(c, {}, 5);
  const auto d = split(c, {}, 6);
  EXPECT_EQ(a.train.records, b.train.records);
  EXPECT_EQ(a.test.records, b.test.records);
  EXPECT_NE(a.train.records, d.train.records);
}

TEST(Split, HeldOutPredicateOnlyInTest) {
  std::vector<DataRecord> rs;
  for (int i = 0; i < 100; ++i) {
    rs.push_back(record(i, {{"s", i % 5 == 0 ? "q" : "p", "o"}}, {"s o ."}));
  }
  const auto s = split(corpus_of(rs), {}, 1, {"q"});
  for (const auto* part : {&s.train, &s.val}) {
    for (const auto& r : part->records) EXPECT_NE(r.triples[0].predicate, "q");
  }
  std::size_t q_in_test = 0;
  for (const auto& r : s.test.records) q_in_test += r.triples[0].predicate == "q";
  EXPECT_EQ(q_in_test, 20u);
}

TEST(Split, InvalidFractions) {
  const auto c = corpus_of({record(0, {{"s", "p", "o"}}, {"x"})});
  EXPECT_THROW(split(c, {0.5, 0.3, 0.3}, 1), ConfigError);
  EXPECT_THROW(split(c, {1.0, 0.0, 0.0}, 1), ConfigError);
  EXPECT_THROW(split(c, {-0.1, 0.6, 0.5}, 1), ConfigError);
}

TEST(Jsonl, RoundTrip) {
  TempDir dir;
  auto a = record(1, {{"A", "country", "B"}}, {"A has the country B.", "Also A."});
  auto b = record(2, {{"C", "city", "D"}, {"C", "owner", "E group"}}, {"C has the city D."});
  b.corrupted = true;
  b.corrupted_refs = {true};
  auto c3 = record(5, {{"F", "height", "1.5"}}, {"F has the height 1.5 metres."});
  const auto c = corpus_of({a, b, c3});
  save_jsonl(c, dir.file("c.jsonl"));
  const auto loaded = load_jsonl(dir.file("c.jsonl"));
  EXPECT_EQ(loaded.records, c.records);
  EXPECT_EQ(loaded.vocab, c.vocab);
}

TEST(Jsonl, MissingRefsIsSchemaErrorAtLine) {
  TempDir dir;
  std::ofstream(dir.file("c.jsonl"))
      << R"({"id": 0, "triples": [["a","p","b"]], "refs": ["a p b."], "corrupted": false})" << "\n"
      << R"({"id": 1, "triples": [["a","p","b"]], "corrupted": false})" << "\n";
  try {
    load_jsonl(dir.file("c.jsonl"));
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Jsonl, MalformedLineIsParseErrorAtLine) {
  TempDir dir;
  std::ofstream(dir.file("c.jsonl")) << "\n\n{not json\n";
  try {
    load_jsonl(dir.file("c.jsonl"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Jsonl, EmptyFileGivesEmptyCorpus) {
  TempDir dir;
  std::ofstream(dir.file("c.jsonl")).close();
  EXPECT_TRUE(load_jsonl(dir.file("c.jsonl")).records.empty());
}

TEST(Validate, RejectsDuplicateIdsAndEmptyFields) {
  EXPECT_THROW(validate(std::vector<DataRecord>{record(0, {{"a", "p", "b"}}, {"x"}),
                                                record(0, {{"a", "p", "b"}}, {"x"})}),
               SchemaError);
  EXPECT_THROW(validate(std::vector<DataRecord>{record(0, {{"a", "", "b"}}, {"x"})}), SchemaError);
  EXPECT_THROW(validate(std::vector<DataRecord>{record(0, {{"a", "p", "b"}}, {})}), SchemaError);
}
