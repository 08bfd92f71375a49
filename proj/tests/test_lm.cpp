#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "cdd/errors.hpp"
#include "cdd/lm.hpp"
#include "cdd/tokenizer.hpp"
#include "cdd/world.hpp"
#include "test_util.hpp"

using namespace cdd;
using cdd::testing::corpus_of;
using cdd::testing::record;
using cdd::testing::TempDir;

namespace {

double total_prob(const TokenDistribution& d) {
  double s = 0.0;
  for (double x : d) s += std::exp(x);
  return s;
}

Corpus small_world(std::size_t n = 120) {
  WorldConfig w;
  w.record_count = n;
  w.corruption_rate = 0.15;
  return generate_world(w);
}

}  // namespace

TEST(Lm, UnigramCountsOfOneReference) {
  const auto c = corpus_of({record(0, {{"a", "p", "b"}}, {"a b"})});
  const auto m = train_lm(c, {});
  const GeneratorModel::Counts expected = {{c.vocab.id("a"), 1}, {c.vocab.id("b"), 1}, {kEos, 1}};
  EXPECT_EQ(m.unigrams(), expected);
  // Two <bos> of padding: trigram context (<bos>, <bos>) predicts "a".
  EXPECT_EQ(m.trigrams().at({kBos, kBos}).at(c.vocab.id("a")), 1u);
}

TEST(Lm, TrainingIsDeterministic) {
  const auto c = small_world();
  EXPECT_TRUE(train_lm(c, {}) == train_lm(c, {}));
}

TEST(Lm, EmptyCorpusIsTrainingError) {
  Corpus c;
  EXPECT_THROW(train_lm(c, {}), TrainingError);
}

TEST(Lm, ConfigValidation) {
  LmConfig c;
  c.order_weights = {0.2, 0.3, 0.6};
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.alpha = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.mu = 1.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.conditional = false;
  EXPECT_THROW(validate(c), ConfigError);
  c.mu = 0.0;
  EXPECT_NO_THROW(validate(c));
}

TEST(Lm, LargeAlphaUntrainedIsUniform) {
  Vocabulary v;
  tokenize("a b c d e f", v);
  LmConfig cfg;
  cfg.alpha = 1e12;
  cfg.mu = 0.0;
  cfg.conditional = false;
  GeneratorModel m(std::make_shared<const Vocabulary>(v), cfg);
  const auto d = m.next_token_logprobs(static_cast<const TokenSequence*>(nullptr), {});
  for (double x : d) EXPECT_NEAR(x, -std::log(static_cast<double>(v.size())), 1e-12);
}

TEST(Lm, BigramArgmaxByHand) {
  const auto c = corpus_of({record(0, {{"a", "p", "b"}}, {"a b"})});
  LmConfig cfg;
  cfg.alpha = 0.001;
  cfg.order_weights = {0.0, 1.0, 0.0};
  cfg.mu = 0.0;
  cfg.conditional = false;
  const auto m = train_lm(c, cfg);
  const TokenId a = c.vocab.id("a");
  const TokenId b = c.vocab.id("b");
  const auto d = m.next_token_logprobs(static_cast<const TokenSequence*>(nullptr), {kBos, a});
  EXPECT_EQ(top_k(d, 1).front(), b);
  // Bigram context "a" was seen once, followed by "b".
  const double v = static_cast<double>(c.vocab.size());
  EXPECT_NEAR(std::exp(d[static_cast<std::size_t>(b)]), (1.0 + 0.001) / (1.0 + 0.001 * v), 1e-12);
  EXPECT_NEAR(std::exp(d[static_cast<std::size_t>(a)]), 0.001 / (1.0 + 0.001 * v), 1e-12);
}

TEST(Lm, CopyLimitSplitsBetweenDataTokenAndEos) {
  const auto c = corpus_of({record(0, {{"paris", "paris", "paris"}}, {"paris"})});
  LmConfig cfg;
  cfg.mu = 1.0 - 1e-12;
  cfg.copy_coverage = false;
  const auto m = train_lm(c, cfg);
  const auto d = m.next_token_logprobs(&c.records[0], {});
  EXPECT_NEAR(std::exp(d[static_cast<std::size_t>(c.vocab.id("paris"))]), 0.5, 1e-9);
  EXPECT_NEAR(std::exp(d[kEos]), 0.5, 1e-9);
}

TEST(Lm, CopyCoverageMovesMassToEosOnceDataIsUsed) {
  const auto c = corpus_of({record(0, {{"x", "p", "y"}}, {"x y"})});
  LmConfig cfg;
  cfg.mu = 1.0 - 1e-12;
  const auto m = train_lm(c, cfg);
  const auto x = c.vocab.id("x");
  const auto p = c.vocab.id("p");
  const auto y = c.vocab.id("y");
  auto prob = [&](const TokenSequence& prefix, TokenId t) {
    return std::exp(m.next_token_logprobs(&c.records[0], prefix)[static_cast<std::size_t>(t)]);
  };
  EXPECT_NEAR(prob({}, x), 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(prob({}, kEos), 0.0, 1e-9);
  EXPECT_NEAR(prob({x}, p), 0.5, 1e-9);
  EXPECT_NEAR(prob({x, p, y}, kEos), 1.0, 1e-9);
  const auto data = linearize(c.records[0], c.vocab);
  EXPECT_EQ(copy_set(data, c.vocab), (TokenSequence{kEos, x, p, y}));
  EXPECT_EQ(copy_set(data, c.vocab, {x, y}), (TokenSequence{p}));
  EXPECT_EQ(copy_set(data, c.vocab, {x, p, y}), (TokenSequence{kEos}));
}

TEST(Lm, DistributionsAreNormalized) {
  const auto c = small_world();
  for (bool coverage : {true, false}) {
    LmConfig cfg;
    cfg.copy_coverage = coverage;
    const auto m = train_lm(c, cfg);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<TokenId> tok(0, static_cast<TokenId>(c.vocab.size() - 1));
    for (int trial = 0; trial < 200; ++trial) {
      const auto& r = c.records[static_cast<std::size_t>(trial) % c.records.size()];
      TokenSequence prefix(static_cast<std::size_t>(trial % 7));
      for (auto& t : prefix) t = tok(rng);
      const auto d = m.next_token_logprobs(&r, prefix);
      ASSERT_EQ(d.size(), c.vocab.size());
      EXPECT_NEAR(total_prob(d), 1.0, 1e-9);
      for (double x : d) EXPECT_TRUE(std::isfinite(x));
    }
  }
}

TEST(Lm, UnconditionalIgnoresData) {
  const auto c = small_world();
  LmConfig cfg;
  cfg.mu = 0.0;
  cfg.conditional = false;
  const auto m = train_lm(c, cfg);
  const auto prefix = tokenize("It has the", c.vocab);
  const auto d = m.next_token_logprobs(static_cast<const TokenSequence*>(nullptr), prefix);
  EXPECT_NEAR(total_prob(d), 1.0, 1e-9);
  const auto data = linearize(c.records[0], c.vocab);
  EXPECT_THROW(m.next_token_logprobs(&data, prefix), InputError);
}

TEST(Lm, ConditionalModelNeedsData) {
  const auto c = small_world();
  const auto m = train_lm(c, {});
  EXPECT_THROW(m.next_token_logprobs(static_cast<const TokenSequence*>(nullptr), {}), InputError);
}

TEST(Lm, ChainRuleMatchesStepSum) {
  const auto c = small_world();
  const auto m = train_lm(c, {});
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& r = c.records[i];
    const auto data = linearize(r, c.vocab);
    auto seq = tokenize(r.refs[0], c.vocab);
    seq.push_back(kEos);
    double sum = 0.0;
    TokenSequence prefix;
    for (TokenId t : seq) {
      sum += m.next_token_logprobs(&data, prefix)[static_cast<std::size_t>(t)];
      prefix.push_back(t);
    }
    EXPECT_EQ(m.sequence_logprob(&data, seq), sum);
  }
}

TEST(Lm, ConditionalSensitivity) {
  const auto c = small_world();
  const auto m = train_lm(c, {});
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto& r = c.records[rng() % c.records.size()];
    auto changed = r;
    const auto& other = c.records[rng() % c.records.size()];
    changed.triples[0].object = other.triples[0].object == r.triples[0].object ? r.triples[0].subject
                                                                                : other.triples[0].object;
    const auto prefix = tokenize(r.refs[0], c.vocab);
    bool differs = false;
    for (std::size_t n = 0; n <= prefix.size() && !differs; ++n) {
      const TokenSequence p(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(n));
      differs = m.next_token_logprobs(&r, p) != m.next_token_logprobs(&changed, p);
    }
    EXPECT_TRUE(differs);
  }
}

TEST(Lm, LeadingBosIsIgnored) {
  const auto c = small_world();
  const auto m = train_lm(c, {});
  const auto data = linearize(c.records[0], c.vocab);
  const auto prefix = tokenize("It has", c.vocab);
  TokenSequence with_bos = prefix;
  with_bos.insert(with_bos.begin(), kBos);
  EXPECT_EQ(m.next_token_logprobs(&data, prefix), m.next_token_logprobs(&data, with_bos));
}

TEST(Lm, OutOfVocabularyPrefixIsInputError) {
  const auto c = small_world();
  const auto m = train_lm(c, {});
  const auto data = linearize(c.records[0], c.vocab);
  EXPECT_THROW(m.next_token_logprobs(&data, {static_cast<TokenId>(c.vocab.size())}), InputError);
  EXPECT_THROW(m.next_token_logprobs(&data, {-1}), InputError);
}

TEST(Lm, TopKBreaksTiesByLowerId) {
  const TokenDistribution d = {-1.0, -0.5, -0.5, -2.0, -0.5};
  EXPECT_EQ(top_k(d, 3), (TokenSequence{1, 2, 4}));
  EXPECT_EQ(top_k(d, 4), (TokenSequence{1, 2, 4, 0}));
  EXPECT_EQ(top_k(d, 10).size(), 5u);
}

TEST(LmFile, RoundTripIsExact) {
  TempDir dir;
  const auto c = small_world();
  LmConfig cfg;
  cfg.alpha = 0.1 / 3.0;
  cfg.mu = 0.3;
  const auto m = train_lm(c, cfg);
  save_lm(m, dir.file("lm.json"));
  const auto loaded = load_lm(dir.file("lm.json"), m.vocab_ptr());
  EXPECT_TRUE(loaded == m);
  EXPECT_EQ(loaded.config().alpha, cfg.alpha);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto data = linearize(c.records[i], c.vocab);
    const auto prefix = tokenize(c.records[i].refs[0], c.vocab);
    for (std::size_t n = 0; n < prefix.size(); n += 3) {
      const TokenSequence p(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(n));
      EXPECT_EQ(loaded.next_token_logprobs(&data, p), m.next_token_logprobs(&data, p));
    }
  }
}

TEST(LmFile, VocabularySizeMismatchIsSchemaError) {
  TempDir dir;
  const auto c = small_world();
  const auto m = train_lm(c, {});
  save_lm(m, dir.file("lm.json"));
  Vocabulary smaller;
  EXPECT_THROW(load_lm(dir.file("lm.json"), std::make_shared<const Vocabulary>(smaller)), SchemaError);
}

TEST(LmFile, CorruptFileIsParseError) {
  TempDir dir;
  std::ofstream(dir.file("lm.json")) << "{\"order_weights\": [0.1, ";
  const auto c = small_world(10);
  EXPECT_THROW(load_lm(dir.file("lm.json"), std::make_shared<const Vocabulary>(c.vocab)), ParseError);
}
