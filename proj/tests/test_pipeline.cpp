#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cdd/errors.hpp"
#include "cdd/pipeline.hpp"
#include "cdd/sweep.hpp"
#include "test_util.hpp"

using namespace cdd;
using cdd::testing::small_config;
using cdd::testing::TempDir;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, JsonRoundTrip) {
  RunConfig a;
  apply_seed(a, 11);
  a.world.record_count = 123;
  a.lm.mu = 0.2;
  a.lm.copy_coverage = false;
  a.decode.lambda = 1.0;
  a.decode.k = 15;
  a.decode.mode = DecodeMode::kBeam;
  a.decode.beam = 5;
  a.held_out_predicates = {"engine"};
  a.sweep.lambdas = {0.25, 1.0};
  a.sweep.modes = {DecodeMode::kGreedy, DecodeMode::kBeam};
  RunConfig b;
  merge_json(b, to_json(a));
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_EQ(b.world.seed, 11u);
  EXPECT_FALSE(b.lm.copy_coverage);
}

TEST(Config, MergeKeepsAbsentFields) {
  RunConfig c;
  c.decode.k = 9;
  merge_json(c, nlohmann::json::parse(R"({"decode": {"lambda": 1.0}, "seed": 3})"));
  EXPECT_EQ(c.decode.lambda, 1.0);
  EXPECT_EQ(c.decode.k, 9u);
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.world.corruption_rate, 0.15);
}

TEST(Config, BadValues) {
  RunConfig c;
  EXPECT_THROW(merge_json(c, nlohmann::json::parse(R"({"decode": {"mode": "sideways"}})")), ConfigError);
  EXPECT_THROW(merge_json(c, nlohmann::json::parse(R"({"decode": {"k": "five"}})")), SchemaError);
  EXPECT_THROW(merge_json(c, nlohmann::json::parse("[1, 2]")), SchemaError);
}

TEST(Experiment, SplitAndModelsAreConsistent) {
  Experiment exp(small_config());
  const auto& s = exp.split();
  EXPECT_EQ(s.train.records.size() + s.val.records.size() + s.test.records.size(), 200u);
  EXPECT_TRUE(exp.lm().conditional());
  EXPECT_FALSE(exp.vanilla_lm().conditional());
  EXPECT_EQ(exp.lm().vocab_size(), exp.corpus().vocab.size());
  const auto ev = exp.evaluate(Variant::kBase);
  EXPECT_GT(ev.accuracy, 0.5);
  EXPECT_EQ(exp.critic(Variant::kBase).segment_token(), exp.corpus().vocab.id("&&"));
}

TEST(Sweep, LambdaZeroRowMatchesBaseline) {
  Experiment exp(small_config());
  SweepGrid grid;
  grid.lambdas = {0.0, 0.25};
  grid.ks = {5, 15};
  const auto& critic = exp.critic(Variant::kBase);
  const auto rows = sweep(exp.test_records(), exp.lm(), {{"base", &critic}}, grid, {}, exp.extractor());
  ASSERT_EQ(rows.size(), 1u + 4u);
  EXPECT_EQ(rows[0].critic_variant, "none");
  for (const auto& r : rows) {
    if (r.lambda != 0.0) continue;
    EXPECT_EQ(r.bleu, rows[0].bleu);
    EXPECT_EQ(r.halluc_rate, rows[0].halluc_rate);
    EXPECT_EQ(r.modified_pct, 0.0);
  }
  const auto csv = sweep_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "lambda,warmup,k,mode,critic_variant,bleu,halluc_rate,omission_rate,modified_pct,words_added,"
            "words_removed");
  SweepGrid empty;
  empty.lambdas.clear();
  EXPECT_THROW(sweep(exp.test_records(), exp.lm(), {}, empty, {}, exp.extractor()), ConfigError);
}

TEST(Sweep, ParallelDecodingMatchesSerial) {
  Experiment exp(small_config());
  const auto& critic = exp.critic(Variant::kBase);
  const auto a = decode_records(exp.lm(), &critic, exp.test_records(), {}, 1);
  const auto b = decode_records(exp.lm(), &critic, exp.test_records(), {}, 4);
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_EQ(a.critic_calls, b.critic_calls);
}

TEST(Outputs, RoundTrip) {
  TempDir dir;
  Experiment exp(small_config());
  const auto out = decode_records(exp.lm(), nullptr, exp.test_records(), {});
  save_outputs(exp.test_records(), out, dir.file("o.jsonl"));
  EXPECT_EQ(load_output_texts(dir.file("o.jsonl")), out.texts);
  EXPECT_EQ(file_variant_name("ft_lm_full"), "ft-lm-full");
}

TEST(Repro, SmallRunIsByteIdentical) {
  TempDir a, b;
  auto cfg = small_config();
  cfg.out_dir = a.path().string();
  const auto ra = repro(cfg);
  cfg.out_dir = b.path().string();
  repro(cfg);
  ASSERT_EQ(ra.rows.size(), 6u);
  EXPECT_EQ(ra.rows[0].critic_variant, "none");
  for (const char* f : {"comparison.csv", "corpus.jsonl", "vocab.txt", "lm.json", "critic-base.json",
                        "outputs-ft-lm-full.jsonl", "report-base-full.json"}) {
    ASSERT_TRUE(std::filesystem::exists(a.file(f))) << f;
    EXPECT_EQ(slurp(a.file(f)), slurp(b.file(f))) << f;
  }
}
