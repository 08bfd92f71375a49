#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdd/corpus.hpp"
#include "cdd/critic.hpp"
#include "cdd/critic_data.hpp"
#include "cdd/decoding.hpp"
#include "cdd/facts.hpp"
#include "cdd/lm.hpp"
#include "cdd/sweep.hpp"
#include "cdd/world.hpp"

namespace cdd {

struct RunConfig {
  std::string out_dir = "out";
  std::string corpus_path;  // empty: generate a synthetic world
  std::uint64_t seed = 7;
  WorldConfig world;
  SplitFractions fractions;
  std::set<std::string> held_out_predicates;
  LmConfig lm;
  CriticTrainConfig critic;
  DecodeConfig decode;
  std::string critic_variant = "base";  // "none" decodes without a critic
  SweepGrid sweep;
  std::vector<std::string> sweep_critics = {"base"};
  std::size_t jobs = 1;

  RunConfig();
};

// Propagates `seed` to the world generator and the critic shuffle.
void apply_seed(RunConfig& config, std::uint64_t seed);

nlohmann::json to_json(const RunConfig& config);
// Fields absent from `doc` keep the values already in `config`.
void merge_json(RunConfig& config, const nlohmann::json& doc);

inline const std::vector<Variant>& all_critic_variants() {
  static const std::vector<Variant> v = {Variant::kBase, Variant::kBaseFull, Variant::kVanillaLm,
                                         Variant::kFtLm, Variant::kFtLmFull};
  return v;
}

// Lazily built pipeline state for one RunConfig: corpus, split, language
// models, critic data and critics. Every stage is a pure function of the
// config, so two Experiments with equal configs produce equal artifacts.
class Experiment {
 public:
  explicit Experiment(RunConfig config);

  const RunConfig& config() const { return config_; }
  const Corpus& corpus();
  const CorpusSplit& split();
  const GeneratorModel& lm();          // data-conditioned, trained on train
  const GeneratorModel& vanilla_lm();  // unconditional, trained on train
  const FactExtractor& extractor() const { return extractor_; }

  // Negatives of `variant` built over `part` ("train", "val" or "test").
  std::vector<CriticExample> negatives(Variant variant, const std::string& part);
  std::vector<CriticExample> positives(const std::string& part);
  const CriticModel& critic(Variant variant);
  const CriticTrainResult& critic_training(Variant variant);
  // Held-out (validation) accuracy on positives plus same-variant negatives.
  CriticEvaluation evaluate(Variant variant);

  void set_critic(Variant variant, CriticModel model);
  void set_lm(GeneratorModel model);

  const std::vector<DataRecord>& test_records() { return split().test.records; }

 private:
  const CriticSource& source(const std::string& part);
  std::uint64_t negative_seed(Variant variant) const;

  RunConfig config_;
  FactExtractor extractor_;
  std::optional<Corpus> corpus_;
  std::optional<CorpusSplit> split_;
  std::optional<GeneratorModel> lm_;
  std::optional<GeneratorModel> vanilla_;
  std::map<std::string, std::unique_ptr<CriticSource>> sources_;
  std::map<Variant, CriticTrainResult> critics_;
};

struct ReproResult {
  std::vector<SweepRow> rows;  // baseline first, then the five critics
  std::map<Variant, CriticEvaluation> critic_eval;
};

// generate -> split -> train LM -> build all negative sets -> train critics
// -> decode the test split with and without each critic -> evaluate. Writes
// corpus.jsonl, vocab.txt, lm.json, critic-<variant>.json,
// outputs-<variant>.jsonl, report-<variant>.json and comparison.csv under
// config.out_dir.
ReproResult repro(const RunConfig& config);

// {"id", "text", "tokens"} per line.
void save_outputs(const std::vector<DataRecord>& records, const DecodedOutputs& outputs,
                  const std::string& path);
std::vector<std::string> load_output_texts(const std::string& path);

std::string file_variant_name(const std::string& variant);  // base_full -> base-full

}  // namespace cdd
