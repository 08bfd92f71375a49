#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cdd/corpus.hpp"
#include "cdd/critic.hpp"
#include "cdd/decoding.hpp"
#include "cdd/facts.hpp"
#include "cdd/lm.hpp"

namespace cdd {

struct DecodedOutputs {
  std::vector<TokenSequence> tokens;  // as produced, <eos> included
  std::vector<std::string> texts;     // detokenized, reserved tokens dropped
  std::size_t critic_calls = 0;
};

// Decodes every record, `jobs` records at a time; results are stored by
// record index.
DecodedOutputs decode_records(const GeneratorModel& generator, const CriticModel* critic,
                              const std::vector<DataRecord>& records, const DecodeConfig& config,
                              std::size_t jobs = 1);

struct SweepGrid {
  std::vector<double> lambdas = {0.25};
  std::vector<bool> warmup = {true};  // true: W = warmup_length, false: W = 0
  std::vector<std::size_t> ks = {5};
  std::vector<DecodeMode> modes = {DecodeMode::kGreedy};
  int warmup_length = 5;
  std::size_t beam = 5;
};

struct SweepRow {
  double lambda = 0.0;
  bool warmup = false;
  std::size_t k = 0;
  DecodeMode mode = DecodeMode::kGreedy;
  std::string critic_variant;  // "none" for the baseline
  double bleu = 0.0;
  double halluc_rate = 0.0;
  double omission_rate = 0.0;
  double modified_pct = 0.0;  // against the critic-free run of the same mode
  double words_added = 0.0;
  double words_removed = 0.0;
};

using NamedCritic = std::pair<std::string, const CriticModel*>;

// Evaluates a finished set of outputs against the records and a baseline.
SweepRow score_outputs(const std::vector<std::string>& outputs,
                       const std::vector<std::string>& baseline,
                       const std::vector<DataRecord>& records, const FactExtractor& extractor);

// One baseline row per mode, then one row per (critic, lambda, warmup, k, mode)
// in that nesting order. Throws ConfigError on an empty grid.
std::vector<SweepRow> sweep(const std::vector<DataRecord>& records, const GeneratorModel& generator,
                            const std::vector<NamedCritic>& critics, const SweepGrid& grid,
                            const DecodeConfig& base, const FactExtractor& extractor,
                            std::size_t jobs = 1);

const char* mode_name(DecodeMode mode);
DecodeMode parse_mode(const std::string& name);

// Header: lambda,warmup,k,mode,critic_variant,bleu,halluc_rate,omission_rate,
// modified_pct,words_added,words_removed
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace cdd
