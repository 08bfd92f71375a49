#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cdd/critic.hpp"
#include "cdd/lm.hpp"

namespace cdd {

enum class DecodeMode { kGreedy, kBeam };

struct DecodeConfig {
  double lambda = 0.25;
  int warmup = 5;            // W; 0 disables warmup
  std::size_t k = 5;         // candidates scored by the critic per step
  std::size_t max_length = 80;
  std::size_t beam = 1;
  DecodeMode mode = DecodeMode::kGreedy;
  // When set, only the k critic-scored candidates may be chosen. By default
  // the remaining tokens keep their plain LM score and stay eligible.
  bool restrict_to_topk = false;
};

void validate(const DecodeConfig& config, std::size_t vocab_size);

// P(c = 1 | prefix, data). Must return a value in (0, 1].
using CriticFn = std::function<double(const TokenSequence& data, const TokenSequence& prefix)>;

CriticFn critic_fn(const CriticModel& model);

// min(i / W, 1) * lambda for the 1-based token index i; W = 0 returns lambda.
double effective_lambda(std::size_t i, const DecodeConfig& config);

// score(t) = ln P_lm(t) + lambda_i * ln P_c(t) for tokens in `critic_probs`,
// ln P_lm(t) for the rest (or -inf when `restrict_to_candidates`). The keys of
// `critic_probs` must be the most probable tokens under `lm`.
std::vector<double> combine_scores(const TokenDistribution& lm,
                                   const std::vector<std::pair<TokenId, double>>& critic_probs,
                                   double lambda_i, bool restrict_to_candidates = false);

// Softmax of a score vector.
TokenDistribution normalize_combined(const std::vector<double>& scores);

struct StepCandidate {
  TokenId id = 0;
  double lm_logprob = 0.0;
  std::optional<double> critic_prob;
  double score = 0.0;
};

struct DecodeStep {
  std::size_t i = 0;
  double lambda_i = 0.0;
  std::vector<StepCandidate> topk;
  TokenId chosen = 0;
};

struct DecodeResult {
  TokenSequence tokens;  // generated tokens, ending in <eos> unless truncated
  std::vector<DecodeStep> trace;
  double score = 0.0;       // cumulative combined score
  double lm_logprob = 0.0;  // cumulative pure-LM log-probability
  std::size_t critic_calls = 0;
};

// `data` is the linearized record. A null `critic` decodes the plain LM.
DecodeResult greedy_decode(const GeneratorModel& generator, const CriticFn* critic,
                           const TokenSequence& data, const DecodeConfig& config);

struct Hypothesis {
  TokenSequence tokens;
  double score = 0.0;
  double lm_logprob = 0.0;
  bool finished = false;
};

struct BeamResult {
  Hypothesis best;
  std::vector<Hypothesis> beam;  // final beam, best first
  std::size_t critic_calls = 0;
};

BeamResult beam_decode(const GeneratorModel& generator, const CriticFn* critic,
                       const TokenSequence& data, const DecodeConfig& config);

// Dispatches on config.mode; beam results are returned without a trace.
DecodeResult decode(const GeneratorModel& generator, const CriticFn* critic,
                    const TokenSequence& data, const DecodeConfig& config);

// One JSON object per step: {"i", "lambda_i", "topk": [{"id", "lm_lp",
// "critic_p", "score"}], "chosen"}.
std::string trace_jsonl(const std::vector<DecodeStep>& trace);

}  // namespace cdd
