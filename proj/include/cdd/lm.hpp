#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cdd/corpus.hpp"

namespace cdd {

// Natural-log probabilities indexed by token id.
using TokenDistribution = std::vector<double>;

struct LmConfig {
  double alpha = 0.1;
  std::array<double, 3> order_weights = {0.1, 0.3, 0.6};  // unigram, bigram, trigram
  double mu = 0.3;
  bool conditional = true;
  // Drop data tokens from the copy set once they appear in the prefix.
  bool copy_coverage = true;
};

void validate(const LmConfig& config);

// Distinct content tokens of a linearized record (separators dropped) plus
// <eos>, sorted by id. The second form keeps only the content tokens absent
// from `prefix`, falling back to {<eos>} when none are left.
TokenSequence copy_set(const TokenSequence& linearized, const Vocabulary& vocab);
TokenSequence copy_set(const TokenSequence& linearized, const Vocabulary& vocab,
                       const TokenSequence& prefix);

// Additively smoothed, linearly interpolated trigram model mixed with a
// uniform copy distribution over the data's content tokens:
//   P(t | h, x) = mu * P_copy(t | x) + (1 - mu) * P_ngram(t | h).
// With copy_coverage the copy set holds the data tokens not generated yet and
// becomes {<eos>} once all of them have been used.
// Immutable once built.
class GeneratorModel {
 public:
  using Counts = std::map<TokenId, std::uint64_t>;

  GeneratorModel(std::shared_ptr<const Vocabulary> vocab, const LmConfig& config);

  const LmConfig& config() const { return config_; }
  bool conditional() const { return config_.conditional; }
  const Vocabulary& vocab() const { return *vocab_; }
  std::shared_ptr<const Vocabulary> vocab_ptr() const { return vocab_; }
  std::size_t vocab_size() const { return vocab_->size(); }

  // P(next | prefix, data) for an already-linearized record; `data` must be
  // null for an unconditional model and non-null otherwise. A leading <bos>
  // in `prefix` is ignored.
  TokenDistribution next_token_logprobs(const TokenSequence* data,
                                        const TokenSequence& prefix) const;
  TokenDistribution next_token_logprobs(const DataRecord* data,
                                        const TokenSequence& prefix) const;

  // Sum of per-step log-probabilities of `seq` (which should end in <eos>).
  double sequence_logprob(const TokenSequence* data, const TokenSequence& seq) const;

  const Counts& unigrams() const { return unigram_; }
  const std::map<TokenId, Counts>& bigrams() const { return bigram_; }
  const std::map<std::pair<TokenId, TokenId>, Counts>& trigrams() const { return trigram_; }

  void add_sequence(const TokenSequence& tokens);  // training only
  void finalize();
  // Replaces all count tables (used by load_lm) and recomputes totals.
  void restore(Counts unigram, std::map<TokenId, Counts> bigram,
               std::map<std::pair<TokenId, TokenId>, Counts> trigram);

  bool operator==(const GeneratorModel& other) const;

 private:
  void check_prefix(const TokenSequence& prefix) const;
  TokenDistribution mix(const TokenSequence* copy, const TokenSequence& prefix) const;

  std::shared_ptr<const Vocabulary> vocab_;
  LmConfig config_;
  Counts unigram_;
  std::map<TokenId, Counts> bigram_;
  std::map<std::pair<TokenId, TokenId>, Counts> trigram_;
  std::uint64_t unigram_total_ = 0;
  std::map<TokenId, std::uint64_t> bigram_totals_;
  std::map<std::pair<TokenId, TokenId>, std::uint64_t> trigram_totals_;
  std::vector<double> unigram_prob_;  // weighted order-1 term, cached by finalize()
};

// Counts every reference of every record, padded with two <bos> and
// terminated with <eos>.
GeneratorModel train_lm(const Corpus& corpus, const LmConfig& config);

// Ids of the k largest entries, best first; ties go to the lower id.
TokenSequence top_k(const TokenDistribution& dist, std::size_t k);

// JSON {order_weights, alpha, mu, conditional, vocab_size, counts}.
void save_lm(const GeneratorModel& model, const std::string& path);
GeneratorModel load_lm(const std::string& path, std::shared_ptr<const Vocabulary> vocab);

}  // namespace cdd
