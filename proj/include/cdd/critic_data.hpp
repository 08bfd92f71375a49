#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "cdd/corpus.hpp"
#include "cdd/critic.hpp"
#include "cdd/decoding.hpp"
#include "cdd/lm.hpp"

namespace cdd {

// Records encoded against one vocabulary, with the linearized data shared by
// every example built from a record.
class CriticSource {
 public:
  explicit CriticSource(const Corpus& corpus);

  struct Entry {
    std::int64_t id = 0;
    std::shared_ptr<const TokenSequence> data;
    std::vector<TokenSequence> refs;  // without <eos>
  };

  const std::vector<Entry>& entries() const { return entries_; }
  const Vocabulary& vocab() const { return vocab_; }
  const Entry& by_id(std::int64_t id) const;

 private:
  Vocabulary vocab_;
  std::vector<Entry> entries_;
  std::unordered_map<std::int64_t, std::size_t> index_;
};

// One positive per prefix length 1..n of every reference + <eos>.
std::vector<CriticExample> build_positives(const CriticSource& source);

// Variant 1: each positive with its last token replaced by a token drawn from
// another reference of the same record, or from a random other record's
// reference when the record has a single one.
std::vector<CriticExample> build_negatives_base(const CriticSource& source, std::uint64_t seed);

// Variant 2: per reference, one random sentence swapped for a sentence of
// another record and one random token swapped for a wrong token; each
// corruption yields every prefix from its first deviating token to the end,
// except prefixes of another reference of the same record.
std::vector<CriticExample> build_negatives_base_full(const CriticSource& source, std::uint64_t seed);

// Variant 3: for every positive y<=i, a token sampled uniformly from the top-5
// continuations of y<=i-1 under an unconditional LM, gold token excluded.
std::vector<CriticExample> build_negatives_vanilla_lm(const CriticSource& source,
                                                      const GeneratorModel& unconditional,
                                                      std::uint64_t seed);

// Variant 4: as variant 3 with a data-conditioned LM.
std::vector<CriticExample> build_negatives_ft_lm(const CriticSource& source,
                                                 const GeneratorModel& conditional,
                                                 std::uint64_t seed);

// Variant 5: greedy LM output per record; every output prefix from the first
// token that deviates from the closest reference onwards.
std::vector<CriticExample> build_negatives_ft_lm_full(const CriticSource& source,
                                                      const GeneratorModel& conditional,
                                                      const DecodeConfig& config);

// Prefixes of `corrupted` from the first position where it differs from
// `original` through its last token. Empty when one is a prefix of the other.
std::vector<TokenSequence> deviating_prefixes(const TokenSequence& original,
                                              const TokenSequence& corrupted);

// Number of leading tokens two sequences share.
std::size_t common_prefix_length(const TokenSequence& a, const TokenSequence& b);

// Sentence spans [begin, end) where each sentence ends with a period token
// (or at the end of the sequence).
std::vector<std::pair<std::size_t, std::size_t>> sentence_spans(const TokenSequence& tokens,
                                                                TokenId period);

// JSONL {"id", "prefix", "label", "variant"}.
void save_examples(const std::vector<CriticExample>& examples, const std::string& path);
// Resolves each example's data by record id against `source`.
std::vector<CriticExample> load_examples(const std::string& path, const CriticSource& source);

}  // namespace cdd
