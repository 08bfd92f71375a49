#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cdd/vocabulary.hpp"

namespace cdd {

enum class Variant { kPositive, kBase, kBaseFull, kVanillaLm, kFtLm, kFtLmFull };

// "positive", "base", "base_full", "vanilla_lm", "ft_lm", "ft_lm_full".
const char* variant_name(Variant v);
// Accepts both underscore and hyphen spellings.
Variant parse_variant(const std::string& name);

// A (data, prefix, label) triple. `data` is the linearized record, shared
// between all examples of that record.
struct CriticExample {
  std::int64_t record_id = 0;
  std::shared_ptr<const TokenSequence> data;
  TokenSequence prefix;
  int label = 1;
  Variant variant = Variant::kPositive;
};

struct CriticTrainConfig {
  int epochs = 10;
  double learning_rate = 0.5;
  double l2 = 1e-7;
  std::uint64_t shuffle_seed = 7;
  double neg_pos_ratio = 1.0;  // target negatives per positive
  std::size_t dim_bits = 20;
  std::uint64_t hash_seed = 0x5bd1e995;
  TokenId segment_token = -1;  // triple separator in linearized data; -1 = none
};

void validate(const CriticTrainConfig& config);

// Logistic classifier over hashed binary features of (data, prefix):
// prefix unigrams and bigrams, the final token, data tokens, final-token x
// data-token conjunctions, a prefix-length bucket, and whether the final
// token occurs in the data (alone and paired with the previous token). With
// a segment token, also whether the final and previous tokens share a triple
// and whether a data token is being repeated. The feature vector is
// L2-normalized.
class CriticModel {
 public:
  CriticModel(std::size_t dim, std::uint64_t hash_seed, TokenId segment_token = -1);

  TokenId segment_token() const { return segment_token_; }
  std::size_t dim() const { return weights_.size(); }
  std::uint64_t hash_seed() const { return hash_seed_; }
  double bias() const { return bias_; }
  const std::vector<double>& weights() const { return weights_; }

  // Sorted, de-duplicated feature indices.
  std::vector<std::uint32_t> features(const TokenSequence& data, const TokenSequence& prefix) const;

  // w . phi + b
  double logit(const TokenSequence& data, const TokenSequence& prefix) const;
  // P(c = 1 | prefix, data), strictly inside (0, 1). Throws InputError on an
  // empty prefix.
  double prob(const TokenSequence& data, const TokenSequence& prefix) const;

  // Mean binary cross-entropy over the examples.
  double loss(const std::vector<CriticExample>& examples) const;

  void set_bias(double b) { bias_ = b; }
  std::vector<double>& mutable_weights() { return weights_; }

  bool operator==(const CriticModel& o) const {
    return hash_seed_ == o.hash_seed_ && segment_token_ == o.segment_token_ && bias_ == o.bias_ &&
           weights_ == o.weights_;
  }

 private:
  std::uint64_t hash_seed_;
  TokenId segment_token_;
  double bias_ = 0.0;
  std::vector<double> weights_;
};

struct CriticTrainResult {
  CriticModel model;
  std::vector<double> epoch_loss;  // mean training loss after each epoch
  std::size_t positives = 0;       // after class rebalancing
  std::size_t negatives = 0;
};

// Seeded SGD on binary cross-entropy. The examples are put in a canonical
// order and the larger class is downsampled to the target ratio before
// shuffling, so the result does not depend on the input order. An epoch that
// raises the training loss is rolled back and the step size halved, so
// epoch_loss never increases.
CriticTrainResult train_critic(std::vector<CriticExample> examples, const CriticTrainConfig& config);

struct CriticEvaluation {
  double accuracy = 0.0;
  double f1 = 0.0;  // positive class = label 1
  std::size_t count = 0;
  // Index b-1 holds prefix length b for b < 20; the last bucket is 20+.
  std::vector<double> accuracy_by_length;
  std::vector<std::size_t> count_by_length;
};

inline constexpr std::size_t kLengthBuckets = 20;

// Threshold 0.5 with prob >= 0.5 predicting label 1.
CriticEvaluation evaluate_critic(const CriticModel& model, const std::vector<CriticExample>& examples);

// JSON {dim, hash_seed, segment_token, bias, weights: {index: value}} with zero
// weights omitted.
void save_critic(const CriticModel& model, const std::string& path);
CriticModel load_critic(const std::string& path);

}  // namespace cdd
