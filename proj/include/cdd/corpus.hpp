#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "cdd/vocabulary.hpp"

namespace cdd {

struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;

  auto operator<=>(const Triple&) const = default;
};

// One input x with its reference texts.
struct DataRecord {
  std::int64_t id = 0;
  std::vector<Triple> triples;
  std::vector<std::string> refs;
  bool corrupted = false;
  // Per-reference corruption flags; empty means no reference is corrupted.
  std::vector<bool> corrupted_refs;

  bool ref_corrupted(std::size_t i) const {
    return i < corrupted_refs.size() && corrupted_refs[i];
  }

  bool operator==(const DataRecord&) const = default;
};

struct Corpus {
  std::vector<DataRecord> records;
  Vocabulary vocab;
};

// Token-level view of a record, precomputed once so that scorers do not
// re-tokenize on every call.
struct EncodedRecord {
  const DataRecord* record = nullptr;
  TokenSequence data;                   // linearize(record)
  std::vector<TokenSequence> refs;      // tokenized references, no BOS/EOS
};

// "s | p | o && s | p | o ..." in triple order.
std::string linearize_text(const DataRecord& record);
TokenSequence linearize(const DataRecord& record, const Vocabulary& vocab);

// Adds every word of every triple and reference to `vocab`.
void extend_vocabulary(const DataRecord& record, Vocabulary& vocab);
Vocabulary build_vocabulary(const std::vector<DataRecord>& records);

EncodedRecord encode(const DataRecord& record, const Vocabulary& vocab);
std::vector<EncodedRecord> encode_all(const std::vector<DataRecord>& records,
                                      const Vocabulary& vocab);

// Throws SchemaError on empty fields, empty refs or duplicate ids.
void validate(const std::vector<DataRecord>& records);

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct CorpusSplit {
  Corpus train;
  Corpus val;
  Corpus test;
};

// Seeded partition. Records mentioning any of `held_out_predicates` go to the
// test part only ("ood" mode); the rest are divided by the fractions. Each
// part shares the input vocabulary.
CorpusSplit split(const Corpus& corpus, const SplitFractions& fractions,
                  std::uint64_t seed,
                  const std::set<std::string>& held_out_predicates = {});

// One JSON object per line: {"id", "triples", "refs", "corrupted"}, plus
// "corrupted_refs" (one bool per ref) on corrupted records.
void save_jsonl(const Corpus& corpus, const std::string& path);
// Builds the vocabulary from the loaded records.
Corpus load_jsonl(const std::string& path);

}  // namespace cdd
