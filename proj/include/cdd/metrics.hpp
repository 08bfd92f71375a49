#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cdd/corpus.hpp"
#include "cdd/facts.hpp"

namespace cdd {

struct RecordFaithfulness {
  std::int64_t id = 0;
  std::size_t hallucinated = 0;  // extracted facts not among the input triples
  std::size_t omitted = 0;       // input triples not extracted
  std::size_t unparsable = 0;    // sentences no pattern matched
  double precision = 1.0;        // 1 when nothing was extracted
  double recall = 0.0;
  bool out_of_domain = false;

  bool has_hallucination() const { return hallucinated > 0; }
  double omission_rate(std::size_t triples) const;
};

struct FaithfulnessSummary {
  std::size_t outputs = 0;
  double hallucinated = 0.0;   // mean count per output
  double omitted = 0.0;        // mean count per output
  double precision = 0.0;
  double recall = 0.0;
  double halluc_rate = 0.0;    // fraction of outputs with >= 1 hallucinated fact
  double omission_rate = 0.0;  // mean fraction of input triples not expressed
};

struct FaithfulnessReport {
  std::vector<RecordFaithfulness> records;
  FaithfulnessSummary all;
  std::optional<FaithfulnessSummary> in_domain;
  std::optional<FaithfulnessSummary> out_of_domain;
};

// Outputs are aligned 1:1 with records. A record is out-of-domain when any of
// its triples uses a predicate in `held_out_predicates`; the breakdown is
// reported only when that set is non-empty.
FaithfulnessReport faithfulness_report(const std::vector<std::string>& outputs,
                                       const std::vector<DataRecord>& records,
                                       const FactExtractor& extractor,
                                       const std::set<std::string>& held_out_predicates = {});

std::string to_json(const FaithfulnessReport& report);

// Corpus BLEU-4 in [0, 100] over word tokens with multiple references,
// brevity penalty against the closest reference length, and add-one smoothing
// of the 2- to 4-gram precisions.
double bleu(const std::vector<std::string>& outputs,
            const std::vector<std::vector<std::string>>& references);

struct DiffStats {
  double modified = 0.0;       // fraction of outputs that changed
  double words_added = 0.0;    // mean per output
  double words_removed = 0.0;  // mean per output
};

// Word-level LCS alignment per pair; a replaced word counts as one addition
// and one removal.
DiffStats diff_stats(const std::vector<std::string>& baseline, const std::vector<std::string>& variant);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

std::string to_json(const DiffStats& stats);

}  // namespace cdd
