#include "cdd/metrics.hpp"

#include <cmath>
#include <cstdlib>
#include <map>

#include <json.hpp>

#include "cdd/errors.hpp"
#include "cdd/tokenizer.hpp"

namespace cdd {

using nlohmann::json;

double RecordFaithfulness::omission_rate(std::size_t triples) const {
  return triples == 0 ? 0.0 : static_cast<double>(omitted) / static_cast<double>(triples);
}

namespace {

FaithfulnessSummary summarize(const std::vector<RecordFaithfulness>& rows,
                              const std::vector<DataRecord>& records, bool filter, bool ood) {
  FaithfulnessSummary s;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (filter && r.out_of_domain != ood) continue;
    ++s.outputs;
    s.hallucinated += static_cast<double>(r.hallucinated);
    s.omitted += static_cast<double>(r.omitted);
    s.precision += r.precision;
    s.recall += r.recall;
    s.halluc_rate += r.has_hallucination() ? 1.0 : 0.0;
    s.omission_rate += r.omission_rate(records[i].triples.size());
  }
  if (s.outputs > 0) {
    const auto n = static_cast<double>(s.outputs);
    for (double* v : {&s.hallucinated, &s.omitted, &s.precision, &s.recall, &s.halluc_rate,
                      &s.omission_rate}) {
      *v /= n;
    }
  }
  return s;
}

json summary_json(const FaithfulnessSummary& s) {
  return {{"outputs", s.outputs},         {"hallucinated", s.hallucinated},
          {"omitted", s.omitted},         {"precision", s.precision},
          {"recall", s.recall},           {"halluc_rate", s.halluc_rate},
          {"omission_rate", s.omission_rate}};
}

}  // namespace

FaithfulnessReport faithfulness_report(const std::vector<std::string>& outputs,
                                       const std::vector<DataRecord>& records,
                                       const FactExtractor& extractor,
                                       const std::set<std::string>& held_out_predicates) {
  if (outputs.size() != records.size()) throw InputError("outputs and records are not aligned");
  FaithfulnessReport report;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& rec = records[i];
    std::set<Triple> gold;
    for (const auto& t : rec.triples) gold.insert(normalize_fact(t));
    const auto found = extractor.extract(outputs[i]);
    RecordFaithfulness row;
    row.id = rec.id;
    row.unparsable = found.unparsable;
    std::size_t correct = 0;
    for (const auto& t : found.facts) {
      if (gold.count(t)) {
        ++correct;
      } else {
        ++row.hallucinated;
      }
    }
    row.omitted = gold.size() - correct;
    row.precision = found.facts.empty()
                        ? 1.0
                        : static_cast<double>(correct) / static_cast<double>(found.facts.size());
    row.recall = gold.empty() ? 1.0 : static_cast<double>(correct) / static_cast<double>(gold.size());
    for (const auto& t : rec.triples) {
      if (held_out_predicates.count(t.predicate)) row.out_of_domain = true;
    }
    report.records.push_back(row);
  }
  report.all = summarize(report.records, records, false, false);
  if (!held_out_predicates.empty()) {
    report.in_domain = summarize(report.records, records, true, false);
    report.out_of_domain = summarize(report.records, records, true, true);
  }
  return report;
}

std::string to_json(const FaithfulnessReport& report) {
  json rows = json::array();
  for (const auto& r : report.records) {
    rows.push_back({{"id", r.id},
                    {"hallucinated", r.hallucinated},
                    {"omitted", r.omitted},
                    {"unparsable", r.unparsable},
                    {"precision", r.precision},
                    {"recall", r.recall},
                    {"out_of_domain", r.out_of_domain}});
  }
  json doc = {{"all", summary_json(report.all)}, {"records", rows}};
  if (report.in_domain) doc["in_domain"] = summary_json(*report.in_domain);
  if (report.out_of_domain) doc["out_of_domain"] = summary_json(*report.out_of_domain);
  return doc.dump(2);
}

double bleu(const std::vector<std::string>& outputs,
            const std::vector<std::vector<std::string>>& references) {
  if (outputs.size() != references.size()) throw InputError("outputs and references are not aligned");
  constexpr int kMaxOrder = 4;
  using Gram = std::vector<std::string>;
  auto grams = [](const std::vector<std::string>& words, int n) {
    std::map<Gram, std::size_t> counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= words.size(); ++i) {
      ++counts[Gram(words.begin() + static_cast<std::ptrdiff_t>(i),
                    words.begin() + static_cast<std::ptrdiff_t>(i) + n)];
    }
    return counts;
  };

  double matched[kMaxOrder] = {};
  double total[kMaxOrder] = {};
  double hyp_len = 0.0;
  double ref_len = 0.0;
  for (std::size_t s = 0; s < outputs.size(); ++s) {
    const auto hyp = split_words(outputs[s]);
    std::vector<std::vector<std::string>> refs;
    for (const auto& r : references[s]) refs.push_back(split_words(r));
    hyp_len += static_cast<double>(hyp.size());
    // Closest reference length, shorter on ties.
    std::size_t best = 0;
    bool have = false;
    for (const auto& r : refs) {
      const auto diff = [&](std::size_t len) {
        return len > hyp.size() ? len - hyp.size() : hyp.size() - len;
      };
      if (!have || diff(r.size()) < diff(best) || (diff(r.size()) == diff(best) && r.size() < best)) {
        best = r.size();
        have = true;
      }
    }
    ref_len += static_cast<double>(best);
    for (int n = 1; n <= kMaxOrder; ++n) {
      const auto h = grams(hyp, n);
      std::map<Gram, std::size_t> max_ref;
      for (const auto& r : refs) {
        for (const auto& [g, c] : grams(r, n)) max_ref[g] = std::max(max_ref[g], c);
      }
      for (const auto& [g, c] : h) {
        auto it = max_ref.find(g);
        matched[n - 1] += static_cast<double>(std::min(c, it == max_ref.end() ? 0 : it->second));
        total[n - 1] += static_cast<double>(c);
      }
    }
  }
  if (hyp_len == 0.0 || matched[0] == 0.0) return 0.0;
  double log_sum = std::log(matched[0] / total[0]);
  for (int n = 2; n <= kMaxOrder; ++n) {
    log_sum += std::log((matched[n - 1] + 1.0) / (total[n - 1] + 1.0));
  }
  const double log_bp = hyp_len < ref_len ? 1.0 - ref_len / hyp_len : 0.0;
  return 100.0 * std::exp(log_bp + log_sum / kMaxOrder);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = a[i - 1] == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

DiffStats diff_stats(const std::vector<std::string>& baseline, const std::vector<std::string>& variant) {
  if (baseline.size() != variant.size()) throw InputError("output sets are not aligned");
  DiffStats d;
  if (baseline.empty()) return d;
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    const auto a = split_words(baseline[i]);
    const auto b = split_words(variant[i]);
    const auto common = lcs_length(a, b);
    d.words_added += static_cast<double>(b.size() - common);
    d.words_removed += static_cast<double>(a.size() - common);
    d.modified += a != b ? 1.0 : 0.0;
  }
  const auto n = static_cast<double>(baseline.size());
  d.modified /= n;
  d.words_added /= n;
  d.words_removed /= n;
  return d;
}

std::string to_json(const DiffStats& s) {
  return json{{"modified", s.modified}, {"words_added", s.words_added}, {"words_removed", s.words_removed}}
      .dump(2);
}

}  // namespace cdd
