#include "cdd/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_set>

#include <json.hpp>

#include "cdd/errors.hpp"
#include "cdd/tokenizer.hpp"

namespace cdd {

using nlohmann::json;

std::string linearize_text(const DataRecord& record) {
  std::string out;
  for (std::size_t i = 0; i < record.triples.size(); ++i) {
    const auto& t = record.triples[i];
    if (i > 0) out += " && ";
    out += t.subject + " | " + t.predicate + " | " + t.object;
  }
  return out;
}

TokenSequence linearize(const DataRecord& record, const Vocabulary& vocab) {
  return tokenize(linearize_text(record), vocab);
}

void extend_vocabulary(const DataRecord& record, Vocabulary& vocab) {
  tokenize(linearize_text(record), vocab);
  for (const auto& ref : record.refs) tokenize(ref, vocab);
}

Vocabulary build_vocabulary(const std::vector<DataRecord>& records) {
  Vocabulary vocab;
  for (const auto& r : records) extend_vocabulary(r, vocab);
  vocab.freeze();
  return vocab;
}

EncodedRecord encode(const DataRecord& record, const Vocabulary& vocab) {
  EncodedRecord enc;
  enc.record = &record;
  enc.data = linearize(record, vocab);
  for (const auto& ref : record.refs) enc.refs.push_back(tokenize(ref, vocab));
  return enc;
}

std::vector<EncodedRecord> encode_all(const std::vector<DataRecord>& records,
                                      const Vocabulary& vocab) {
  std::vector<EncodedRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(encode(r, vocab));
  return out;
}

void validate(const std::vector<DataRecord>& records) {
  std::unordered_set<std::int64_t> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.id).second) {
      throw SchemaError("duplicate record id " + std::to_string(r.id));
    }
    if (r.triples.empty()) throw SchemaError("record " + std::to_string(r.id) + " has no triples");
    if (r.refs.empty()) throw SchemaError("record " + std::to_string(r.id) + " has no refs");
    for (const auto& t : r.triples) {
      if (t.subject.empty() || t.predicate.empty() || t.object.empty()) {
        throw SchemaError("record " + std::to_string(r.id) + " has an empty triple field");
      }
    }
  }
}

CorpusSplit split(const Corpus& corpus, const SplitFractions& f, std::uint64_t seed,
                  const std::set<std::string>& held_out_predicates) {
  const bool finite = std::isfinite(f.train) && std::isfinite(f.val) && std::isfinite(f.test);
  if (!finite || f.train <= 0 || f.val <= 0 || f.test <= 0 ||
      std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be positive and sum to 1");
  }

  std::vector<std::size_t> in_domain;
  std::vector<std::size_t> out_of_domain;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    const auto& triples = corpus.records[i].triples;
    const bool ood = std::any_of(triples.begin(), triples.end(), [&](const Triple& t) {
      return held_out_predicates.count(t.predicate) > 0;
    });
    (ood ? out_of_domain : in_domain).push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::shuffle(in_domain.begin(), in_domain.end(), rng);

  const std::size_t n = in_domain.size();
  const auto n_train = static_cast<std::size_t>(std::llround(f.train * static_cast<double>(n)));
  const auto n_val = std::min(
      n - n_train, static_cast<std::size_t>(std::llround(f.val * static_cast<double>(n))));

  CorpusSplit out;
  for (Corpus* c : {&out.train, &out.val, &out.test}) c->vocab = corpus.vocab;

  // Each part keeps the corpus order so outputs do not depend on shuffling.
  std::vector<std::size_t> train_idx(in_domain.begin(), in_domain.begin() + n_train);
  std::vector<std::size_t> val_idx(in_domain.begin() + n_train,
                                   in_domain.begin() + n_train + n_val);
  std::vector<std::size_t> test_idx(in_domain.begin() + n_train + n_val, in_domain.end());
  test_idx.insert(test_idx.end(), out_of_domain.begin(), out_of_domain.end());
  for (auto* idx : {&train_idx, &val_idx, &test_idx}) std::sort(idx->begin(), idx->end());

  for (auto i : train_idx) out.train.records.push_back(corpus.records[i]);
  for (auto i : val_idx) out.val.records.push_back(corpus.records[i]);
  for (auto i : test_idx) out.test.records.push_back(corpus.records[i]);
  return out;
}

void save_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& r : corpus.records) {
    json triples = json::array();
    for (const auto& t : r.triples) triples.push_back({t.subject, t.predicate, t.object});
    json line = {{"id", r.id}, {"triples", triples}, {"refs", r.refs}, {"corrupted", r.corrupted}};
    if (!r.corrupted_refs.empty()) line["corrupted_refs"] = r.corrupted_refs;
    out << line.dump() << '\n';
  }
}

namespace {

const json& require(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) throw SchemaError(std::string("missing field \"") + field + "\"", line);
  return *it;
}

DataRecord parse_record(const json& obj, std::size_t line) {
  if (!obj.is_object()) throw SchemaError("record must be a JSON object", line);
  DataRecord r;
  try {
    r.id = require(obj, "id", line).get<std::int64_t>();
    for (const auto& t : require(obj, "triples", line)) {
      if (!t.is_array() || t.size() != 3) throw SchemaError("triple must be [s, p, o]", line);
      r.triples.push_back({t[0].get<std::string>(), t[1].get<std::string>(),
                           t[2].get<std::string>()});
    }
    r.refs = require(obj, "refs", line).get<std::vector<std::string>>();
    auto it = obj.find("corrupted");
    r.corrupted = it != obj.end() && it->get<bool>();
    it = obj.find("corrupted_refs");
    if (it != obj.end()) {
      r.corrupted_refs = it->get<std::vector<bool>>();
      if (r.corrupted_refs.size() != r.refs.size()) {
        throw SchemaError("corrupted_refs must have one flag per ref", line);
      }
    }
  } catch (const json::type_error& e) {
    throw SchemaError(std::string("wrong field type: ") + e.what(), line);
  }
  return r;
}

}  // namespace

Corpus load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  Corpus corpus;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), line);
    }
    corpus.records.push_back(parse_record(obj, line));
  }
  validate(corpus.records);
  corpus.vocab = build_vocabulary(corpus.records);
  return corpus;
}

}  // namespace cdd
