#include "cdd/critic_data.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <json.hpp>

#include "cdd/errors.hpp"
#include "cdd/tokenizer.hpp"

namespace cdd {

using nlohmann::json;

CriticSource::CriticSource(const Corpus& corpus) : vocab_(corpus.vocab) {
  for (const auto& r : corpus.records) {
    Entry e;
    e.id = r.id;
    e.data = std::make_shared<const TokenSequence>(linearize(r, vocab_));
    for (const auto& ref : r.refs) e.refs.push_back(tokenize(ref, vocab_));
    index_.emplace(e.id, entries_.size());
    entries_.push_back(std::move(e));
  }
}

const CriticSource::Entry& CriticSource::by_id(std::int64_t id) const {
  auto it = index_.find(id);
  if (it != index_.end()) return entries_[it->second];
  throw SchemaError("unknown record id " + std::to_string(id));
}

std::size_t common_prefix_length(const TokenSequence& a, const TokenSequence& b) {
  const auto n = std::min(a.size(), b.size());
  std::size_t i = 0;
  while (i < n && a[i] == b[i]) ++i;
  return i;
}

std::vector<TokenSequence> deviating_prefixes(const TokenSequence& original,
                                              const TokenSequence& corrupted) {
  const auto d = common_prefix_length(original, corrupted);
  std::vector<TokenSequence> out;
  if (d == std::min(original.size(), corrupted.size())) return out;
  for (std::size_t len = d + 1; len <= corrupted.size(); ++len) {
    out.emplace_back(corrupted.begin(), corrupted.begin() + static_cast<std::ptrdiff_t>(len));
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> sentence_spans(const TokenSequence& tokens,
                                                                TokenId period) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == period) {
      spans.emplace_back(begin, i + 1);
      begin = i + 1;
    }
  }
  if (begin < tokens.size()) spans.emplace_back(begin, tokens.size());
  return spans;
}

namespace {

TokenSequence with_eos(const TokenSequence& ref) {
  TokenSequence s = ref;
  s.push_back(kEos);
  return s;
}

CriticExample make(const CriticSource::Entry& e, TokenSequence prefix, int label, Variant v) {
  return CriticExample{e.id, e.data, std::move(prefix), label, v};
}

std::size_t uniform(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// A reference of a uniformly chosen record other than `self`.
const TokenSequence& other_record_ref(const CriticSource& source, std::size_t self,
                                      std::mt19937_64& rng) {
  const auto n = source.entries().size();
  if (n < 2) throw SamplingError("negative sampling needs at least two records");
  auto other = uniform(rng, n - 1);
  if (other >= self) ++other;
  const auto& refs = source.entries()[other].refs;
  return refs[uniform(rng, refs.size())];
}

void require_pool(const CriticSource& source) {
  const auto& entries = source.entries();
  if (entries.empty()) throw SamplingError("negative sampling needs a non-empty corpus");
  if (entries.size() == 1 && entries.front().refs.size() < 2) {
    throw SamplingError("a single record with a single reference leaves nothing to sample from");
  }
}

// Draws a token different from `gold`, first from `pool`, then from other
// records' references.
TokenId draw_replacement(const CriticSource& source, std::size_t self, const TokenSequence& pool,
                         TokenId gold, std::mt19937_64& rng) {
  const TokenSequence* from = &pool;
  for (int attempt = 0; attempt < 256; ++attempt) {
    if (!from->empty()) {
      const TokenId t = (*from)[uniform(rng, from->size())];
      if (t != gold) return t;
    }
    // After a few misses the pool is probably uniform in `gold`.
    if (attempt >= 8 && source.entries().size() >= 2) from = &other_record_ref(source, self, rng);
  }
  throw SamplingError("could not draw a replacement token different from the gold token");
}

}  // namespace

std::vector<CriticExample> build_positives(const CriticSource& source) {
  if (source.entries().empty()) throw SamplingError("cannot build positives from an empty corpus");
  std::vector<CriticExample> out;
  for (const auto& e : source.entries()) {
    for (const auto& ref : e.refs) {
      const auto seq = with_eos(ref);
      for (std::size_t len = 1; len <= seq.size(); ++len) {
        out.push_back(make(e, TokenSequence(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(len)),
                           1, Variant::kPositive));
      }
    }
  }
  return out;
}

std::vector<CriticExample> build_negatives_base(const CriticSource& source, std::uint64_t seed) {
  require_pool(source);
  std::mt19937_64 rng(seed);
  std::vector<CriticExample> out;
  const auto& entries = source.entries();
  for (std::size_t r = 0; r < entries.size(); ++r) {
    const auto& e = entries[r];
    for (std::size_t j = 0; j < e.refs.size(); ++j) {
      const auto seq = with_eos(e.refs[j]);
      for (std::size_t len = 1; len <= seq.size(); ++len) {
        const TokenSequence* pool;
        if (e.refs.size() >= 2) {
          auto other = uniform(rng, e.refs.size() - 1);
          if (other >= j) ++other;
          pool = &e.refs[other];
        } else {
          pool = &other_record_ref(source, r, rng);
        }
        TokenSequence prefix(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(len));
        prefix.back() = draw_replacement(source, r, *pool, seq[len - 1], rng);
        out.push_back(make(e, std::move(prefix), 0, Variant::kBase));
      }
    }
  }
  return out;
}

std::vector<CriticExample> build_negatives_base_full(const CriticSource& source, std::uint64_t seed) {
  require_pool(source);
  const auto& entries = source.entries();
  if (entries.size() < 2) throw SamplingError("sentence replacement needs at least two records");
  std::mt19937_64 rng(seed);
  const TokenId period = source.vocab().id(".");
  std::vector<CriticExample> out;
  auto emit = [&](const CriticSource::Entry& e, const TokenSequence& original,
                  const TokenSequence& corrupted) {
    for (auto& p : deviating_prefixes(original, corrupted)) {
      // A corruption can spell out a prefix of another reference.
      bool valid = false;
      for (const auto& r : e.refs) valid = valid || common_prefix_length(with_eos(r), p) == p.size();
      if (!valid) out.push_back(make(e, std::move(p), 0, Variant::kBaseFull));
    }
  };

  for (std::size_t r = 0; r < entries.size(); ++r) {
    const auto& e = entries[r];
    for (const auto& ref : e.refs) {
      if (ref.empty()) continue;
      // (a) sentence replacement
      const auto spans = sentence_spans(ref, period);
      for (int attempt = 0; attempt < 16; ++attempt) {
        const auto [b, end] = spans[uniform(rng, spans.size())];
        const auto& donor = other_record_ref(source, r, rng);
        const auto donor_spans = sentence_spans(donor, period);
        if (donor_spans.empty()) continue;
        const auto [db, de] = donor_spans[uniform(rng, donor_spans.size())];
        TokenSequence corrupted(ref.begin(), ref.begin() + static_cast<std::ptrdiff_t>(b));
        corrupted.insert(corrupted.end(), donor.begin() + static_cast<std::ptrdiff_t>(db),
                         donor.begin() + static_cast<std::ptrdiff_t>(de));
        corrupted.insert(corrupted.end(), ref.begin() + static_cast<std::ptrdiff_t>(end), ref.end());
        if (deviating_prefixes(ref, corrupted).empty()) continue;
        emit(e, ref, corrupted);
        break;
      }
      // (b) single-token replacement
      const auto pos = uniform(rng, ref.size());
      TokenSequence corrupted = ref;
      corrupted[pos] = draw_replacement(source, r, other_record_ref(source, r, rng), ref[pos], rng);
      emit(e, ref, corrupted);
    }
  }
  return out;
}

namespace {

std::vector<CriticExample> lm_negatives(const CriticSource& source, const GeneratorModel& model,
                                        bool conditional, Variant variant, std::uint64_t seed) {
  if (model.conditional() != conditional) {
    throw InputError(conditional ? "variant needs a data-conditioned LM"
                                 : "variant needs an unconditional LM");
  }
  if (model.vocab_size() != source.vocab().size()) {
    throw InputError("LM vocabulary does not match the corpus vocabulary");
  }
  std::mt19937_64 rng(seed);
  std::vector<CriticExample> out;
  for (const auto& e : source.entries()) {
    for (const auto& ref : e.refs) {
      const auto seq = with_eos(ref);
      TokenSequence context;
      for (std::size_t i = 0; i < seq.size(); ++i) {
        const TokenId gold = seq[i];
        const auto dist = model.next_token_logprobs(conditional ? e.data.get() : nullptr, context);
        auto candidates = top_k(dist, 5);
        candidates.erase(std::remove(candidates.begin(), candidates.end(), gold), candidates.end());
        if (!candidates.empty()) {
          TokenSequence prefix = context;
          prefix.push_back(candidates[uniform(rng, candidates.size())]);
          out.push_back(make(e, std::move(prefix), 0, variant));
        }
        context.push_back(gold);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<CriticExample> build_negatives_vanilla_lm(const CriticSource& source,
                                                      const GeneratorModel& unconditional,
                                                      std::uint64_t seed) {
  return lm_negatives(source, unconditional, false, Variant::kVanillaLm, seed);
}

std::vector<CriticExample> build_negatives_ft_lm(const CriticSource& source,
                                                 const GeneratorModel& conditional,
                                                 std::uint64_t seed) {
  return lm_negatives(source, conditional, true, Variant::kFtLm, seed);
}

std::vector<CriticExample> build_negatives_ft_lm_full(const CriticSource& source,
                                                      const GeneratorModel& conditional,
                                                      const DecodeConfig& config) {
  if (!conditional.conditional()) throw InputError("variant needs a data-conditioned LM");
  DecodeConfig plain = config;
  plain.lambda = 0.0;
  plain.mode = DecodeMode::kGreedy;
  std::vector<CriticExample> out;
  for (const auto& e : source.entries()) {
    const auto output = greedy_decode(conditional, nullptr, *e.data, plain).tokens;
    // Deviation is measured against the reference sharing the longest prefix
    // with the output; earlier positions match some valid reference.
    const TokenSequence* closest = nullptr;
    TokenSequence best;
    std::size_t best_len = 0;
    for (const auto& ref : e.refs) {
      auto seq = with_eos(ref);
      const auto n = common_prefix_length(output, seq);
      if (closest == nullptr || n > best_len) {
        best = std::move(seq);
        best_len = n;
        closest = &ref;
      }
    }
    if (closest == nullptr) continue;
    for (auto& p : deviating_prefixes(best, output)) {
      out.push_back(make(e, std::move(p), 0, Variant::kFtLmFull));
    }
  }
  return out;
}

void save_examples(const std::vector<CriticExample>& examples, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& ex : examples) {
    json line = {{"id", ex.record_id}, {"prefix", ex.prefix}, {"label", ex.label},
                 {"variant", variant_name(ex.variant)}};
    out << line.dump() << '\n';
  }
}

std::vector<CriticExample> load_examples(const std::string& path, const CriticSource& source) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::vector<CriticExample> out;
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
    try {
      CriticExample ex;
      ex.record_id = obj.at("id").get<std::int64_t>();
      ex.prefix = obj.at("prefix").get<TokenSequence>();
      ex.label = obj.at("label").get<int>();
      ex.variant = parse_variant(obj.at("variant").get<std::string>());
      if (ex.prefix.empty()) throw SchemaError("empty prefix", line);
      if (ex.label != 0 && ex.label != 1) throw SchemaError("label must be 0 or 1", line);
      for (TokenId t : ex.prefix) {
        if (!source.vocab().valid(t)) throw SchemaError("prefix id outside the vocabulary", line);
      }
      ex.data = source.by_id(ex.record_id).data;
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw SchemaError(e.what(), line);
    } catch (const ConfigError& e) {
      throw SchemaError(e.what(), line);
    }
  }
  return out;
}

}  // namespace cdd
