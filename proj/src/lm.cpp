#include "cdd/lm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "cdd/errors.hpp"
#include "cdd/tokenizer.hpp"

namespace cdd {

using nlohmann::json;

void validate(const LmConfig& c) {
  if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) throw ConfigError("alpha must be > 0");
  double sum = 0.0;
  for (double w : c.order_weights) {
    if (!(w >= 0.0)) throw ConfigError("interpolation weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("interpolation weights must sum to 1");
  if (!(c.mu >= 0.0 && c.mu < 1.0)) throw ConfigError("copy weight mu must lie in [0, 1)");
  if (!c.conditional && c.mu != 0.0) {
    throw ConfigError("an unconditional model requires mu = 0");
  }
}

TokenSequence copy_set(const TokenSequence& linearized, const Vocabulary& vocab) {
  const TokenId bar = vocab.id("|");
  const TokenId amp = vocab.id("&&");
  TokenSequence out;
  for (TokenId t : linearized) {
    if (t == bar || t == amp || t < kNumReserved) continue;
    out.push_back(t);
  }
  out.push_back(kEos);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TokenSequence copy_set(const TokenSequence& linearized, const Vocabulary& vocab,
                       const TokenSequence& prefix) {
  auto out = copy_set(linearized, vocab);
  TokenSequence used(prefix);
  std::sort(used.begin(), used.end());
  std::erase_if(out, [&](TokenId t) {
    return t == kEos || std::binary_search(used.begin(), used.end(), t);
  });
  if (out.empty()) out.push_back(kEos);
  return out;
}

GeneratorModel::GeneratorModel(std::shared_ptr<const Vocabulary> vocab, const LmConfig& config)
    : vocab_(std::move(vocab)), config_(config) {
  if (!vocab_) throw ConfigError("language model needs a vocabulary");
  validate(config_);
  finalize();
}

void GeneratorModel::add_sequence(const TokenSequence& tokens) {
  TokenId h2 = kBos;
  TokenId h1 = kBos;
  auto count = [&](TokenId t) {
    ++unigram_[t];
    ++unigram_total_;
    ++bigram_[h1][t];
    ++bigram_totals_[h1];
    ++trigram_[{h2, h1}][t];
    ++trigram_totals_[{h2, h1}];
    h2 = h1;
    h1 = t;
  };
  for (TokenId t : tokens) {
    if (!vocab_->valid(t)) throw InputError("token id out of range in training data");
    count(t);
  }
  count(kEos);
}

void GeneratorModel::restore(Counts unigram, std::map<TokenId, Counts> bigram,
                             std::map<std::pair<TokenId, TokenId>, Counts> trigram) {
  unigram_ = std::move(unigram);
  bigram_ = std::move(bigram);
  trigram_ = std::move(trigram);
  auto total = [](const Counts& c) {
    std::uint64_t n = 0;
    for (const auto& kv : c) n += kv.second;
    return n;
  };
  unigram_total_ = total(unigram_);
  bigram_totals_.clear();
  trigram_totals_.clear();
  for (const auto& [h, c] : bigram_) bigram_totals_[h] = total(c);
  for (const auto& [h, c] : trigram_) trigram_totals_[h] = total(c);
  finalize();
}

void GeneratorModel::finalize() {
  const auto v = static_cast<double>(vocab_->size());
  const double denom = static_cast<double>(unigram_total_) + config_.alpha * v;
  const double w = config_.order_weights[0];
  unigram_prob_.assign(vocab_->size(), w * config_.alpha / denom);
  for (const auto& [t, c] : unigram_) {
    unigram_prob_[static_cast<std::size_t>(t)] =
        w * (static_cast<double>(c) + config_.alpha) / denom;
  }
}

void GeneratorModel::check_prefix(const TokenSequence& prefix) const {
  for (TokenId t : prefix) {
    if (!vocab_->valid(t)) {
      throw InputError("prefix contains out-of-vocabulary id " + std::to_string(t));
    }
  }
}

TokenDistribution GeneratorModel::mix(const TokenSequence* copy,
                                      const TokenSequence& prefix) const {
  check_prefix(prefix);
  std::size_t start = (!prefix.empty() && prefix.front() == kBos) ? 1 : 0;
  const std::size_t len = prefix.size() - start;
  const TokenId h1 = len >= 1 ? prefix[prefix.size() - 1] : kBos;
  const TokenId h2 = len >= 2 ? prefix[prefix.size() - 2] : kBos;

  const auto v = static_cast<double>(vocab_->size());
  const double alpha = config_.alpha;
  std::vector<double> p = unigram_prob_;

  auto add_order = [&](double weight, const Counts* counts, std::uint64_t total) {
    if (weight == 0.0) return;
    const double denom = static_cast<double>(total) + alpha * v;
    const double floor = weight * alpha / denom;
    for (auto& x : p) x += floor;
    if (counts == nullptr) return;
    for (const auto& [t, c] : *counts) {
      p[static_cast<std::size_t>(t)] += weight * static_cast<double>(c) / denom;
    }
  };

  {
    auto it = bigram_.find(h1);
    add_order(config_.order_weights[1], it == bigram_.end() ? nullptr : &it->second,
              it == bigram_.end() ? 0 : bigram_totals_.at(h1));
  }
  {
    auto it = trigram_.find({h2, h1});
    add_order(config_.order_weights[2], it == trigram_.end() ? nullptr : &it->second,
              it == trigram_.end() ? 0 : trigram_totals_.at({h2, h1}));
  }

  if (copy != nullptr && config_.mu > 0.0) {
    const double keep = 1.0 - config_.mu;
    for (auto& x : p) x *= keep;
    const double share = config_.mu / static_cast<double>(copy->size());
    for (TokenId t : *copy) p[static_cast<std::size_t>(t)] += share;
  }
  for (auto& x : p) x = std::log(x);
  return p;
}

TokenDistribution GeneratorModel::next_token_logprobs(const TokenSequence* data,
                                                      const TokenSequence& prefix) const {
  if ((data != nullptr) != config_.conditional) {
    throw InputError(config_.conditional ? "conditional model needs data"
                                         : "unconditional model takes no data");
  }
  if (data == nullptr) return mix(nullptr, prefix);
  check_prefix(*data);
  const auto copy = config_.copy_coverage ? copy_set(*data, *vocab_, prefix)
                                          : copy_set(*data, *vocab_);
  return mix(&copy, prefix);
}

TokenDistribution GeneratorModel::next_token_logprobs(const DataRecord* data,
                                                      const TokenSequence& prefix) const {
  if (data == nullptr) return next_token_logprobs(static_cast<const TokenSequence*>(nullptr), prefix);
  const auto linearized = linearize(*data, *vocab_);
  return next_token_logprobs(&linearized, prefix);
}

double GeneratorModel::sequence_logprob(const TokenSequence* data,
                                        const TokenSequence& seq) const {
  double total = 0.0;
  TokenSequence prefix;
  for (TokenId t : seq) {
    total += next_token_logprobs(data, prefix)[static_cast<std::size_t>(t)];
    prefix.push_back(t);
  }
  return total;
}

bool GeneratorModel::operator==(const GeneratorModel& o) const {
  return vocab_->size() == o.vocab_->size() && config_.alpha == o.config_.alpha &&
         config_.order_weights == o.config_.order_weights && config_.mu == o.config_.mu &&
         config_.conditional == o.config_.conditional &&
         config_.copy_coverage == o.config_.copy_coverage && unigram_ == o.unigram_ &&
         bigram_ == o.bigram_ && trigram_ == o.trigram_;
}

GeneratorModel train_lm(const Corpus& corpus, const LmConfig& config) {
  if (corpus.records.empty()) throw TrainingError("cannot train a language model on an empty corpus");
  auto vocab = std::make_shared<const Vocabulary>(corpus.vocab);
  GeneratorModel model(vocab, config);
  for (const auto& r : corpus.records) {
    for (const auto& ref : r.refs) model.add_sequence(tokenize(ref, *vocab));
  }
  model.finalize();
  return model;
}

TokenSequence top_k(const TokenDistribution& dist, std::size_t k) {
  k = std::min(k, dist.size());
  TokenSequence ids(dist.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                    [&](TokenId a, TokenId b) {
                      const double da = dist[static_cast<std::size_t>(a)];
                      const double db = dist[static_cast<std::size_t>(b)];
                      return da != db ? da > db : a < b;
                    });
  ids.resize(k);
  return ids;
}

namespace {

json counts_json(const GeneratorModel::Counts& counts) {
  json out = json::object();
  for (const auto& [t, c] : counts) out[std::to_string(t)] = c;
  return out;
}

TokenId parse_id(const std::string& key, std::size_t vocab_size) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(key, &used);
  } catch (const std::exception&) {
    throw ParseError("bad token id key \"" + key + "\"");
  }
  if (used != key.size() || v < 0 || static_cast<std::size_t>(v) >= vocab_size) {
    throw SchemaError("token id key \"" + key + "\" outside the vocabulary");
  }
  return static_cast<TokenId>(v);
}

}  // namespace

void save_lm(const GeneratorModel& model, const std::string& path) {
  const auto& c = model.config();
  json bi = json::object();
  for (const auto& [h, counts] : model.bigrams()) bi[std::to_string(h)] = counts_json(counts);
  json tri = json::object();
  for (const auto& [h, counts] : model.trigrams()) {
    tri[std::to_string(h.first) + " " + std::to_string(h.second)] = counts_json(counts);
  }
  json doc = {{"order_weights", c.order_weights},
              {"alpha", c.alpha},
              {"mu", c.mu},
              {"conditional", c.conditional},
              {"copy_coverage", c.copy_coverage},
              {"vocab_size", model.vocab_size()},
              {"counts", {{"1", counts_json(model.unigrams())}, {"2", bi}, {"3", tri}}}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << doc.dump() << '\n';
}

GeneratorModel load_lm(const std::string& path, std::shared_ptr<const Vocabulary> vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("corrupt model file: ") + e.what());
  }
  try {
    LmConfig config;
    config.order_weights = doc.at("order_weights").get<std::array<double, 3>>();
    config.alpha = doc.at("alpha").get<double>();
    config.mu = doc.at("mu").get<double>();
    config.conditional = doc.at("conditional").get<bool>();
    config.copy_coverage = doc.value("copy_coverage", false);
    const auto vsize = doc.at("vocab_size").get<std::size_t>();
    if (vsize != vocab->size()) {
      throw SchemaError("model vocab_size " + std::to_string(vsize) + " != vocabulary size " +
                        std::to_string(vocab->size()));
    }
    GeneratorModel model(vocab, config);
    const auto& counts = doc.at("counts");
    std::map<std::pair<TokenId, TokenId>, GeneratorModel::Counts> tri;
    for (const auto& [key, table] : counts.at("3").items()) {
      const auto space = key.find(' ');
      if (space == std::string::npos) throw ParseError("bad trigram context \"" + key + "\"");
      auto& dst = tri[{parse_id(key.substr(0, space), vsize), parse_id(key.substr(space + 1), vsize)}];
      for (const auto& [t, c] : table.items()) dst[parse_id(t, vsize)] = c.get<std::uint64_t>();
    }
    GeneratorModel::Counts uni;
    for (const auto& [t, c] : counts.at("1").items()) uni[parse_id(t, vsize)] = c.get<std::uint64_t>();
    std::map<TokenId, GeneratorModel::Counts> bi;
    for (const auto& [h, table] : counts.at("2").items()) {
      auto& dst = bi[parse_id(h, vsize)];
      for (const auto& [t, c] : table.items()) dst[parse_id(t, vsize)] = c.get<std::uint64_t>();
    }
    model.restore(std::move(uni), std::move(bi), std::move(tri));
    return model;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model file schema: ") + e.what());
  }
}

}  // namespace cdd
