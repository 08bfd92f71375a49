#include "cdd/critic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <tuple>

#include <json.hpp>

#include "cdd/errors.hpp"

namespace cdd {

using nlohmann::json;

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kPositive: return "positive";
    case Variant::kBase: return "base";
    case Variant::kBaseFull: return "base_full";
    case Variant::kVanillaLm: return "vanilla_lm";
    case Variant::kFtLm: return "ft_lm";
    case Variant::kFtLmFull: return "ft_lm_full";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  std::string n = name;
  std::replace(n.begin(), n.end(), '-', '_');
  for (Variant v : {Variant::kPositive, Variant::kBase, Variant::kBaseFull, Variant::kVanillaLm,
                    Variant::kFtLm, Variant::kFtLmFull}) {
    if (n == variant_name(v)) return v;
  }
  throw ConfigError("unknown critic variant \"" + name + "\"");
}

void validate(const CriticTrainConfig& c) {
  if (c.epochs < 1) throw ConfigError("critic epochs must be >= 1");
  if (!(c.learning_rate > 0.0)) throw ConfigError("critic learning rate must be > 0");
  if (!(c.l2 >= 0.0)) throw ConfigError("critic L2 strength must be >= 0");
  if (!(c.neg_pos_ratio > 0.0)) throw ConfigError("negative:positive ratio must be > 0");
  if (c.dim_bits < 4 || c.dim_bits > 30) throw ConfigError("feature dimension bits must be in [4, 30]");
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum FeatureTag : std::uint64_t {
  kUnigram = 1,
  kBigram,
  kFinal,
  kDataToken,
  kFinalByData,
  kLengthBucket,
  kFinalInData,
  kPrevByFinalInData,
  kSameTriple,
  kPrevBySameTriple,
  kRepeatedData,
};

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double dot(const std::vector<double>& w, const std::vector<std::uint32_t>& f) {
  if (f.empty()) return 0.0;
  double s = 0.0;
  for (auto i : f) s += w[i];
  return s / std::sqrt(static_cast<double>(f.size()));
}

}  // namespace

CriticModel::CriticModel(std::size_t dim, std::uint64_t hash_seed, TokenId segment_token)
    : hash_seed_(hash_seed), segment_token_(segment_token), weights_(dim, 0.0) {
  if (dim == 0 || (dim & (dim - 1)) != 0) throw ConfigError("critic dimension must be a power of two");
}

std::vector<std::uint32_t> CriticModel::features(const TokenSequence& data,
                                                 const TokenSequence& prefix) const {
  if (prefix.empty()) throw InputError("critic prefix must contain at least one token");
  const std::uint64_t mask = weights_.size() - 1;
  std::vector<std::uint32_t> out;
  out.reserve(2 * prefix.size() + 2 * data.size() + 4);
  auto add = [&](std::uint64_t tag, std::uint64_t a, std::uint64_t b) {
    const auto h = mix64(mix64(mix64(hash_seed_ ^ tag) ^ a) ^ b);
    out.push_back(static_cast<std::uint32_t>(h & mask));
  };
  auto u = [](TokenId t) { return static_cast<std::uint64_t>(static_cast<std::uint32_t>(t)); };

  TokenId prev = kBos;
  for (TokenId t : prefix) {
    add(kUnigram, u(t), 0);
    add(kBigram, u(prev), u(t));
    prev = t;
  }
  const TokenId final_token = prefix.back();
  const TokenId before_final = prefix.size() >= 2 ? prefix[prefix.size() - 2] : kBos;
  add(kFinal, u(final_token), 0);

  TokenSequence distinct = data;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (TokenId d : distinct) {
    add(kDataToken, u(d), 0);
    add(kFinalByData, u(final_token), u(d));
  }
  add(kLengthBucket, std::min<std::uint64_t>(prefix.size(), kLengthBuckets), 0);
  const bool in_data = std::binary_search(distinct.begin(), distinct.end(), final_token);
  add(kFinalInData, in_data, 0);
  add(kPrevByFinalInData, u(before_final), in_data);

  if (segment_token_ >= 0 && in_data) {
    bool same = false;
    auto begin = data.begin();
    while (!same) {
      const auto end = std::find(begin, data.end(), segment_token_);
      same = std::find(begin, end, final_token) != end && std::find(begin, end, before_final) != end;
      if (end == data.end()) break;
      begin = end + 1;
    }
    add(kSameTriple, same, 0);
    add(kPrevBySameTriple, u(before_final), same);
    const bool repeated = std::find(prefix.begin(), prefix.end() - 1, final_token) != prefix.end() - 1;
    add(kRepeatedData, repeated, 0);
  }

  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double CriticModel::logit(const TokenSequence& data, const TokenSequence& prefix) const {
  return dot(weights_, features(data, prefix)) + bias_;
}

double CriticModel::prob(const TokenSequence& data, const TokenSequence& prefix) const {
  const double p = sigmoid(logit(data, prefix));
  // Keep the open interval even when the logit saturates double precision.
  return std::clamp(p, 1e-300, std::nextafter(1.0, 0.0));
}

double CriticModel::loss(const std::vector<CriticExample>& examples) const {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : examples) {
    const double z = logit(*e.data, e.prefix);
    total += e.label == 1 ? softplus(-z) : softplus(z);
  }
  return total / static_cast<double>(examples.size());
}

namespace {

bool canonical_less(const CriticExample& a, const CriticExample& b) {
  return std::tie(a.record_id, a.variant, a.label, a.prefix) <
         std::tie(b.record_id, b.variant, b.label, b.prefix);
}

}  // namespace

CriticTrainResult train_critic(std::vector<CriticExample> examples,
                               const CriticTrainConfig& config) {
  validate(config);
  std::sort(examples.begin(), examples.end(), canonical_less);
  std::mt19937_64 rng(config.shuffle_seed);

  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].label != 0 && examples[i].label != 1) throw TrainingError("labels must be 0 or 1");
    if (!examples[i].data) throw TrainingError("critic example without data");
    (examples[i].label == 1 ? pos : neg).push_back(i);
  }
  if (pos.empty() || neg.empty()) throw TrainingError("critic training needs both labels");

  const double ratio = static_cast<double>(neg.size()) / static_cast<double>(pos.size());
  if (ratio > config.neg_pos_ratio) {
    std::shuffle(neg.begin(), neg.end(), rng);
    neg.resize(std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.neg_pos_ratio * static_cast<double>(pos.size())))));
  } else if (ratio < config.neg_pos_ratio) {
    std::shuffle(pos.begin(), pos.end(), rng);
    pos.resize(std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(neg.size()) / config.neg_pos_ratio))));
  }
  std::vector<std::size_t> chosen = pos;
  chosen.insert(chosen.end(), neg.begin(), neg.end());
  std::sort(chosen.begin(), chosen.end());

  CriticTrainResult result{CriticModel(std::size_t{1} << config.dim_bits, config.hash_seed, config.segment_token), {},
                           pos.size(), neg.size()};
  auto& model = result.model;

  std::vector<std::vector<std::uint32_t>> feats;
  std::vector<int> labels;
  feats.reserve(chosen.size());
  for (auto i : chosen) {
    feats.push_back(model.features(*examples[i].data, examples[i].prefix));
    labels.push_back(examples[i].label);
  }

  auto& w = model.mutable_weights();
  auto mean_loss = [&] {
    double total = 0.0;
    for (std::size_t j = 0; j < feats.size(); ++j) {
      const double z = dot(w, feats[j]) + model.bias();
      total += labels[j] == 1 ? softplus(-z) : softplus(z);
    }
    return total / static_cast<double>(feats.size());
  };

  std::vector<std::size_t> order(feats.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  double bias = 0.0;
  double lr_scale = 1.0;
  double best = mean_loss();
  std::vector<double> kept_w;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    kept_w = w;
    const double kept_bias = bias;
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = lr_scale * config.learning_rate / std::sqrt(1.0 + epoch);
    for (auto j : order) {
      const auto& f = feats[j];
      const double scale = 1.0 / std::sqrt(static_cast<double>(f.size()));
      double z = bias;
      for (auto i : f) z += w[i] * scale;
      const double g = sigmoid(z) - labels[j];
      for (auto i : f) w[i] -= lr * (g * scale + config.l2 * w[i]);
      bias -= lr * g;
    }
    model.set_bias(bias);
    double loss = mean_loss();
    if (loss > best) {
      // Overshot: undo the epoch and continue with half the step size.
      w.swap(kept_w);
      bias = kept_bias;
      model.set_bias(bias);
      lr_scale *= 0.5;
      loss = best;
    }
    best = loss;
    result.epoch_loss.push_back(loss);
  }
  return result;
}

CriticEvaluation evaluate_critic(const CriticModel& model, const std::vector<CriticExample>& examples) {
  if (examples.empty()) throw InputError("cannot evaluate a critic on zero examples");
  CriticEvaluation ev;
  ev.count = examples.size();
  ev.accuracy_by_length.assign(kLengthBuckets, 0.0);
  ev.count_by_length.assign(kLengthBuckets, 0);
  std::vector<std::size_t> correct_by_length(kLengthBuckets, 0);
  std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
  for (const auto& e : examples) {
    const int predicted = model.prob(*e.data, e.prefix) >= 0.5 ? 1 : 0;
    const bool ok = predicted == e.label;
    correct += ok;
    tp += predicted == 1 && e.label == 1;
    fp += predicted == 1 && e.label == 0;
    fn += predicted == 0 && e.label == 1;
    const auto bucket = std::min(e.prefix.size(), kLengthBuckets) - 1;
    ++ev.count_by_length[bucket];
    correct_by_length[bucket] += ok;
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(ev.count);
  const double denom = static_cast<double>(2 * tp + fp + fn);
  ev.f1 = denom > 0 ? 2.0 * static_cast<double>(tp) / denom : 1.0;
  for (std::size_t b = 0; b < kLengthBuckets; ++b) {
    if (ev.count_by_length[b] > 0) {
      ev.accuracy_by_length[b] =
          static_cast<double>(correct_by_length[b]) / static_cast<double>(ev.count_by_length[b]);
    }
  }
  return ev;
}

void save_critic(const CriticModel& model, const std::string& path) {
  json weights = json::object();
  const auto& w = model.weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] != 0.0) weights[std::to_string(i)] = w[i];
  }
  json doc = {{"dim", model.dim()},
              {"hash_seed", model.hash_seed()},
              {"segment_token", model.segment_token()},
              {"bias", model.bias()},
              {"weights", weights}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << doc.dump() << '\n';
}

CriticModel load_critic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("corrupt critic file: ") + e.what());
  }
  try {
    const auto dim = doc.at("dim").get<std::size_t>();
    if (dim == 0 || (dim & (dim - 1)) != 0) throw SchemaError("critic dim must be a power of two");
    CriticModel model(dim, doc.at("hash_seed").get<std::uint64_t>(),
                      doc.value("segment_token", TokenId{-1}));
    model.set_bias(doc.at("bias").get<double>());
    auto& w = model.mutable_weights();
    for (const auto& [key, value] : doc.at("weights").items()) {
      std::size_t used = 0;
      unsigned long long idx = 0;
      try {
        idx = std::stoull(key, &used);
      } catch (const std::exception&) {
        throw ParseError("bad weight index \"" + key + "\"");
      }
      if (used != key.size() || idx >= dim) throw SchemaError("weight index \"" + key + "\" out of range");
      w[idx] = value.get<double>();
      if (!std::isfinite(w[idx])) throw SchemaError("non-finite critic weight");
    }
    return model;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("critic file schema: ") + e.what());
  }
}

}  // namespace cdd
