#include "cdd/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "cdd/errors.hpp"
#include "cdd/tokenizer.hpp"

namespace cdd {

namespace {

std::string regex_escape(const std::string& word) {
  static const std::string kSpecial = R"(\^$.|?*+()[]{}/-)";
  std::string out;
  for (char c : word) {
    if (kSpecial.find(c) != std::string::npos) out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  for (std::size_t pos = text.find(from); pos != std::string::npos;
       pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
  return text;
}

std::vector<std::string> make_names(std::mt19937_64& rng, std::size_t count,
                                    std::size_t words, std::set<std::string>& taken,
                                    const std::string& suffix = "") {
  static const char* const kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p",
                                        "r", "s", "t", "v", "z", "br", "dr", "kr", "st",
                                        "tr", "gl"};
  static const char* const kVowels[] = {"a", "e", "i", "o", "u", "ai", "ei", "ou"};
  std::uniform_int_distribution<std::size_t> onset(0, std::size(kOnsets) - 1);
  std::uniform_int_distribution<std::size_t> vowel(0, std::size(kVowels) - 1);
  std::uniform_int_distribution<int> syllables(2, 3);
  auto word = [&] {
    std::string w;
    for (int s = syllables(rng); s > 0; --s) w += std::string(kOnsets[onset(rng)]) + kVowels[vowel(rng)];
    return w;
  };
  std::vector<std::string> names;
  while (names.size() < count) {
    std::string name;
    for (std::size_t i = 0; i < words; ++i) name += (i ? " " : "") + word();
    name += suffix;
    if (taken.insert(name).second) names.push_back(name);
  }
  return names;
}

std::vector<std::string> numbers(std::mt19937_64& rng, std::size_t count, int lo, int hi,
                                 bool decimal, std::set<std::string>& taken) {
  std::uniform_int_distribution<int> dist(lo, hi);
  std::uniform_int_distribution<int> tenth(0, 9);
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string v = std::to_string(dist(rng));
    if (decimal) v += "." + std::to_string(tenth(rng));
    if (taken.insert(v).second) out.push_back(v);
  }
  return out;
}

}  // namespace

std::string inverse_from_template(const std::string& forward_template) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos < forward_template.size()) {
    const auto s = forward_template.find("{s}", pos);
    const auto o = forward_template.find("{o}", pos);
    const auto slot = std::min(s, o);
    for (const auto& w : split_words(forward_template.substr(pos, slot - pos))) {
      parts.push_back(regex_escape(w));
    }
    if (slot == std::string::npos) break;
    parts.push_back(slot == s ? "(.+?)" : "(.+)");
    pos = slot + 3;
  }
  std::string pattern = "^";
  for (std::size_t i = 0; i < parts.size(); ++i) pattern += (i ? " " : "") + parts[i];
  return pattern + "$";
}

std::string realize(const PredicateSpec& spec, const Triple& triple, bool pronoun) {
  std::string text = replace_all(spec.forward_template, "{o}", triple.object);
  if (pronoun && text.rfind("{s}", 0) == 0) return std::string(kPronoun) + text.substr(3);
  return replace_all(std::move(text), "{s}", triple.subject);
}

PredicateRegistry default_registry() {
  // Value pools come from a fixed seed so the registry is identical for every
  // world seed; only record sampling depends on WorldConfig::seed.
  std::mt19937_64 rng(20230701);
  std::set<std::string> taken;
  const auto people = make_names(rng, 30, 2, taken);
  const auto firms = make_names(rng, 20, 1, taken, " group");
  const auto places = make_names(rng, 15, 1, taken);
  const auto nations = make_names(rng, 15, 1, taken, "ia");
  const auto tongues = make_names(rng, 12, 1, taken, "ish");
  const auto engines = make_names(rng, 12, 1, taken, " diesel");
  const auto lengths = numbers(rng, 15, 50, 350, true, taken);
  const auto heights = numbers(rng, 15, 10, 500, true, taken);
  const auto capacities = numbers(rng, 15, 100, 90000, false, taken);

  auto third = [](const std::vector<std::string>& v, std::size_t part) {
    const auto n = v.size() / 3;
    const auto b = v.begin() + static_cast<std::ptrdiff_t>(part * n);
    return std::vector<std::string>(b, b + static_cast<std::ptrdiff_t>(n));
  };
  auto half = [&](const std::vector<std::string>& v, std::size_t part) {
    const auto n = v.size() / 2;
    const auto b = v.begin() + static_cast<std::ptrdiff_t>(part * n);
    return std::vector<std::string>(b, b + static_cast<std::ptrdiff_t>(n));
  };

  PredicateRegistry reg = {
      {"country", "{s} has the country {o}.", "", nations},
      {"city", "{s} has the city {o}.", "", places},
      {"leader", "{s} has the leader {o}.", "", third(people, 0)},
      {"architect", "{s} has the architect {o}.", "", third(people, 1)},
      {"founder", "{s} has the founder {o}.", "", third(people, 2)},
      {"length", "{s} has the length {o} metres.", "", lengths},
      {"height", "{s} has the height {o} metres.", "", heights},
      {"capacity", "{s} has the capacity {o} people.", "", capacities},
      {"owner", "{s} has the owner {o}.", "", half(firms, 0)},
      {"operator", "{s} has the operator {o}.", "", half(firms, 1)},
      {"language", "{s} has the language {o}.", "", tongues},
      {"engine", "{s} has the engine {o}.", "", engines},
  };
  for (auto& p : reg) p.inverse_pattern = inverse_from_template(p.forward_template);
  return reg;
}

const PredicateSpec* find_predicate(const PredicateRegistry& registry, const std::string& name) {
  for (const auto& p : registry) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

void validate(const WorldConfig& c) {
  if (c.predicates.empty()) throw ConfigError("predicate registry is empty");
  if (!(c.corruption_rate >= 0.0 && c.corruption_rate <= 1.0)) {
    throw ConfigError("corruption rate must lie in [0, 1]");
  }
  if (c.min_triples < 1 || c.max_triples < c.min_triples || c.max_triples > 7) {
    throw ConfigError("triples per record must satisfy 1 <= min <= max <= 7");
  }
  if (c.max_triples > c.predicates.size()) {
    throw ConfigError("max_triples exceeds the number of predicates");
  }
  if (c.refs_per_record < 1) throw ConfigError("refs_per_record must be >= 1");
  if (c.entity_count < 1) throw ConfigError("entity_count must be >= 1");
  std::set<std::string> names;
  for (const auto& p : c.predicates) {
    if (p.name.empty() || !names.insert(p.name).second) {
      throw ConfigError("predicate names must be non-empty and unique");
    }
    if (p.values.size() < 2) throw ConfigError("predicate " + p.name + " needs >= 2 values");
    const auto s = p.forward_template.find("{s}");
    const auto o = p.forward_template.find("{o}");
    if (s == std::string::npos || o == std::string::npos ||
        p.forward_template.find("{s}", s + 1) != std::string::npos ||
        p.forward_template.find("{o}", o + 1) != std::string::npos) {
      throw ConfigError("template of " + p.name + " needs exactly one {s} and one {o}");
    }
    if (p.inverse_pattern.empty()) throw ConfigError("predicate " + p.name + " lacks an inverse pattern");
    const auto words = split_words(p.forward_template);
    if (words.empty() || words.back() != "." ||
        std::count(words.begin(), words.end(), ".") != 1) {
      throw ConfigError("template of " + p.name + " must be one sentence ending in a period");
    }
  }
}

Corpus generate_world(const WorldConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  std::set<std::string> taken;
  for (const auto& p : config.predicates) taken.insert(p.values.begin(), p.values.end());
  // Entity names live in their own seeded stream, distinct from value pools.
  std::mt19937_64 name_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const auto entities = make_names(name_rng, config.entity_count, 2, taken);

  std::vector<std::discrete_distribution<std::size_t>> value_dist;
  for (const auto& p : config.predicates) {
    std::vector<double> w(p.values.size());
    for (std::size_t r = 0; r < w.size(); ++r) {
      w[r] = 1.0 / std::pow(static_cast<double>(r + 1), config.value_skew);
    }
    value_dist.emplace_back(w.begin(), w.end());
  }

  Corpus corpus;
  corpus.records.resize(config.record_count);
  std::uniform_int_distribution<std::size_t> entity(0, entities.size() - 1);
  std::uniform_int_distribution<std::size_t> n_triples(config.min_triples, config.max_triples);
  std::vector<std::size_t> pred_idx(config.predicates.size());
  // predicate index per triple, kept for the text-realization pass
  std::vector<std::vector<std::size_t>> record_preds(config.record_count);
  std::unordered_map<std::string, std::vector<std::pair<std::size_t, std::string>>> objects_of;

  for (std::size_t r = 0; r < config.record_count; ++r) {
    auto& rec = corpus.records[r];
    rec.id = static_cast<std::int64_t>(r);
    const auto& subject = entities[entity(rng)];
    std::iota(pred_idx.begin(), pred_idx.end(), 0);
    std::shuffle(pred_idx.begin(), pred_idx.end(), rng);
    const auto n = n_triples(rng);
    for (std::size_t t = 0; t < n; ++t) {
      const auto& spec = config.predicates[pred_idx[t]];
      const auto& value = spec.values[value_dist[pred_idx[t]](rng)];
      rec.triples.push_back({subject, spec.name, value});
      record_preds[r].push_back(pred_idx[t]);
      objects_of[spec.name].emplace_back(r, value);
    }
  }

  std::bernoulli_distribution corrupt(config.corruption_rate);
  for (std::size_t r = 0; r < config.record_count; ++r) {
    auto& rec = corpus.records[r];
    const auto n = rec.triples.size();
    rec.corrupted_refs.assign(config.refs_per_record, false);
    for (std::size_t k = 0; k < config.refs_per_record; ++k) {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<Triple> shown = rec.triples;
      if (corrupt(rng)) {
        const auto victim = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        const auto& spec = config.predicates[record_preds[r][victim]];
        const auto& pool = objects_of[spec.name];
        std::string swapped;
        for (int attempt = 0; attempt < 64 && swapped.empty(); ++attempt) {
          const auto& [owner, value] =
              pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
          if (owner != r && value != shown[victim].object) swapped = value;
        }
        while (swapped.empty() || swapped == shown[victim].object) {
          swapped = spec.values[std::uniform_int_distribution<std::size_t>(
              0, spec.values.size() - 1)(rng)];
        }
        shown[victim].object = swapped;
        rec.corrupted_refs[k] = true;
        rec.corrupted = true;
      }
      std::string text;
      for (std::size_t t : order) {
        const bool first = t == order.front();
        if (!text.empty()) text.push_back(' ');
        text += realize(config.predicates[record_preds[r][t]], shown[t], !first);
      }
      rec.refs.push_back(std::move(text));
    }
    if (!rec.corrupted) rec.corrupted_refs.clear();
  }

  corpus.vocab = build_vocabulary(corpus.records);
  return corpus;
}

}  // namespace cdd
