#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdd/corpus.hpp"

namespace cdd {

// A predicate with its one-sentence surface form. `forward_template` contains
// the slots {s} and {o}; `inverse_pattern` is an ECMAScript regex over the
// normalized sentence (lowercase words joined by single spaces) with the
// subject and object as capture groups 1 and 2.
struct PredicateSpec {
  std::string name;
  std::string forward_template;
  std::string inverse_pattern;
  std::vector<std::string> values;  // object pool used by the generator
};

// Escapes the template literals and turns {s}/{o} into capture groups.
std::string inverse_from_template(const std::string& forward_template);

// Subject word used by every sentence after the first one of a reference.
inline constexpr const char* kPronoun = "It";

// Renders one triple with its predicate's forward template. With `pronoun`,
// a sentence-initial subject slot is rendered as kPronoun.
std::string realize(const PredicateSpec& spec, const Triple& triple, bool pronoun = false);

using PredicateRegistry = std::vector<PredicateSpec>;

// The built-in registry of the synthetic world.
PredicateRegistry default_registry();

const PredicateSpec* find_predicate(const PredicateRegistry& registry,
                                    const std::string& name);

struct WorldConfig {
  std::size_t record_count = 1000;
  std::size_t entity_count = 60;
  PredicateRegistry predicates = default_registry();
  std::size_t min_triples = 1;
  std::size_t max_triples = 4;
  std::size_t refs_per_record = 2;
  // Object values are drawn with weight 1 / rank^skew from each predicate pool.
  double value_skew = 0.5;
  double corruption_rate = 0.0;
  std::uint64_t seed = 7;
};

void validate(const WorldConfig& config);

// Deterministic given config.seed. Each reference realizes the record's
// triples in a seeded random order, naming the subject in the first sentence
// and using kPronoun afterwards. With probability corruption_rate per
// reference, one object mention in the text is replaced by a different object
// of the same predicate taken from another record; the triples stay clean and
// the record is flagged corrupted.
Corpus generate_world(const WorldConfig& config);

}  // namespace cdd
