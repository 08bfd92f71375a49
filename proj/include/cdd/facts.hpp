#pragma once

#include <regex>
#include <set>
#include <string>
#include <vector>

#include "cdd/corpus.hpp"
#include "cdd/world.hpp"

namespace cdd {

struct ExtractedFacts {
  std::set<Triple> facts;
  std::size_t sentences = 0;
  std::size_t unparsable = 0;  // sentences no inverse pattern matched
};

// Template-inverse fact oracle. Compiles every inverse pattern once.
class FactExtractor {
 public:
  explicit FactExtractor(const PredicateRegistry& registry);

  // Splits `text` into sentences on period tokens and matches each sentence
  // against every inverse pattern; each match yields one triple. A kPronoun
  // subject resolves to the most recent named subject.
  ExtractedFacts extract(const std::string& text) const;

 private:
  struct Pattern {
    std::string predicate;
    std::regex re;
  };
  std::vector<Pattern> patterns_;
};

// Subject and object in the extractor's surface form: lowercased words
// joined by single spaces.
Triple normalize_fact(const Triple& triple);

std::set<Triple> extract_facts(const std::string& text, const PredicateRegistry& registry);

}  // namespace cdd
