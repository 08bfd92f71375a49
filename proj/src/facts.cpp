#include "cdd/facts.hpp"

#include "cdd/tokenizer.hpp"

namespace cdd {

FactExtractor::FactExtractor(const PredicateRegistry& registry) {
  for (const auto& p : registry) {
    patterns_.push_back({p.name, std::regex(p.inverse_pattern, std::regex::ECMAScript |
                                                                   std::regex::optimize)});
  }
}

ExtractedFacts FactExtractor::extract(const std::string& text) const {
  ExtractedFacts out;
  const auto words = split_words(text);
  const auto pronoun = split_words(kPronoun).front();
  std::string antecedent;
  std::string sentence;
  auto flush = [&] {
    if (sentence.empty()) return;
    sentence += " .";
    ++out.sentences;
    bool matched = false;
    std::smatch m;
    for (const auto& p : patterns_) {
      if (std::regex_match(sentence, m, p.re)) {
        std::string subject = m[1].str();
        if (subject == pronoun) {
          // Resolves to the closest preceding named subject, if any.
          if (!antecedent.empty()) subject = antecedent;
        } else {
          antecedent = subject;
        }
        out.facts.insert({subject, p.predicate, m[2].str()});
        matched = true;
      }
    }
    if (!matched) ++out.unparsable;
    sentence.clear();
  };
  for (const auto& w : words) {
    if (w == ".") {
      flush();
    } else {
      if (!sentence.empty()) sentence.push_back(' ');
      sentence += w;
    }
  }
  // A trailing fragment without a period is still a sentence attempt; it
  // cannot match since every pattern ends in a period.
  if (!sentence.empty()) {
    ++out.sentences;
    ++out.unparsable;
  }
  return out;
}

Triple normalize_fact(const Triple& triple) {
  auto spaced = [](const std::string& text) {
    std::string out;
    for (const auto& w : split_words(text)) out += (out.empty() ? "" : " ") + w;
    return out;
  };
  return {spaced(triple.subject), triple.predicate, spaced(triple.object)};
}

std::set<Triple> extract_facts(const std::string& text, const PredicateRegistry& registry) {
  return FactExtractor(registry).extract(text).facts;
}

}  // namespace cdd
