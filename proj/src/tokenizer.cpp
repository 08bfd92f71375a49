#include "cdd/tokenizer.hpp"

#include <cctype>

namespace cdd {

namespace {

bool is_word_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c >= 0x80;
}

bool is_digit(unsigned char c) { return std::isdigit(c) != 0; }

bool is_closing(const std::string& w) {
  return w == "." || w == "," || w == ";" || w == ":" || w == "!" || w == "?" ||
         w == ")";
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    std::string word;
    if (is_word_char(c)) {
      while (i < n) {
        const auto cur = static_cast<unsigned char>(text[i]);
        if (is_word_char(cur)) {
          word.push_back(static_cast<char>(std::tolower(cur)));
          ++i;
          continue;
        }
        // Internal joiners: a-rosa, 125.8, 1,000.
        if (i + 1 < n && !word.empty()) {
          const auto prev = static_cast<unsigned char>(text[i - 1]);
          const auto next = static_cast<unsigned char>(text[i + 1]);
          if (cur == '-' && is_word_char(prev) && is_word_char(next)) {
            word.push_back('-');
            ++i;
            continue;
          }
          if ((cur == '.' || cur == ',') && is_digit(prev) && is_digit(next)) {
            word.push_back(static_cast<char>(cur));
            ++i;
            continue;
          }
        }
        break;
      }
    } else if (c == '&') {
      while (i < n && text[i] == '&') word.push_back(text[i++]);
    } else {
      word.push_back(static_cast<char>(c));
      ++i;
    }
    words.push_back(std::move(word));
  }
  return words;
}

TokenSequence tokenize(std::string_view text, Vocabulary& vocab) {
  TokenSequence seq;
  for (const auto& w : split_words(text)) seq.push_back(vocab.add(w));
  return seq;
}

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenSequence seq;
  for (const auto& w : split_words(text)) seq.push_back(vocab.id(w));
  return seq;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty() && !is_closing(w)) out.push_back(' ');
    out += w;
  }
  return out;
}

std::string detokenize(const TokenSequence& seq, const Vocabulary& vocab) {
  std::vector<std::string> words;
  words.reserve(seq.size());
  for (TokenId id : seq) {
    if (id < kNumReserved) continue;
    words.push_back(vocab.token(id));
  }
  return join_words(words);
}

}  // namespace cdd
