#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cdd/vocabulary.hpp"

namespace cdd {

// Lowercased word-level split. Punctuation becomes separate tokens except a
// hyphen between word characters ("a-rosa"), a period or comma between digits
// ("125.8") and a run of '&' ("&&").
std::vector<std::string> split_words(std::string_view text);

// Adds unseen words to `vocab` unless it is frozen, in which case they map to
// <unk>.
TokenSequence tokenize(std::string_view text, Vocabulary& vocab);
// Never inserts; unknown words map to <unk>.
TokenSequence tokenize(std::string_view text, const Vocabulary& vocab);

// Space-joined words with closing punctuation attached to the previous word.
// Reserved tokens (<bos>, <eos>, ...) are dropped.
std::string detokenize(const TokenSequence& seq, const Vocabulary& vocab);
std::string join_words(const std::vector<std::string>& words);

}  // namespace cdd
