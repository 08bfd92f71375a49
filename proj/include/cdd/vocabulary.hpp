#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cdd {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;

inline constexpr TokenId kBos = 0;
inline constexpr TokenId kEos = 1;
inline constexpr TokenId kUnk = 2;
inline constexpr TokenId kSep = 3;
inline constexpr TokenId kNumReserved = 4;

// Bijective token <-> id map. Ids 0..3 are <bos>, <eos>, <unk>, <sep>.
class Vocabulary {
 public:
  Vocabulary();

  // Returns the id of `token`, inserting it when the vocabulary is not frozen.
  // A frozen vocabulary maps unknown tokens to kUnk.
  TokenId add(std::string_view token);
  TokenId id(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;

  std::size_t size() const { return tokens_.size(); }
  bool valid(TokenId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < tokens_.size();
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  const std::vector<std::string>& tokens() const { return tokens_; }

  // Plain text, one token per line, line number = id.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  bool frozen_ = false;
};

}  // namespace cdd
