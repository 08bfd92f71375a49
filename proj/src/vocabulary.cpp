#include "cdd/vocabulary.hpp"

#include <fstream>

#include "cdd/errors.hpp"

namespace cdd {

namespace {
const char* const kReserved[] = {"<bos>", "<eos>", "<unk>", "<sep>"};
}

Vocabulary::Vocabulary() {
  for (const char* t : kReserved) {
    ids_.emplace(t, static_cast<TokenId>(tokens_.size()));
    tokens_.emplace_back(t);
  }
}

TokenId Vocabulary::add(std::string_view token) {
  auto it = ids_.find(std::string(token));
  if (it != ids_.end()) return it->second;
  if (frozen_) return kUnk;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  return id;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return ids_.count(std::string(token)) > 0;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (!valid(id)) throw InputError("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  Vocabulary vocab;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (n <= static_cast<std::size_t>(kNumReserved)) {
      if (line != kReserved[n - 1]) {
        throw SchemaError("expected reserved token " + std::string(kReserved[n - 1]), n);
      }
      continue;
    }
    if (line.empty() || vocab.contains(line)) {
      throw SchemaError("empty or duplicate token", n);
    }
    vocab.add(line);
  }
  if (n < static_cast<std::size_t>(kNumReserved)) {
    throw SchemaError("vocabulary file lacks reserved tokens");
  }
  vocab.freeze();
  return vocab;
}

}  // namespace cdd
