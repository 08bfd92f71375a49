#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "cdd/corpus.hpp"
#include "cdd/pipeline.hpp"

namespace cdd::testing {

inline DataRecord record(std::int64_t id, std::vector<Triple> triples, std::vector<std::string> refs) {
  DataRecord r;
  r.id = id;
  r.triples = std::move(triples);
  r.refs = std::move(refs);
  return r;
}

inline Corpus corpus_of(std::vector<DataRecord> records) {
  Corpus c;
  c.records = std::move(records);
  c.vocab = build_vocabulary(c.records);
  return c;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("cdd-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Small world used by most pipeline-level tests.
inline RunConfig small_config(std::uint64_t seed = 7) {
  RunConfig c;
  apply_seed(c, seed);
  c.world.record_count = 200;
  c.critic.epochs = 4;
  return c;
}

}  // namespace cdd::testing
