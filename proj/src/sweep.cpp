#include "cdd/sweep.hpp"

#include <cstdio>

#include "cdd/errors.hpp"
#include "cdd/metrics.hpp"
#include "cdd/parallel.hpp"
#include "cdd/tokenizer.hpp"

namespace cdd {

DecodedOutputs decode_records(const GeneratorModel& generator, const CriticModel* critic,
                              const std::vector<DataRecord>& records, const DecodeConfig& config,
                              std::size_t jobs) {
  DecodedOutputs out;
  out.tokens.resize(records.size());
  out.texts.resize(records.size());
  std::vector<std::size_t> calls(records.size(), 0);
  const CriticFn fn = critic ? critic_fn(*critic) : CriticFn();
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const auto data = linearize(records[i], generator.vocab());
    auto r = decode(generator, critic ? &fn : nullptr, data, config);
    out.texts[i] = detokenize(r.tokens, generator.vocab());
    out.tokens[i] = std::move(r.tokens);
    calls[i] = r.critic_calls;
  });
  for (auto c : calls) out.critic_calls += c;
  return out;
}

const char* mode_name(DecodeMode mode) { return mode == DecodeMode::kGreedy ? "greedy" : "beam"; }

DecodeMode parse_mode(const std::string& name) {
  if (name == "greedy") return DecodeMode::kGreedy;
  if (name == "beam") return DecodeMode::kBeam;
  throw ConfigError("unknown decoding mode \"" + name + "\"");
}

SweepRow score_outputs(const std::vector<std::string>& outputs,
                       const std::vector<std::string>& baseline,
                       const std::vector<DataRecord>& records, const FactExtractor& extractor) {
  SweepRow row;
  std::vector<std::vector<std::string>> refs;
  refs.reserve(records.size());
  for (const auto& r : records) refs.push_back(r.refs);
  row.bleu = bleu(outputs, refs);
  const auto report = faithfulness_report(outputs, records, extractor);
  row.halluc_rate = report.all.halluc_rate;
  row.omission_rate = report.all.omission_rate;
  const auto diff = diff_stats(baseline, outputs);
  row.modified_pct = 100.0 * diff.modified;
  row.words_added = diff.words_added;
  row.words_removed = diff.words_removed;
  return row;
}

std::vector<SweepRow> sweep(const std::vector<DataRecord>& records, const GeneratorModel& generator,
                            const std::vector<NamedCritic>& critics, const SweepGrid& grid,
                            const DecodeConfig& base, const FactExtractor& extractor,
                            std::size_t jobs) {
  if (grid.lambdas.empty() || grid.warmup.empty() || grid.ks.empty() || grid.modes.empty()) {
    throw ConfigError("sweep grid has an empty axis");
  }
  auto config_for = [&](double lambda, bool warm, std::size_t k, DecodeMode mode) {
    DecodeConfig c = base;
    c.lambda = lambda;
    c.warmup = warm ? grid.warmup_length : 0;
    c.k = k;
    c.mode = mode;
    c.beam = mode == DecodeMode::kBeam ? grid.beam : 1;
    return c;
  };

  std::vector<SweepRow> rows;
  std::vector<std::vector<std::string>> baselines;
  for (DecodeMode mode : grid.modes) {
    const auto outputs =
        decode_records(generator, nullptr, records, config_for(0.0, false, base.k, mode), jobs).texts;
    auto row = score_outputs(outputs, outputs, records, extractor);
    row.lambda = 0.0;
    row.warmup = false;
    row.k = base.k;
    row.mode = mode;
    row.critic_variant = "none";
    rows.push_back(row);
    baselines.push_back(outputs);
  }
  for (const auto& [name, critic] : critics) {
    for (double lambda : grid.lambdas) {
      for (bool warm : grid.warmup) {
        for (std::size_t k : grid.ks) {
          for (std::size_t m = 0; m < grid.modes.size(); ++m) {
            const auto config = config_for(lambda, warm, k, grid.modes[m]);
            const auto outputs = decode_records(generator, critic, records, config, jobs).texts;
            auto row = score_outputs(outputs, baselines[m], records, extractor);
            row.lambda = lambda;
            row.warmup = warm;
            row.k = k;
            row.mode = grid.modes[m];
            row.critic_variant = name;
            rows.push_back(row);
          }
        }
      }
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "lambda,warmup,k,mode,critic_variant,bleu,halluc_rate,omission_rate,modified_pct,"
      "words_added,words_removed\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.4f,%d,%zu,%s,%s,%.4f,%.4f,%.4f,%.2f,%.4f,%.4f\n", r.lambda,
                  r.warmup ? 1 : 0, r.k, mode_name(r.mode), r.critic_variant.c_str(), r.bleu,
                  r.halluc_rate, r.omission_rate, r.modified_pct, r.words_added, r.words_removed);
    out += buf;
  }
  return out;
}

}  // namespace cdd
