#include "cdd/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cdd/errors.hpp"

namespace cdd {

void validate(const DecodeConfig& c, std::size_t vocab_size) {
  if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) throw ConfigError("lambda must be >= 0");
  if (c.warmup < 0) throw ConfigError("warmup must be >= 0");
  if (c.k < 1 || c.k > vocab_size) throw ConfigError("k must lie in [1, vocabulary size]");
  if (c.max_length < 1) throw ConfigError("max length must be >= 1");
  if (c.beam < 1) throw ConfigError("beam size must be >= 1");
}

CriticFn critic_fn(const CriticModel& model) {
  return [&model](const TokenSequence& data, const TokenSequence& prefix) {
    return model.prob(data, prefix);
  };
}

double effective_lambda(std::size_t i, const DecodeConfig& config) {
  if (i < 1) throw InputError("token index is 1-based");
  if (config.warmup == 0) return config.lambda;
  const double ramp = std::min(static_cast<double>(i) / config.warmup, 1.0);
  return ramp * config.lambda;
}

std::vector<double> combine_scores(const TokenDistribution& lm,
                                   const std::vector<std::pair<TokenId, double>>& critic_probs,
                                   double lambda_i, bool restrict_to_candidates) {
  std::vector<char> scored(lm.size(), 0);
  double worst_scored = std::numeric_limits<double>::infinity();
  for (const auto& [t, p] : critic_probs) {
    if (t < 0 || static_cast<std::size_t>(t) >= lm.size()) throw InputError("critic key outside the vocabulary");
    if (!(p > 0.0 && p <= 1.0)) throw InputError("critic probability must lie in (0, 1]");
    scored[static_cast<std::size_t>(t)] = 1;
    worst_scored = std::min(worst_scored, lm[static_cast<std::size_t>(t)]);
  }
  std::vector<double> scores(lm.size());
  for (std::size_t t = 0; t < lm.size(); ++t) {
    if (!scored[t] && lm[t] > worst_scored) {
      throw InputError("critic keys must be the most probable tokens under the LM");
    }
    scores[t] = (restrict_to_candidates && !scored[t]) ? -std::numeric_limits<double>::infinity()
                                                       : lm[t];
  }
  for (const auto& [t, p] : critic_probs) {
    scores[static_cast<std::size_t>(t)] += lambda_i * std::log(p);
  }
  return scores;
}

TokenDistribution normalize_combined(const std::vector<double>& scores) {
  if (scores.empty()) return {};
  const double top = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - top);
  const double log_z = top + std::log(z);
  TokenDistribution out(scores.size());
  for (std::size_t t = 0; t < scores.size(); ++t) out[t] = std::exp(scores[t] - log_z);
  return out;
}

namespace {

struct Expansion {
  TokenDistribution lm;
  TokenSequence candidates;  // top-k, best first
  std::vector<std::pair<TokenId, double>> critic_probs;
  double lambda_i = 0.0;
  std::vector<double> scores;
};

Expansion expand(const GeneratorModel& generator, const CriticFn* critic, const TokenSequence& data,
                 const TokenSequence& prefix, const DecodeConfig& config, std::size_t& calls) {
  Expansion e;
  e.lm = generator.next_token_logprobs(&data, prefix);
  e.candidates = top_k(e.lm, config.k);
  if (critic != nullptr) {
    e.lambda_i = effective_lambda(prefix.size() + 1, config);
    TokenSequence extended = prefix;
    extended.push_back(kBos);
    for (TokenId t : e.candidates) {
      extended.back() = t;
      e.critic_probs.emplace_back(t, (*critic)(data, extended));
      ++calls;
    }
  }
  e.scores = combine_scores(e.lm, e.critic_probs, e.lambda_i, config.restrict_to_topk && critic != nullptr);
  return e;
}

TokenId argmax(const std::vector<double>& scores) {
  TokenId best = 0;
  for (std::size_t t = 1; t < scores.size(); ++t) {
    if (scores[t] > scores[static_cast<std::size_t>(best)]) best = static_cast<TokenId>(t);
  }
  return best;
}

}  // namespace

DecodeResult greedy_decode(const GeneratorModel& generator, const CriticFn* critic,
                           const TokenSequence& data, const DecodeConfig& config) {
  validate(config, generator.vocab_size());
  DecodeResult result;
  while (result.tokens.size() < config.max_length) {
    const auto e = expand(generator, critic, data, result.tokens, config, result.critic_calls);
    const TokenId chosen = argmax(e.scores);

    DecodeStep step;
    step.i = result.tokens.size() + 1;
    step.lambda_i = e.lambda_i;
    step.chosen = chosen;
    for (std::size_t j = 0; j < e.candidates.size(); ++j) {
      const auto t = static_cast<std::size_t>(e.candidates[j]);
      StepCandidate c{e.candidates[j], e.lm[t], std::nullopt, e.scores[t]};
      if (critic != nullptr) c.critic_prob = e.critic_probs[j].second;
      step.topk.push_back(c);
    }
    result.trace.push_back(std::move(step));

    result.score += e.scores[static_cast<std::size_t>(chosen)];
    result.lm_logprob += e.lm[static_cast<std::size_t>(chosen)];
    result.tokens.push_back(chosen);
    if (chosen == kEos) break;
  }
  return result;
}

namespace {

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

}  // namespace

BeamResult beam_decode(const GeneratorModel& generator, const CriticFn* critic,
                       const TokenSequence& data, const DecodeConfig& config) {
  validate(config, generator.vocab_size());
  BeamResult result;
  std::vector<Hypothesis> beam(1);
  // Tokens outside the top-k keep their LM score, so the best `beam` of them
  // (LM ranks k+1 .. k+beam) are the only ones that can enter the next beam.
  const std::size_t width =
      config.restrict_to_topk && critic != nullptr ? config.k : std::min(config.k + config.beam, generator.vocab_size());

  while (true) {
    std::vector<Hypothesis> pool;
    bool any_live = false;
    for (const auto& h : beam) {
      if (h.finished) {
        pool.push_back(h);
        continue;
      }
      any_live = true;
      const auto e = expand(generator, critic, data, h.tokens, config, result.critic_calls);
      const auto candidates = width == config.k ? e.candidates : top_k(e.lm, width);
      for (TokenId t : candidates) {
        const auto ti = static_cast<std::size_t>(t);
        if (std::isinf(e.scores[ti]) && e.scores[ti] < 0) continue;
        Hypothesis next = h;
        next.tokens.push_back(t);
        next.score += e.scores[ti];
        next.lm_logprob += e.lm[ti];
        next.finished = t == kEos || next.tokens.size() >= config.max_length;
        pool.push_back(std::move(next));
      }
    }
    if (!any_live) break;
    const auto keep = std::min(config.beam, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(), better);
    pool.resize(keep);
    beam = std::move(pool);
  }
  result.beam = beam;
  result.best = beam.front();
  return result;
}

DecodeResult decode(const GeneratorModel& generator, const CriticFn* critic,
                    const TokenSequence& data, const DecodeConfig& config) {
  if (config.mode == DecodeMode::kGreedy) return greedy_decode(generator, critic, data, config);
  auto beam = beam_decode(generator, critic, data, config);
  DecodeResult r;
  r.tokens = std::move(beam.best.tokens);
  r.score = beam.best.score;
  r.lm_logprob = beam.best.lm_logprob;
  r.critic_calls = beam.critic_calls;
  return r;
}

std::string trace_jsonl(const std::vector<DecodeStep>& trace) {
  std::ostringstream out;
  for (const auto& step : trace) {
    nlohmann::json topk = nlohmann::json::array();
    for (const auto& c : step.topk) {
      topk.push_back({{"id", c.id},
                      {"lm_lp", c.lm_logprob},
                      {"critic_p", c.critic_prob ? nlohmann::json(*c.critic_prob) : nlohmann::json()},
                      {"score", c.score}});
    }
    nlohmann::json line = {{"i", step.i}, {"lambda_i", step.lambda_i}, {"topk", topk}, {"chosen", step.chosen}};
    out << line.dump() << '\n';
  }
  return out.str();
}

}  // namespace cdd
