#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdd/errors.hpp"
#include "cdd/metrics.hpp"
#include "cdd/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<int> warmup;
  std::optional<std::size_t> k;
  std::optional<std::size_t> beam;
  std::optional<std::string> critic;
  bool no_critic = false;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
  std::optional<std::string> corpus;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "JSON run config");
  cmd->add_option("--seed", f.seed, "global seed");
  cmd->add_option("--lambda", f.lambda, "critic weight");
  cmd->add_option("--warmup", f.warmup, "warmup length W (0 = off)");
  cmd->add_option("--k", f.k, "critic-scored candidates per step");
  cmd->add_option("--beam", f.beam, "beam size (1 = greedy)");
  cmd->add_option("--critic", f.critic, "base, base-full, vanilla-lm, ft-lm, ft-lm-full or none");
  cmd->add_flag("--no-critic", f.no_critic, "same as --critic none");
  cmd->add_option("--jobs", f.jobs, "worker threads");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--corpus", f.corpus, "corpus JSONL to use instead of generating one");
}

cdd::RunConfig resolve(const Flags& f, bool reuse_corpus) {
  cdd::RunConfig c;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw cdd::ConfigError("cannot read config " + f.config_path);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw cdd::ParseError(std::string("config: ") + e.what());
    }
    cdd::merge_json(c, doc);
  }
  if (f.seed) cdd::apply_seed(c, *f.seed);
  if (f.lambda) c.decode.lambda = *f.lambda;
  if (f.warmup) c.decode.warmup = *f.warmup;
  if (f.k) c.decode.k = *f.k;
  if (f.beam) {
    c.decode.beam = *f.beam;
    c.decode.mode = *f.beam > 1 ? cdd::DecodeMode::kBeam : cdd::DecodeMode::kGreedy;
  }
  if (f.critic) c.critic_variant = *f.critic;
  if (f.no_critic) c.critic_variant = "none";
  if (c.critic_variant != "none") c.critic_variant = cdd::variant_name(cdd::parse_variant(c.critic_variant));
  if (f.jobs) c.jobs = *f.jobs;
  if (f.out) c.out_dir = *f.out;
  if (f.corpus) c.corpus_path = *f.corpus;
  // Later stages pick up the corpus written by gen-corpus.
  if (reuse_corpus && c.corpus_path.empty() && fs::exists(fs::path(c.out_dir) / "corpus.jsonl")) {
    c.corpus_path = (fs::path(c.out_dir) / "corpus.jsonl").string();
  }
  if (c.jobs == 0) throw cdd::ConfigError("--jobs must be >= 1");
  return c;
}

fs::path out_dir(const cdd::RunConfig& c) {
  fs::create_directories(c.out_dir);
  return c.out_dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cdd::Error("cannot write " + path.string());
  out << text;
}

// Reuses lm.json / critic-<variant>.json from the output directory when present.
void load_artifacts(cdd::Experiment& exp, const std::string& variant) {
  const fs::path dir = exp.config().out_dir;
  if (fs::exists(dir / "lm.json")) {
    auto vocab = std::make_shared<const cdd::Vocabulary>(exp.corpus().vocab);
    exp.set_lm(cdd::load_lm((dir / "lm.json").string(), vocab));
  }
  if (variant != "none") {
    const auto path = dir / ("critic-" + cdd::file_variant_name(variant) + ".json");
    if (fs::exists(path)) exp.set_critic(cdd::parse_variant(variant), cdd::load_critic(path.string()));
  }
}

int cmd_gen_corpus(const cdd::RunConfig& c) {
  cdd::Experiment exp(c);
  const auto dir = out_dir(c);
  cdd::save_jsonl(exp.corpus(), (dir / "corpus.jsonl").string());
  exp.corpus().vocab.save((dir / "vocab.txt").string());
  std::cout << "records " << exp.corpus().records.size() << " vocab " << exp.corpus().vocab.size() << "\n";
  return 0;
}

int cmd_train_lm(const cdd::RunConfig& c) {
  cdd::Experiment exp(c);
  const auto dir = out_dir(c);
  cdd::save_lm(exp.lm(), (dir / "lm.json").string());
  std::cout << "trained on " << exp.split().train.records.size() << " records\n";
  return 0;
}

int cmd_build_negatives(const cdd::RunConfig& c) {
  if (c.critic_variant == "none") throw cdd::ConfigError("build-negatives needs a critic variant");
  cdd::Experiment exp(c);
  load_artifacts(exp, "none");
  const auto dir = out_dir(c);
  const auto variant = cdd::parse_variant(c.critic_variant);
  const auto pos = exp.positives("train");
  const auto neg = exp.negatives(variant, "train");
  cdd::save_examples(pos, (dir / "positives.jsonl").string());
  cdd::save_examples(neg, (dir / ("negatives-" + cdd::file_variant_name(c.critic_variant) + ".jsonl")).string());
  std::cout << "positives " << pos.size() << " negatives " << neg.size() << "\n";
  return 0;
}

int cmd_train_critic(const cdd::RunConfig& c) {
  if (c.critic_variant == "none") throw cdd::ConfigError("train-critic needs a critic variant");
  cdd::Experiment exp(c);
  load_artifacts(exp, "none");
  const auto dir = out_dir(c);
  const auto variant = cdd::parse_variant(c.critic_variant);
  const auto& trained = exp.critic_training(variant);
  cdd::save_critic(trained.model, (dir / ("critic-" + cdd::file_variant_name(c.critic_variant) + ".json")).string());
  const auto ev = exp.evaluate(variant);
  std::cout << "positives " << trained.positives << " negatives " << trained.negatives
            << " val_accuracy " << ev.accuracy << " val_f1 " << ev.f1 << "\n";
  return 0;
}

int cmd_decode(const cdd::RunConfig& c, std::optional<std::int64_t> trace_id) {
  cdd::Experiment exp(c);
  load_artifacts(exp, c.critic_variant);
  const auto dir = out_dir(c);
  const auto& records = exp.test_records();
  const cdd::CriticModel* critic =
      c.critic_variant == "none" ? nullptr : &exp.critic(cdd::parse_variant(c.critic_variant));
  const auto decoded = cdd::decode_records(exp.lm(), critic, records, c.decode, c.jobs);
  const auto name = cdd::file_variant_name(c.critic_variant);
  cdd::save_outputs(records, decoded, (dir / ("outputs-" + name + ".jsonl")).string());
  if (trace_id) {
    const auto& all = exp.corpus().records;
    auto it = std::find_if(all.begin(), all.end(), [&](const cdd::DataRecord& r) { return r.id == *trace_id; });
    if (it == all.end()) throw cdd::InputError("no record with id " + std::to_string(*trace_id));
    const auto data = cdd::linearize(*it, exp.lm().vocab());
    std::optional<cdd::CriticFn> fn;
    if (critic) fn = cdd::critic_fn(*critic);
    const auto result = cdd::decode(exp.lm(), fn ? &*fn : nullptr, data, c.decode);
    write_text(dir / ("trace-" + name + "-" + std::to_string(*trace_id) + ".jsonl"), cdd::trace_jsonl(result.trace));
  }
  std::cout << "decoded " << records.size() << " records, critic calls " << decoded.critic_calls << "\n";
  return 0;
}

int cmd_evaluate(const cdd::RunConfig& c) {
  cdd::Experiment exp(c);
  const fs::path dir = c.out_dir;
  const auto& records = exp.test_records();
  const auto name = cdd::file_variant_name(c.critic_variant);
  const auto texts = cdd::load_output_texts((dir / ("outputs-" + name + ".jsonl")).string());
  if (texts.size() != records.size()) {
    throw cdd::InputError("outputs-" + name + ".jsonl has " + std::to_string(texts.size()) +
                          " lines, test split has " + std::to_string(records.size()));
  }
  const auto baseline_path = dir / "outputs-none.jsonl";
  const auto baseline = fs::exists(baseline_path) ? cdd::load_output_texts(baseline_path.string()) : texts;
  if (baseline.size() != texts.size()) throw cdd::InputError("outputs-none.jsonl does not match the test split");
  std::vector<std::vector<std::string>> refs;
  for (const auto& r : records) refs.push_back(r.refs);
  const auto faith = cdd::faithfulness_report(texts, records, exp.extractor(), c.held_out_predicates);
  json doc = {{"variant", c.critic_variant},
              {"bleu", cdd::bleu(texts, refs)},
              {"faithfulness", json::parse(cdd::to_json(faith))},
              {"diff_vs_baseline", json::parse(cdd::to_json(cdd::diff_stats(baseline, texts)))}};
  write_text(dir / ("report-" + name + ".json"), doc.dump(2) + "\n");
  std::cout << "bleu " << doc["bleu"].get<double>() << " halluc_rate " << faith.all.halluc_rate
            << " omission_rate " << faith.all.omission_rate << "\n";
  return 0;
}

int cmd_sweep(const cdd::RunConfig& c) {
  cdd::Experiment exp(c);
  load_artifacts(exp, "none");
  const auto dir = out_dir(c);
  std::vector<cdd::NamedCritic> critics;
  for (const auto& name : c.sweep_critics) {
    const auto v = cdd::parse_variant(name);
    load_artifacts(exp, cdd::variant_name(v));
    critics.emplace_back(cdd::variant_name(v), &exp.critic(v));
  }
  const auto rows = cdd::sweep(exp.test_records(), exp.lm(), critics, c.sweep, c.decode, exp.extractor(), c.jobs);
  const auto csv = cdd::sweep_csv(rows);
  write_text(dir / "sweep.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_repro(const cdd::RunConfig& c) {
  const auto result = cdd::repro(c);
  std::cout << cdd::sweep_csv(result.rows);
  for (const auto& [v, ev] : result.critic_eval) {
    std::cout << "critic " << cdd::variant_name(v) << " val_accuracy " << ev.accuracy << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critic-driven decoding for data-to-text generation"};
  app.require_subcommand(1);
  Flags flags;
  std::optional<std::int64_t> trace_id;
  std::string variant;

  auto* gen = app.add_subcommand("gen-corpus", "generate the synthetic corpus");
  auto* train_lm = app.add_subcommand("train-lm", "train the data-conditioned trigram LM");
  auto* negs = app.add_subcommand("build-negatives", "write positives and one negative set");
  auto* train_critic = app.add_subcommand("train-critic", "train one critic variant");
  auto* dec = app.add_subcommand("decode", "decode the test split");
  auto* eval = app.add_subcommand("evaluate", "score decoded outputs");
  auto* sw = app.add_subcommand("sweep", "decode and score a parameter grid");
  auto* rep = app.add_subcommand("repro", "run the whole pipeline");
  for (auto* cmd : {gen, train_lm, negs, train_critic, dec, eval, sw, rep}) add_common(cmd, flags);
  negs->add_option("--variant", variant, "negative-sampling variant (alias of --critic)");
  dec->add_option("--trace-id", trace_id, "also write the step trace of this record");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!variant.empty()) flags.critic = variant;
    // gen-corpus and repro always start from the world generator unless
    // --corpus is given.
    const auto config = resolve(flags, !*gen && !*rep);
    if (*gen) return cmd_gen_corpus(config);
    if (*train_lm) return cmd_train_lm(config);
    if (*negs) return cmd_build_negatives(config);
    if (*train_critic) return cmd_train_critic(config);
    if (*dec) return cmd_decode(config, trace_id);
    if (*eval) return cmd_evaluate(config);
    if (*sw) return cmd_sweep(config);
    if (*rep) return cmd_repro(config);
  } catch (const cdd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
