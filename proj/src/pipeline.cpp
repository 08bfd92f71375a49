#include "cdd/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include "cdd/errors.hpp"
#include "cdd/metrics.hpp"

namespace cdd {

using nlohmann::json;
namespace fs = std::filesystem;

RunConfig::RunConfig() { world.corruption_rate = 0.15; }

void apply_seed(RunConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.world.seed = seed;
  config.critic.shuffle_seed = seed;
}

json to_json(const RunConfig& c) {
  json modes = json::array();
  for (auto m : c.sweep.modes) modes.push_back(mode_name(m));
  return {
      {"out_dir", c.out_dir},
      {"corpus_path", c.corpus_path},
      {"seed", c.seed},
      {"world",
       {{"record_count", c.world.record_count},
        {"entity_count", c.world.entity_count},
        {"min_triples", c.world.min_triples},
        {"max_triples", c.world.max_triples},
        {"refs_per_record", c.world.refs_per_record},
        {"value_skew", c.world.value_skew},
        {"corruption_rate", c.world.corruption_rate}}},
      {"split",
       {{"train", c.fractions.train},
        {"val", c.fractions.val},
        {"test", c.fractions.test},
        {"held_out_predicates", c.held_out_predicates}}},
      {"lm",
       {{"alpha", c.lm.alpha},
        {"order_weights", c.lm.order_weights},
        {"mu", c.lm.mu},
        {"copy_coverage", c.lm.copy_coverage}}},
      {"critic",
       {{"epochs", c.critic.epochs},
        {"learning_rate", c.critic.learning_rate},
        {"l2", c.critic.l2},
        {"neg_pos_ratio", c.critic.neg_pos_ratio},
        {"dim_bits", c.critic.dim_bits},
        {"hash_seed", c.critic.hash_seed}}},
      {"decode",
       {{"lambda", c.decode.lambda},
        {"warmup", c.decode.warmup},
        {"k", c.decode.k},
        {"max_length", c.decode.max_length},
        {"beam", c.decode.beam},
        {"mode", mode_name(c.decode.mode)},
        {"restrict_to_topk", c.decode.restrict_to_topk}}},
      {"critic_variant", c.critic_variant},
      {"sweep",
       {{"lambdas", c.sweep.lambdas},
        {"warmup", c.sweep.warmup},
        {"ks", c.sweep.ks},
        {"modes", modes},
        {"warmup_length", c.sweep.warmup_length},
        {"beam", c.sweep.beam},
        {"critics", c.sweep_critics}}},
      {"jobs", c.jobs},
  };
}

namespace {

template <typename T>
void take(const json& obj, const char* key, T& dst) {
  auto it = obj.find(key);
  if (it != obj.end()) dst = it->get<T>();
}

}  // namespace

void merge_json(RunConfig& c, const json& doc) {
  if (!doc.is_object()) throw SchemaError("config must be a JSON object");
  try {
    take(doc, "out_dir", c.out_dir);
    take(doc, "corpus_path", c.corpus_path);
    if (doc.contains("seed")) apply_seed(c, doc.at("seed").get<std::uint64_t>());
    if (auto it = doc.find("world"); it != doc.end()) {
      take(*it, "record_count", c.world.record_count);
      take(*it, "entity_count", c.world.entity_count);
      take(*it, "min_triples", c.world.min_triples);
      take(*it, "max_triples", c.world.max_triples);
      take(*it, "refs_per_record", c.world.refs_per_record);
      take(*it, "value_skew", c.world.value_skew);
      take(*it, "corruption_rate", c.world.corruption_rate);
    }
    if (auto it = doc.find("split"); it != doc.end()) {
      take(*it, "train", c.fractions.train);
      take(*it, "val", c.fractions.val);
      take(*it, "test", c.fractions.test);
      take(*it, "held_out_predicates", c.held_out_predicates);
    }
    if (auto it = doc.find("lm"); it != doc.end()) {
      take(*it, "alpha", c.lm.alpha);
      take(*it, "order_weights", c.lm.order_weights);
      take(*it, "mu", c.lm.mu);
      take(*it, "copy_coverage", c.lm.copy_coverage);
    }
    if (auto it = doc.find("critic"); it != doc.end()) {
      take(*it, "epochs", c.critic.epochs);
      take(*it, "learning_rate", c.critic.learning_rate);
      take(*it, "l2", c.critic.l2);
      take(*it, "neg_pos_ratio", c.critic.neg_pos_ratio);
      take(*it, "dim_bits", c.critic.dim_bits);
      take(*it, "hash_seed", c.critic.hash_seed);
    }
    if (auto it = doc.find("decode"); it != doc.end()) {
      take(*it, "lambda", c.decode.lambda);
      take(*it, "warmup", c.decode.warmup);
      take(*it, "k", c.decode.k);
      take(*it, "max_length", c.decode.max_length);
      take(*it, "beam", c.decode.beam);
      take(*it, "restrict_to_topk", c.decode.restrict_to_topk);
      if (it->contains("mode")) c.decode.mode = parse_mode(it->at("mode").get<std::string>());
    }
    take(doc, "critic_variant", c.critic_variant);
    if (auto it = doc.find("sweep"); it != doc.end()) {
      take(*it, "lambdas", c.sweep.lambdas);
      take(*it, "warmup", c.sweep.warmup);
      take(*it, "ks", c.sweep.ks);
      take(*it, "warmup_length", c.sweep.warmup_length);
      take(*it, "beam", c.sweep.beam);
      take(*it, "critics", c.sweep_critics);
      if (it->contains("modes")) {
        c.sweep.modes.clear();
        for (const auto& m : it->at("modes")) c.sweep.modes.push_back(parse_mode(m.get<std::string>()));
      }
    }
    take(doc, "jobs", c.jobs);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }
}

Experiment::Experiment(RunConfig config)
    : config_(std::move(config)), extractor_(config_.world.predicates) {}

const Corpus& Experiment::corpus() {
  if (!corpus_) {
    corpus_ = config_.corpus_path.empty() ? generate_world(config_.world)
                                          : load_jsonl(config_.corpus_path);
  }
  return *corpus_;
}

const CorpusSplit& Experiment::split() {
  if (!split_) split_ = cdd::split(corpus(), config_.fractions, config_.seed + 1, config_.held_out_predicates);
  return *split_;
}

const GeneratorModel& Experiment::lm() {
  if (!lm_) {
    LmConfig c = config_.lm;
    c.conditional = true;
    lm_ = train_lm(split().train, c);
  }
  return *lm_;
}

const GeneratorModel& Experiment::vanilla_lm() {
  if (!vanilla_) {
    LmConfig c = config_.lm;
    c.conditional = false;
    c.mu = 0.0;
    vanilla_ = train_lm(split().train, c);
  }
  return *vanilla_;
}

void Experiment::set_lm(GeneratorModel model) { lm_ = std::move(model); }

const CriticSource& Experiment::source(const std::string& part) {
  auto it = sources_.find(part);
  if (it != sources_.end()) return *it->second;
  const Corpus* c = nullptr;
  if (part == "train") c = &split().train;
  else if (part == "val") c = &split().val;
  else if (part == "test") c = &split().test;
  else throw ConfigError("unknown corpus part \"" + part + "\"");
  return *sources_.emplace(part, std::make_unique<CriticSource>(*c)).first->second;
}

std::uint64_t Experiment::negative_seed(Variant variant) const {
  return config_.seed * 1000003ULL + 17ULL * static_cast<std::uint64_t>(variant);
}

std::vector<CriticExample> Experiment::positives(const std::string& part) {
  return build_positives(source(part));
}

std::vector<CriticExample> Experiment::negatives(Variant variant, const std::string& part) {
  const auto& src = source(part);
  const auto seed = negative_seed(variant) + (part == "train" ? 0 : 7919);
  switch (variant) {
    case Variant::kBase: return build_negatives_base(src, seed);
    case Variant::kBaseFull: return build_negatives_base_full(src, seed);
    case Variant::kVanillaLm: return build_negatives_vanilla_lm(src, vanilla_lm(), seed);
    case Variant::kFtLm: return build_negatives_ft_lm(src, lm(), seed);
    case Variant::kFtLmFull: return build_negatives_ft_lm_full(src, lm(), config_.decode);
    case Variant::kPositive: break;
  }
  throw ConfigError("positives are not a negative-sampling variant");
}

const CriticTrainResult& Experiment::critic_training(Variant variant) {
  auto it = critics_.find(variant);
  if (it != critics_.end()) return it->second;
  auto examples = positives("train");
  auto neg = negatives(variant, "train");
  examples.insert(examples.end(), std::make_move_iterator(neg.begin()), std::make_move_iterator(neg.end()));
  auto critic_config = config_.critic;
  critic_config.segment_token = corpus().vocab.id("&&");
  return critics_.emplace(variant, train_critic(std::move(examples), critic_config)).first->second;
}

const CriticModel& Experiment::critic(Variant variant) { return critic_training(variant).model; }

void Experiment::set_critic(Variant variant, CriticModel model) {
  critics_.erase(variant);
  critics_.emplace(variant, CriticTrainResult{std::move(model), {}, 0, 0});
}

CriticEvaluation Experiment::evaluate(Variant variant) {
  auto examples = positives("val");
  auto neg = negatives(variant, "val");
  examples.insert(examples.end(), neg.begin(), neg.end());
  return evaluate_critic(critic(variant), examples);
}

std::string file_variant_name(const std::string& variant) {
  std::string s = variant;
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

void save_outputs(const std::vector<DataRecord>& records, const DecodedOutputs& outputs,
                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    out << json{{"id", records[i].id}, {"text", outputs.texts[i]}, {"tokens", outputs.tokens[i]}}.dump()
        << '\n';
  }
}

std::vector<std::string> load_output_texts(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::vector<std::string> texts;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      texts.push_back(json::parse(line).at("text").get<std::string>());
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), n);
    } catch (const json::exception& e) {
      throw SchemaError(e.what(), n);
    }
  }
  return texts;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

json critic_eval_json(const CriticEvaluation& ev) {
  return {{"accuracy", ev.accuracy},
          {"f1", ev.f1},
          {"count", ev.count},
          {"accuracy_by_length", ev.accuracy_by_length},
          {"count_by_length", ev.count_by_length}};
}

}  // namespace

ReproResult repro(const RunConfig& config) {
  const fs::path out = config.out_dir;
  fs::create_directories(out);
  Experiment exp(config);

  save_jsonl(exp.corpus(), (out / "corpus.jsonl").string());
  exp.corpus().vocab.save((out / "vocab.txt").string());
  save_lm(exp.lm(), (out / "lm.json").string());

  const auto& records = exp.test_records();
  DecodeConfig decode = config.decode;
  const auto baseline = decode_records(exp.lm(), nullptr, records, decode, config.jobs);
  save_outputs(records, baseline, (out / "outputs-none.jsonl").string());

  ReproResult result;
  auto report = [&](const std::string& name, const std::vector<std::string>& texts,
                    const json& extra) {
    auto row = score_outputs(texts, baseline.texts, records, exp.extractor());
    row.lambda = name == "none" ? 0.0 : decode.lambda;
    row.warmup = name != "none" && decode.warmup > 0;
    row.k = decode.k;
    row.mode = decode.mode;
    row.critic_variant = name;
    const auto faith = faithfulness_report(texts, records, exp.extractor(), config.held_out_predicates);
    json doc = {{"variant", name},
                {"bleu", row.bleu},
                {"faithfulness", json::parse(to_json(faith))},
                {"diff_vs_baseline", json::parse(to_json(diff_stats(baseline.texts, texts)))}};
    doc.update(extra);
    write_text(out / ("report-" + file_variant_name(name) + ".json"), doc.dump(2) + "\n");
    result.rows.push_back(row);
  };
  report("none", baseline.texts, json{{"critic_calls", 0}});

  for (Variant v : all_critic_variants()) {
    const std::string name = variant_name(v);
    const auto& trained = exp.critic_training(v);
    save_critic(trained.model, (out / ("critic-" + file_variant_name(name) + ".json")).string());
    const auto ev = exp.evaluate(v);
    result.critic_eval.emplace(v, ev);
    const auto decoded = decode_records(exp.lm(), &trained.model, records, decode, config.jobs);
    save_outputs(records, decoded, (out / ("outputs-" + file_variant_name(name) + ".jsonl")).string());
    report(name, decoded.texts,
           json{{"critic_calls", decoded.critic_calls},
                {"critic_validation", critic_eval_json(ev)},
                {"critic_training",
                 {{"positives", trained.positives},
                  {"negatives", trained.negatives},
                  {"epoch_loss", trained.epoch_loss}}}});
  }
  write_text(out / "comparison.csv", sweep_csv(result.rows));
  return result;
}

}  // namespace cdd
