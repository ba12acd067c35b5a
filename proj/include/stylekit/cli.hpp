#pragma once

// Single entry point wiring every module into pipeline stages:
//   generate-prompts, generate, split, embed, sample, validate, train, encode,
//   stel, av, discriminate, metrics, probe-mse
// Exit codes: 0 success, 2 usage error, 1 runtime error (JSON on stderr).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "stylekit/core_data.hpp"
#include "stylekit/downstream.hpp"
#include "stylekit/error.hpp"
#include "stylekit/features.hpp"
#include "stylekit/genkit/c4_filter.hpp"
#include "stylekit/genkit/prompts.hpp"
#include "stylekit/genkit/provider.hpp"
#include "stylekit/hash.hpp"
#include "stylekit/jsonl.hpp"
#include "stylekit/quality.hpp"
#include "stylekit/sampler.hpp"
#include "stylekit/stel.hpp"
#include "stylekit/trainer.hpp"

namespace stylekit::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Effective settings of a run. Loaded from --config JSON first, then
/// overridden by whatever flags are given.
struct PipelineConfig {
  struct Paths {
    std::string pairs, triplets, embeddings, model, reports;
  } paths;
  SamplerConfig sampler;
  std::string ablate = "in_domain";
  TrainConfig train;
  genkit::ProviderConfig provider;
  struct Stel {
    std::string mode = "stel";
    std::size_t cap = 0;
    bool symmetric = true;
  } stel;
  std::uint64_t seed = 0;
  bool strict = true;
};

namespace detail {

template <class T>
void assign_if(const json& j, const char* key, T& target) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) target = it->get<T>();
}

inline void apply_config(const json& j, PipelineConfig& c) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  assign_if(j, "seed", c.seed);
  assign_if(j, "strict", c.strict);
  if (auto p = j.find("paths"); p != j.end()) {
    assign_if(*p, "pairs", c.paths.pairs);
    assign_if(*p, "triplets", c.paths.triplets);
    assign_if(*p, "embeddings", c.paths.embeddings);
    assign_if(*p, "model", c.paths.model);
    assign_if(*p, "reports", c.paths.reports);
  }
  if (auto s = j.find("sampler"); s != j.end()) {
    assign_if(*s, "per_feature_count", c.sampler.per_feature_count);
    assign_if(*s, "paraphrase_fraction", c.sampler.paraphrase_fraction);
    if (s->contains("polarity")) c.sampler.polarity = parse_polarity(s->at("polarity").get<std::string>());
    if (s->contains("exclude_features"))
      c.sampler.exclude_features = s->at("exclude_features").get<std::set<std::string>>();
    assign_if(*s, "ablate", c.ablate);
  }
  if (auto t = j.find("train"); t != j.end()) {
    assign_if(*t, "margin", c.train.margin);
    assign_if(*t, "learning_rate", c.train.learning_rate);
    assign_if(*t, "batch_size", c.train.batch_size);
    assign_if(*t, "val_fraction", c.train.val_fraction);
    assign_if(*t, "patience_epochs", c.train.patience_epochs);
    assign_if(*t, "max_epochs", c.train.max_epochs);
    assign_if(*t, "momentum", c.train.momentum);
  }
  if (auto p = j.find("provider"); p != j.end()) {
    assign_if(*p, "base_url", c.provider.base_url);
    assign_if(*p, "model_name", c.provider.model_name);
    assign_if(*p, "temperature", c.provider.temperature);
    assign_if(*p, "top_p", c.provider.top_p);
    assign_if(*p, "max_concurrent", c.provider.max_concurrent);
    assign_if(*p, "cache_path", c.provider.cache_path);
    assign_if(*p, "api_key_env", c.provider.api_key_env);
    assign_if(*p, "batch_size", c.provider.batch_size);
    if (auto r = p->find("retry"); r != p->end()) {
      assign_if(*r, "max_attempts", c.provider.retry.max_attempts);
      assign_if(*r, "backoff_ms", c.provider.retry.backoff_ms);
    }
  }
  if (auto s = j.find("stel"); s != j.end()) {
    assign_if(*s, "mode", c.stel.mode);
    assign_if(*s, "cap", c.stel.cap);
    assign_if(*s, "symmetric", c.stel.symmetric);
  }
}

/// Finds --config in argv before CLI11 parses, so file values become defaults.
inline std::optional<std::string> prescan_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].starts_with("--config=")) return args[i].substr(9);
  }
  return std::nullopt;
}

inline std::set<std::string> split_csv(const std::string& s) {
  std::set<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.insert(item);
  return out;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

struct Provenance {
  std::string command;
  json params = json::object();
  std::vector<std::pair<std::string, std::string>> inputs;  // role -> path

  json to_json() const {
    json in = json::object();
    for (const auto& [role, path] : inputs) in[role] = {{"path", path}, {"sha256", sha256_file(path)}};
    return {{"tool", "stylekit"},
            {"version", kToolVersion},
            {"command", command},
            {"config_hash", sha256_hex(canonical(params))},
            {"inputs", in}};
  }
};

inline void emit_report(const std::string& path, const Provenance& prov, json body) {
  body["provenance"] = prov.to_json();
  const std::string text = body.dump(2) + "\n";
  if (path.empty()) {
    std::cout << text;
  } else {
    write_atomic(path, text);
  }
}

inline Strictness strictness(const PipelineConfig& c) { return c.strict ? Strictness::strict : Strictness::lenient; }

inline std::vector<VectorTriplet> vectorize(const std::vector<Triplet>& triplets, const EmbeddingSet& emb) {
  std::vector<VectorTriplet> out;
  out.reserve(triplets.size());
  auto get = [&](const SideRef& r) {
    const auto v = emb.at(r.key());
    return std::vector<double>(v.begin(), v.end());
  };
  for (const auto& t : triplets) out.push_back({get(t.anchor), get(t.positive), get(t.negative)});
  return out;
}

inline std::vector<ParallelPair> select_split(const std::vector<ParallelPair>& pairs, const std::string& split) {
  if (split == "all") return pairs;
  return filter_split(pairs, parse_split(split));
}

}  // namespace detail

inline int run(const std::vector<std::string>& args_in) {
  std::vector<std::string> args = args_in;
  if (args.empty()) args.push_back("stylekit");

  PipelineConfig cfg;
  try {
    if (auto path = detail::prescan_config(args)) detail::apply_config(json::parse(read_file(*path)), cfg);
  } catch (const std::exception& e) {
    std::cerr << canonical(json{{"error", {{"kind", "config"}, {"message", e.what()}}}}) << "\n";
    return 2;
  }

  CLI::App app{"stylekit: contrastive style-embedding pipeline", "stylekit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its fields");
  app.add_option("--seed", cfg.seed, "Seed for every stochastic stage")->capture_default_str();
  app.add_option("--strict", cfg.strict, "Reject unknown record fields (true|false)")->capture_default_str();

  // generate-prompts
  auto* gp = app.add_subcommand("generate-prompts", "Assemble topic-extraction or attributed pair prompts");
  std::string gp_out, gp_topics, gp_c4, gp_features = "all";
  std::size_t gp_per_feature = 100;
  gp->add_option("--out", gp_out, "Output prompts JSONL")->required();
  gp->add_option("--topics", gp_topics, "Topic list, one per line (pair prompts)");
  gp->add_option("--c4", gp_c4, "Documents, one per line (topic prompts)");
  gp->add_option("--features", gp_features, "Comma-separated feature ids or 'all'")->capture_default_str();
  gp->add_option("--per-feature", gp_per_feature, "Pair prompts per feature")->capture_default_str();

  // generate
  auto* gen = app.add_subcommand("generate", "Run pair prompts through the LLM and parse responses into pairs");
  std::string gen_prompts, gen_out, gen_rejects;
  gen->add_option("--prompts", gen_prompts, "Pair prompts JSONL")->required();
  gen->add_option("--out", gen_out, "Output pairs JSONL")->required();
  gen->add_option("--rejects", gen_rejects, "Unparseable responses JSONL");
  gen->add_option("--provider-url", cfg.provider.base_url, "Chat endpoint URL");
  gen->add_option("--model", cfg.provider.model_name, "Model name");
  gen->add_option("--cache", cfg.provider.cache_path, "Response cache JSONL");
  gen->add_option("--max-attempts", cfg.provider.retry.max_attempts, "Attempts per request");
  gen->add_option("--backoff-ms", cfg.provider.retry.backoff_ms, "Initial retry backoff");

  // split
  auto* sp = app.add_subcommand("split", "Stratified train/test split by feature");
  std::string sp_pairs, sp_out;
  double sp_fraction = 0.9;
  sp->add_option("--pairs", sp_pairs, "Pairs JSONL")->required();
  sp->add_option("--out", sp_out, "Output pairs JSONL with split tags")->required();
  sp->add_option("--train-fraction", sp_fraction, "Fraction of each feature in train")->capture_default_str();

  // embed
  auto* em = app.add_subcommand("embed", "Embed every pair sentence through the embedding provider");
  std::string em_pairs, em_out;
  em->add_option("--pairs", em_pairs, "Pairs JSONL")->required();
  em->add_option("--out", em_out, "Output embeddings JSONL")->required();
  em->add_option("--provider-url", cfg.provider.base_url, "Embedding endpoint URL or local embedding JSONL")->required();
  em->add_option("--model", cfg.provider.model_name, "Model name");
  em->add_option("--cache", cfg.provider.cache_path, "Response cache JSONL");
  em->add_option("--batch", cfg.provider.batch_size, "Texts per request");
  em->add_option("--max-concurrent", cfg.provider.max_concurrent, "Requests in flight");

  // sample
  auto* sa = app.add_subcommand("sample", "Sample contrastive triplets");
  std::string sa_out, sa_polarity = to_string(cfg.sampler.polarity), sa_exclude, sa_split = "train", sa_report;
  sa->add_option("--pairs", cfg.paths.pairs, "Pairs JSONL")->required(cfg.paths.pairs.empty());
  sa->add_option("--out", sa_out, "Output triplets JSONL")->required();
  sa->add_option("--per-feature", cfg.sampler.per_feature_count, "Triplets per feature")->capture_default_str();
  sa->add_option("--paraphrase-fraction", cfg.sampler.paraphrase_fraction, "Share of anchor-paraphrase negatives")
      ->capture_default_str();
  sa->add_option("--ablate", cfg.ablate, "in_domain|out_of_domain|out_of_distribution")->capture_default_str();
  sa->add_option("--polarity", sa_polarity, "positive_side_only|both_sides")->capture_default_str();
  sa->add_option("--exclude", sa_exclude, "Extra comma-separated feature ids to exclude");
  sa->add_option("--split", sa_split, "Which pairs to use: train|test|all")->capture_default_str();
  sa->add_option("--report", sa_report, "Validation report JSON");

  // validate
  auto* va = app.add_subcommand("validate", "Check triplet invariants");
  std::string va_triplets, va_report;
  va->add_option("--pairs", cfg.paths.pairs, "Pairs JSONL")->required(cfg.paths.pairs.empty());
  va->add_option("--triplets", va_triplets, "Triplets JSONL")->required();
  va->add_option("--report", va_report, "Report JSON");

  // train
  auto* tr = app.add_subcommand("train", "Train the projection encoder with the triplet margin loss");
  std::string tr_history, tr_init = "identity";
  std::size_t tr_d_out = 0;
  bool tr_bias = false;
  tr->add_option("--triplets", cfg.paths.triplets, "Triplets JSONL")->required(cfg.paths.triplets.empty());
  tr->add_option("--embeddings", cfg.paths.embeddings, "Base vectors JSONL")->required(cfg.paths.embeddings.empty());
  tr->add_option("--out", cfg.paths.model, "Output model file")->required(cfg.paths.model.empty());
  tr->add_option("--history", tr_history, "Epoch history JSONL (default: <out>.history.jsonl)");
  tr->add_option("--margin", cfg.train.margin, "Triplet margin")->capture_default_str();
  tr->add_option("--lr", cfg.train.learning_rate, "Learning rate")->capture_default_str();
  tr->add_option("--batch", cfg.train.batch_size, "Batch size")->capture_default_str();
  tr->add_option("--patience", cfg.train.patience_epochs, "Early-stopping patience (epochs)")->capture_default_str();
  tr->add_option("--max-epochs", cfg.train.max_epochs, "Epoch limit")->capture_default_str();
  tr->add_option("--val-fraction", cfg.train.val_fraction, "Validation share")->capture_default_str();
  tr->add_option("--momentum", cfg.train.momentum, "Heavy-ball momentum (0 = plain GD)")->capture_default_str();
  tr->add_option("--init", tr_init, "identity|random")->capture_default_str();
  tr->add_option("--d-out", tr_d_out, "Output dimension for random init (default d_in)");
  tr->add_flag("--bias", tr_bias, "Give the encoder a bias vector");

  // encode
  auto* en = app.add_subcommand("encode", "Apply a trained encoder to an embedding file");
  std::string en_out;
  en->add_option("--model", cfg.paths.model, "Model file")->required(cfg.paths.model.empty());
  en->add_option("--embeddings", cfg.paths.embeddings, "Input embeddings JSONL")->required(cfg.paths.embeddings.empty());
  en->add_option("--out", en_out, "Output embeddings JSONL")->required();

  // stel
  auto* st = app.add_subcommand("stel", "Build STEL / STEL-or-Content instances and score embeddings");
  std::string st_split = "test", st_instances_out;
  bool st_no_symmetric = false;
  st->add_option("--pairs", cfg.paths.pairs, "Pairs JSONL")->required(cfg.paths.pairs.empty());
  st->add_option("--embeddings", cfg.paths.embeddings, "Embeddings JSONL")->required(cfg.paths.embeddings.empty());
  st->add_option("--split", st_split, "train|test|all")->capture_default_str();
  st->add_option("--mode", cfg.stel.mode, "stel|stel_or_content")->capture_default_str();
  st->add_option("--cap", cfg.stel.cap, "Per-feature instance cap (0 = all)")->capture_default_str();
  st->add_flag("--no-symmetric", st_no_symmetric, "Skip side-swapped twin instances");
  st->add_option("--instances-out", st_instances_out, "Also write the instances JSONL");
  st->add_option("--report", cfg.paths.reports, "Report JSON (default: stdout)");

  // av
  auto* av = app.add_subcommand("av", "Authorship verification ROC-AUC from embedding cosine");
  std::string av_instances, av_report;
  av->add_option("--instances", av_instances, "AV instances JSONL")->required();
  av->add_option("--embeddings", cfg.paths.embeddings, "Document embeddings JSONL")->required(cfg.paths.embeddings.empty());
  av->add_option("--report", av_report, "Report JSON (default: stdout)");

  // discriminate
  auto* di = app.add_subcommand("discriminate", "Style-transfer output discrimination accuracy");
  std::string di_instances, di_report;
  di->add_option("--instances", di_instances, "Discrimination instances JSONL")->required();
  di->add_option("--embeddings", cfg.paths.embeddings, "Embeddings JSONL")->required(cfg.paths.embeddings.empty());
  di->add_option("--report", di_report, "Report JSON (default: stdout)");

  // metrics
  auto* me = app.add_subcommand("metrics", "Dataset quality report");
  std::string me_fluency, me_annotations, me_split = "all", me_report, me_alpha = "interval";
  me->add_option("--pairs", cfg.paths.pairs, "Pairs JSONL")->required(cfg.paths.pairs.empty());
  me->add_option("--embeddings", cfg.paths.embeddings, "Sentence embeddings JSONL")->required(cfg.paths.embeddings.empty());
  me->add_option("--fluency", me_fluency, "Fluency scores JSONL {key, score}");
  me->add_option("--annotations", me_annotations, "Annotation records JSONL");
  me->add_option("--split", me_split, "train|test|all")->capture_default_str();
  me->add_option("--alpha-metric", me_alpha, "interval|nominal")->capture_default_str();
  me->add_option("--report", me_report, "Report JSON (default: stdout)");

  // probe-mse
  auto* pm = app.add_subcommand("probe-mse", "MSE between two per-feature score tables");
  std::string pm_a, pm_b, pm_report;
  pm->add_option("--a", pm_a, "Report or {feature: score} JSON")->required();
  pm->add_option("--b", pm_b, "Report or {feature: score} JSON")->required();
  pm->add_option("--report", pm_report, "Report JSON (default: stdout)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    detail::Provenance prov;
    const auto& reg = default_registry();

    if (*gp) {
      prov.command = "generate-prompts";
      std::string out;
      if (!gp_c4.empty()) {
        std::size_t doc_no = 0;
        for (const auto& doc : detail::read_lines(gp_c4)) {
          std::size_t sent_no = 0;
          for (const auto& s : genkit::filter_c4_sentences(doc))
            out += canonical(json{{"kind", "topic"},
                                  {"prompt_id", "topic-" + std::to_string(doc_no) + "-" + std::to_string(sent_no++)},
                                  {"sentence", s},
                                  {"prompt", genkit::build_topic_prompt(s)}}) +
                   "\n";
          ++doc_no;
        }
      } else {
        if (gp_topics.empty()) throw PreconditionError("generate-prompts needs --topics or --c4");
        auto topics = detail::read_lines(gp_topics);
        std::vector<std::string> features =
            gp_features == "all" ? reg.ids() : std::vector<std::string>{};
        if (gp_features != "all")
          for (const auto& f : detail::split_csv(gp_features)) features.push_back(reg.at(f).id);
        const std::size_t needed = features.size() * gp_per_feature;
        if (topics.size() < needed)
          throw PreconditionError("need " + std::to_string(needed) + " unused topics, got " + std::to_string(topics.size()));
        Rng rng = Rng::derive(cfg.seed, "generate-prompts");
        rng.shuffle(topics);
        genkit::AttributeValueSets sets;
        std::size_t t = 0;
        for (const auto& fid : features) {
          const auto& feature = reg.at(fid);
          for (std::size_t k = 0; k < gp_per_feature; ++k) {
            const auto attrs = genkit::sample_attributes(topics[t++], sets, rng);
            const std::uint64_t perm_seed = rng.next();
            out += canonical(json{{"kind", "pair"},
                                  {"prompt_id", fid + "-" + std::to_string(k)},
                                  {"feature_id", fid},
                                  {"attributes", attrs.as_map()},
                                  {"permutation_seed", perm_seed},
                                  {"prompt", genkit::build_pair_prompt(feature, attrs, perm_seed)}}) +
                   "\n";
          }
        }
      }
      write_atomic(gp_out, out);
      return 0;
    }

    if (*gen) {
      genkit::LlmClient client(cfg.provider);
      std::vector<ParallelPair> pairs;
      std::string rejects;
      for_each_jsonl(gen_prompts, [&](const json& j, std::size_t) {
        if (field::string(j, "kind") != "pair") return;
        const auto& feature = reg.at(field::string(j, "feature_id"));
        const auto text = client.generate(field::string(j, "prompt"), genkit::SamplingParams::pair_generation());
        try {
          const auto parsed = genkit::parse_pair_response(text, feature);
          ParallelPair p;
          p.pair_id = field::string(j, "prompt_id");
          p.feature_id = feature.id;
          p.positive_text = parsed.positive_text;
          p.negative_text = parsed.negative_text;
          p.attributes = field::require(j, "attributes").get<std::map<std::string, std::string>>();
          if (p.positive_text == p.negative_text) throw genkit::ResponseParseError("identical sentences", text);
          pairs.push_back(std::move(p));
        } catch (const genkit::ResponseParseError& e) {
          rejects += canonical(json{{"prompt_id", j.at("prompt_id")}, {"error", e.what()}, {"raw", e.raw()}}) + "\n";
        }
      });
      write_atomic(gen_out, pairs_to_jsonl(pairs));
      if (!gen_rejects.empty()) write_atomic(gen_rejects, rejects);
      std::cerr << canonical(json{{"pairs", pairs.size()},
                                  {"network_calls", client.telemetry().network_calls.load()},
                                  {"cache_hits", client.telemetry().cache_hits.load()},
                                  {"retries", client.telemetry().retries.load()}})
                << "\n";
      return 0;
    }

    if (*sp) {
      const auto pairs = load_pairs(sp_pairs, reg, detail::strictness(cfg));
      const auto result = split_pairs(pairs, sp_fraction, cfg.seed);
      std::map<std::string, ParallelPair> tagged;
      for (const auto& p : result.train) tagged.emplace(p.pair_id, p);
      for (const auto& p : result.test) tagged.emplace(p.pair_id, p);
      std::vector<ParallelPair> ordered;
      for (const auto& p : pairs) ordered.push_back(tagged.at(p.pair_id));
      write_atomic(sp_out, pairs_to_jsonl(ordered));
      return 0;
    }

    if (*em) {
      const auto pairs = load_pairs(em_pairs, reg, detail::strictness(cfg));
      std::vector<std::pair<std::string, std::string>> texts;
      for (const auto& p : pairs) {
        texts.emplace_back(SideRef::sentence_key(p.pair_id, Side::positive), p.positive_text);
        texts.emplace_back(SideRef::sentence_key(p.pair_id, Side::negative), p.negative_text);
      }
      genkit::EmbeddingClient client(cfg.provider);
      write_atomic(em_out, embeddings_to_jsonl(client.embed_texts(texts)));
      return 0;
    }

    if (*sa) {
      prov.command = "sample";
      const auto all = load_pairs(cfg.paths.pairs, reg, detail::strictness(cfg));
      const auto pairs = detail::select_split(all, sa_split);
      cfg.sampler.polarity = parse_polarity(sa_polarity);
      cfg.sampler.seed = cfg.seed;
      for (const auto& f : ablation_preset(cfg.ablate)) cfg.sampler.exclude_features.insert(f);
      for (const auto& f : detail::split_csv(sa_exclude)) cfg.sampler.exclude_features.insert(f);
      const auto triplets = sample_triplets(pairs, cfg.sampler, reg);
      write_atomic(sa_out, triplets_to_jsonl(triplets));
      if (!sa_report.empty()) {
        prov.params = {{"per_feature_count", cfg.sampler.per_feature_count},
                       {"paraphrase_fraction", cfg.sampler.paraphrase_fraction},
                       {"polarity", sa_polarity},
                       {"exclude_features", cfg.sampler.exclude_features},
                       {"split", sa_split},
                       {"seed", cfg.seed}};
        prov.inputs = {{"pairs", cfg.paths.pairs}};
        auto report = to_json(validate_triplets(triplets, pairs));
        report.erase("violations");
        std::set<std::string> included;
        for (const auto& t : triplets) included.insert(t.feature_id);
        report["features_included"] = included.size();
        detail::emit_report(sa_report, prov, report);
      }
      return 0;
    }

    if (*va) {
      prov.command = "validate";
      prov.inputs = {{"pairs", cfg.paths.pairs}, {"triplets", va_triplets}};
      const auto pairs = load_pairs(cfg.paths.pairs, reg, detail::strictness(cfg));
      const auto report = validate_triplets(load_triplets(va_triplets, detail::strictness(cfg)), pairs);
      detail::emit_report(va_report, prov, to_json(report));
      return report.ok() ? 0 : 1;
    }

    if (*tr) {
      cfg.train.seed = cfg.seed;
      const auto triplets = load_triplets(cfg.paths.triplets, detail::strictness(cfg));
      const auto emb = load_embeddings(cfg.paths.embeddings, detail::strictness(cfg));
      const auto data = detail::vectorize(triplets, emb);
      EncoderModel init;
      if (tr_init == "identity") {
        if (tr_d_out != 0 && tr_d_out != emb.dim()) throw PreconditionError("identity init requires d_out == d_in");
        init = EncoderModel::identity(emb.dim(), tr_bias);
      } else if (tr_init == "random") {
        Rng rng = Rng::derive(cfg.seed, "train/init");
        const std::size_t d_out = tr_d_out ? tr_d_out : emb.dim();
        init = EncoderModel::random(d_out, emb.dim(), 1.0 / std::sqrt(static_cast<double>(emb.dim())), rng, tr_bias);
      } else {
        throw PreconditionError("--init must be identity or random");
      }
      const auto result = train(data, cfg.train, init);
      write_atomic(cfg.paths.model, model_to_jsonl(result.model));
      write_atomic(tr_history.empty() ? cfg.paths.model + ".history.jsonl" : tr_history,
                   history_to_jsonl(result.history));
      return 0;
    }

    if (*en) {
      const auto model = load_model(cfg.paths.model);
      const auto emb = load_embeddings(cfg.paths.embeddings, detail::strictness(cfg));
      EmbeddingSet out;
      for (std::size_t i = 0; i < emb.size(); ++i) out.add(emb.keys()[i], encode(model, emb.values(i)));
      write_atomic(en_out, embeddings_to_jsonl(out));
      return 0;
    }

    if (*st) {
      prov.command = "stel";
      const auto pairs = detail::select_split(load_pairs(cfg.paths.pairs, reg, detail::strictness(cfg)), st_split);
      StelBuildConfig bc{parse_stel_mode(cfg.stel.mode), cfg.stel.cap, cfg.stel.symmetric && !st_no_symmetric,
                         cfg.seed};
      const auto instances = build_stel_tasks(pairs, bc);
      if (!st_instances_out.empty())
        write_atomic(st_instances_out, to_jsonl(instances, [](const StelInstance& s) { return to_json(s); }));
      const auto emb = load_embeddings(cfg.paths.embeddings, detail::strictness(cfg));
      auto report = to_json(score_stel(instances, emb));
      report["mode"] = cfg.stel.mode;
      report["symmetric"] = bc.symmetric;
      report["cap"] = bc.cap;
      prov.params = {{"mode", cfg.stel.mode}, {"cap", bc.cap}, {"symmetric", bc.symmetric}, {"split", st_split},
                     {"seed", cfg.seed}};
      prov.inputs = {{"pairs", cfg.paths.pairs}, {"embeddings", cfg.paths.embeddings}};
      detail::emit_report(cfg.paths.reports, prov, report);
      return 0;
    }

    if (*av) {
      prov.command = "av";
      prov.inputs = {{"instances", av_instances}, {"embeddings", cfg.paths.embeddings}};
      const auto instances = load_records<AvInstance>(av_instances, av_instance_from_json);
      const auto emb = load_embeddings(cfg.paths.embeddings, detail::strictness(cfg));
      detail::emit_report(av_report, prov, to_json(evaluate_av(instances, emb)));
      return 0;
    }

    if (*di) {
      prov.command = "discriminate";
      prov.inputs = {{"instances", di_instances}, {"embeddings", cfg.paths.embeddings}};
      const auto instances = load_records<DiscriminationInstance>(di_instances, discrimination_instance_from_json);
      const auto emb = load_embeddings(cfg.paths.embeddings, detail::strictness(cfg));
      detail::emit_report(di_report, prov, to_json(discriminate(instances, emb)));
      return 0;
    }

    if (*me) {
      prov.command = "metrics";
      prov.params = {{"split", me_split}, {"alpha_metric", me_alpha}};
      prov.inputs = {{"pairs", cfg.paths.pairs}, {"embeddings", cfg.paths.embeddings}};
      const auto pairs = detail::select_split(load_pairs(cfg.paths.pairs, reg, detail::strictness(cfg)), me_split);
      const auto emb = load_embeddings(cfg.paths.embeddings, detail::strictness(cfg));
      json report{{"n_pairs", pairs.size()}, {"content_similarity", content_similarity(pairs, emb)}};
      std::vector<std::span<const double>> sentence_vectors;
      for (const auto& p : pairs) {
        sentence_vectors.push_back(emb.at(SideRef::sentence_key(p.pair_id, Side::positive)));
        sentence_vectors.push_back(emb.at(SideRef::sentence_key(p.pair_id, Side::negative)));
      }
      report["diversity"] = diversity(sentence_vectors);
      report["fluency"] = nullptr;
      if (!me_fluency.empty()) {
        prov.inputs.emplace_back("fluency", me_fluency);
        std::unordered_map<std::string, std::string> feature_of;
        for (const auto& p : pairs) {
          feature_of[SideRef::sentence_key(p.pair_id, Side::positive)] = p.feature_id;
          feature_of[SideRef::sentence_key(p.pair_id, Side::negative)] = p.feature_id;
        }
        std::vector<FluencyScore> scores;
        for_each_jsonl(me_fluency, [&](const json& j, std::size_t) {
          const auto key = field::string(j, "key");
          if (auto it = feature_of.find(key); it != feature_of.end())
            scores.push_back({it->second, field::number(j, "score")});
        });
        report["fluency"] = fluency_summary(scores, disfluency_features());
      }
      report["human_agreement"] = nullptr;
      report["krippendorff_alpha"] = nullptr;
      if (!me_annotations.empty()) {
        prov.inputs.emplace_back("annotations", me_annotations);
        const auto records = load_records<AnnotationRecord>(me_annotations, annotation_from_json);
        const auto agg = aggregate_annotations(records);
        report["human_agreement"] = {{"overall_accuracy", agg.overall_accuracy},
                                     {"mean_majority_size", agg.mean_majority_size}};
        report["krippendorff_alpha"] = krippendorff_alpha(records, parse_alpha_metric(me_alpha));
      }
      detail::emit_report(me_report, prov, report);
      return 0;
    }

    if (*pm) {
      prov.command = "probe-mse";
      prov.inputs = {{"a", pm_a}, {"b", pm_b}};
      auto load_scores = [](const std::string& path) {
        const json j = json::parse(read_file(path));
        const json& table = j.contains("per_feature_accuracy") ? j.at("per_feature_accuracy") : j;
        return table.get<std::map<std::string, double>>();
      };
      const auto a = load_scores(pm_a);
      const auto b = load_scores(pm_b);
      detail::emit_report(pm_report, prov, json{{"mse", probe_mse(a, b)}, {"n_features", a.size()}});
      return 0;
    }
  } catch (const Error& e) {
    json err{{"kind", e.kind()}, {"message", e.what()}};
    if (const auto* t = dynamic_cast<const TransportError*>(&e)) err["attempt_log"] = t->attempt_log();
    std::cerr << canonical(json{{"error", err}}) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << canonical(json{{"error", {{"kind", "internal"}, {"message", e.what()}}}}) << "\n";
    return 1;
  }
  return 2;
}

inline int run(int argc, const char* const* argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace stylekit::cli
