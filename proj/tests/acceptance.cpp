// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "stylekit/cli.hpp"
#include "support/helpers.hpp"
#include "support/mock_provider.hpp"
#include "support/oracles.hpp"

using namespace stylekit;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

/// Runs the CLI in-process with stdout and stderr swallowed.
int quiet_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "stylekit");
  std::ostringstream sink_out, sink_err;
  auto* old_out = std::cout.rdbuf(sink_out.rdbuf());
  auto* old_err = std::cerr.rdbuf(sink_err.rdbuf());
  const int code = cli::run(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  if (code != 0) std::cerr << "  [" << args[1] << " exited " << code << "] " << sink_err.str();
  return code;
}

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

// ---------------------------------------------------------------------------

Outcome sampler_structure() {
  testutil::TempDir dir("acc-sampler");
  testutil::write_text(dir.file("pairs.jsonl"), pairs_to_jsonl(testutil::make_pairs(40, 100)));
  const auto t0 = Clock::now();
  const int code = quiet_cli({"sample", "--pairs", dir.file("pairs.jsonl"), "--out", dir.file("t.jsonl"),
                              "--per-feature", "8000", "--report", dir.file("report.json")});
  const double secs = seconds_since(t0);
  if (code != 0) return {false, "sample exited " + std::to_string(code)};
  // Re-validate from the written file rather than trusting the report alone.
  const auto triplets = load_triplets(dir.file("t.jsonl"));
  const auto report = validate_triplets(triplets, load_pairs(dir.file("pairs.jsonl")));
  const auto written = json::parse(read_file(dir.file("report.json")));
  const bool ok = triplets.size() == 320000 && report.ok() && report.paraphrase_fraction_observed == 0.5 &&
                  written["violation_count"] == 0 && secs < 30.0;
  return {ok, fmt("triplets=%zu violations=%zu paraphrase_fraction=%.6f time=%.2fs", triplets.size(),
                  report.violations.size(), report.paraphrase_fraction_observed, secs)};
}

Outcome ablation_presets() {
  const auto pairs = testutil::make_pairs(40, 3);
  std::map<std::string, std::size_t> got;
  for (const char* name : {"out_of_domain", "out_of_distribution"}) {
    SamplerConfig c;
    c.per_feature_count = 2;
    c.exclude_features = ablation_preset(name);
    std::set<std::string> with_data;
    for (const auto& t : sample_triplets(pairs, c)) with_data.insert(t.feature_id);
    got[name] = with_data.size();
  }
  return {got["out_of_domain"] == 34 && got["out_of_distribution"] == 25,
          fmt("out_of_domain=%zu out_of_distribution=%zu", got["out_of_domain"], got["out_of_distribution"])};
}

Outcome gradient_correctness() {
  Rng rng(2024);
  std::size_t instances = 0, checked = 0;
  double worst = 0.0;
  while (instances < 120) {
    const std::size_t d_in = 2 + rng.below(7), d_out = 1 + rng.below(7), batch = 1 + rng.below(12);
    auto model = EncoderModel::random(d_out, d_in, 0.5, rng, rng.coin());
    std::vector<VectorTriplet> data(batch);
    for (auto& t : data)
      for (auto* v : {&t.a, &t.p, &t.n}) {
        v->resize(d_in);
        for (auto& x : *v) x = rng.normal();
      }
    const auto r = grad_check(model, data, 0.1 + rng.uniform(), 1e-6);
    if (r.checked_triplets == 0) continue;
    ++instances;
    checked += r.checked_triplets;
    worst = std::max(worst, r.max_relative_error);
  }
  return {worst < 1e-5, fmt("instances=%zu triplets=%zu max_rel_err=%.3e", instances, checked, worst)};
}

/// Synthetic base vectors: style code scaled by 0.1 in 4 dims, content N(0,1)
/// in 28 dims shared by both sides of a pair.
struct Synthetic {
  std::vector<ParallelPair> train, test;
  EmbeddingSet emb;
};

Synthetic make_synthetic(std::uint64_t seed) {
  constexpr std::size_t kStyleDims = 4, kContentDims = 28, kFeatures = 4, kPairs = 100;
  Rng rng(seed);
  auto pairs = testutil::make_pairs(kFeatures, kPairs);
  const auto ids = default_registry().ids();
  std::map<std::string, std::vector<double>> style_code;
  for (std::size_t f = 0; f < kFeatures; ++f) {
    std::vector<double> code(kStyleDims, 0.0);
    code[f] = 1.0;
    style_code[ids[f]] = code;
  }
  Synthetic s;
  for (const auto& p : pairs) {
    std::vector<double> content(kContentDims);
    for (auto& x : content) x = rng.normal();
    for (Side side : {Side::positive, Side::negative}) {
      const double sign = side == Side::positive ? 1.0 : -1.0;
      std::vector<double> v;
      for (double c : style_code[p.feature_id]) v.push_back(0.1 * sign * c);
      v.insert(v.end(), content.begin(), content.end());
      s.emb.add(SideRef::sentence_key(p.pair_id, side), v);
    }
  }
  auto split = split_pairs(pairs, 0.9, seed);
  s.train = std::move(split.train);
  s.test = std::move(split.test);
  return s;
}

double oracle_stel_or_content(const std::vector<StelInstance>& instances, const EmbeddingSet& emb) {
  double total = 0;
  for (const auto& s : instances)
    total += oracle::choice_score(to_vec(emb.at(s.anchors[0])), to_vec(emb.at(s.candidates[s.correct])),
                                  to_vec(emb.at(s.candidates[1 - s.correct])));
  return total / static_cast<double>(instances.size());
}

Outcome end_to_end_recovery() {
  const auto t0 = Clock::now();
  const auto syn = make_synthetic(17);
  const auto held_out = build_stel_tasks(syn.test, {StelMode::stel_or_content, 0, true, 17});
  const double raw = score_stel(held_out, syn.emb).overall_accuracy;
  const double raw_oracle = oracle_stel_or_content(held_out, syn.emb);

  SamplerConfig sc;
  sc.per_feature_count = 4000;
  sc.seed = 17;
  const auto triplets = sample_triplets(syn.train, sc);
  std::vector<VectorTriplet> data;
  for (const auto& t : triplets)
    data.push_back({to_vec(syn.emb.at(t.anchor.key())), to_vec(syn.emb.at(t.positive.key())),
                    to_vec(syn.emb.at(t.negative.key()))});
  TrainConfig tc;  // margin 0.1, lr 1e-4, batch 512
  tc.max_epochs = 30;
  tc.patience_epochs = 3;
  tc.seed = 17;
  const auto result = train(data, tc, EncoderModel::identity(syn.emb.dim()));

  EmbeddingSet encoded;
  for (std::size_t i = 0; i < syn.emb.size(); ++i)
    encoded.add(syn.emb.keys()[i], encode(result.model, syn.emb.values(i)));
  const double trained = score_stel(held_out, encoded).overall_accuracy;
  const double trained_oracle = oracle_stel_or_content(held_out, encoded);
  const double secs = seconds_since(t0);
  const bool ok = raw <= 0.1 && raw == raw_oracle && trained >= 0.9 && trained == trained_oracle && secs < 120.0;
  return {ok, fmt("held_out=%zu raw_acc=%.4f trained_acc=%.4f epochs=%zu time=%.2fs", held_out.size(), raw, trained,
                  result.history.size(), secs)};
}

Outcome auc_oracle_equivalence() {
  Rng rng(99);
  double worst = 0.0;
  std::size_t tied_instances = 0;
  for (int k = 0; k < 500; ++k) {
    const std::size_t n = 2 + rng.below(199);
    const std::size_t levels = 2 + rng.below(20);  // few distinct scores forces ties
    std::vector<double> scores(n);
    std::vector<bool> labels(n);
    std::vector<ScoredLabel> scored;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.below(levels)) / static_cast<double>(levels);
      labels[i] = rng.coin();
    }
    labels[0] = true;
    labels[1] = false;
    for (std::size_t i = 0; i < n; ++i) scored.push_back({scores[i], labels[i]});
    std::set<double> distinct(scores.begin(), scores.end());
    tied_instances += distinct.size() < n;
    worst = std::max(worst, std::abs(roc_auc(scored) - oracle::pairwise_auc(scores, labels)));
  }
  return {worst < 1e-12, fmt("instances=500 with_ties=%zu max_abs_diff=%.3e", tied_instances, worst)};
}

Outcome stel_oracle_and_calibration() {
  // Exact agreement with the alignment-enumeration oracle on the fixture.
  const auto pairs = load_pairs(testutil::fixture("two_feature_pairs.jsonl"));
  EmbeddingSet fixture_emb;
  for (const auto& p : pairs) {
    fixture_emb.add(SideRef::sentence_key(p.pair_id, Side::positive), mock::text_vector(p.positive_text, 16));
    fixture_emb.add(SideRef::sentence_key(p.pair_id, Side::negative), mock::text_vector(p.negative_text, 16));
  }
  std::size_t compared = 0, mismatches = 0;
  for (StelMode mode : {StelMode::stel, StelMode::stel_or_content}) {
    for (const auto& s : build_stel_tasks(pairs, {mode, 0, true, 1})) {
      auto v = [&](const std::string& key) { return to_vec(fixture_emb.at(key)); };
      const double want = mode == StelMode::stel
                              ? oracle::stel_alignment_score(v(s.anchors[0]), v(s.anchors[1]), v(s.candidates[0]),
                                                             v(s.candidates[1]), s.correct)
                              : oracle::choice_score(v(s.anchors[0]), v(s.candidates[s.correct]),
                                                     v(s.candidates[1 - s.correct]));
      ++compared;
      mismatches += stel_instance_score(s, fixture_emb) != want;
    }
  }

  // Random embeddings: 10,000 groups of two pairs, one instance per group, so
  // every instance sees its own independent vectors.
  std::vector<ParallelPair> random_pairs;
  for (int g = 0; g < 10000; ++g)
    for (int k = 0; k < 2; ++k) {
      ParallelPair p;
      p.feature_id = "g" + std::to_string(g);
      p.pair_id = p.feature_id + "-" + std::to_string(k);
      random_pairs.push_back(std::move(p));
    }
  Rng rng(4242);
  EmbeddingSet random_emb;
  for (const auto& p : random_pairs)
    for (Side side : {Side::positive, Side::negative}) {
      std::vector<double> v(16);
      for (auto& x : v) x = rng.normal();
      random_emb.add(SideRef::sentence_key(p.pair_id, side), v);
    }
  std::map<std::string, double> acc;
  for (StelMode mode : {StelMode::stel, StelMode::stel_or_content}) {
    const auto inst = build_stel_tasks(random_pairs, {mode, 1, false, 5});
    if (inst.size() != 10000) return {false, "expected 10000 random instances, built " + std::to_string(inst.size())};
    acc[to_string(mode)] = score_stel(inst, random_emb).overall_accuracy;
  }
  const bool ok = compared > 0 && mismatches == 0 && std::abs(acc["stel"] - 0.5) <= 0.02 &&
                  std::abs(acc["stel_or_content"] - 0.5) <= 0.02;
  return {ok, fmt("fixture_instances=%zu mismatches=%zu random_stel=%.4f random_stel_or_content=%.4f", compared,
                  mismatches, acc["stel"], acc["stel_or_content"])};
}

Outcome probe_mse_sanity() {
  const std::map<std::string, double> a{{"x", 0.7}, {"y", 0.55}, {"z", 1.0}};
  const double same = probe_mse(a, a);
  const double single = probe_mse({{"f", 1.0}}, {{"f", 0.8}});
  return {same == 0.0 && std::abs(single - 0.04) < 1e-12, fmt("identical=%.3g single=%.15f", same, single)};
}

std::vector<AnnotationRecord> records_of(const std::map<std::string, std::vector<double>>& units, bool intended) {
  std::vector<AnnotationRecord> out;
  for (const auto& [item, vals] : units)
    for (std::size_t k = 0; k < vals.size(); ++k) out.push_back({item, "r" + std::to_string(k), vals[k], intended});
  return out;
}

Outcome annotation_metrics() {
  const auto neg_half = aggregate_annotations(records_of({{"n", {1.0, 0.0}}}, false));
  const auto pos_half = aggregate_annotations(records_of({{"p", {1.0, 0.0}}}, true));
  const bool boundary = neg_half.per_item_mean.at("n") == 0.5 && !neg_half.per_item_agrees_intended.at("n") &&
                        pos_half.per_item_agrees_intended.at("p");

  const double perfect =
      krippendorff_alpha(records_of({{"a", {1, 1, 1}}, {"b", {0, 0, 0}}, {"c", {0.5, 0.5, 0.5}}}, true));

  Rng rng(8);
  const double levels[3] = {0.0, 0.5, 1.0};
  std::map<std::string, std::vector<double>> independent;
  for (int i = 0; i < 2000; ++i)
    for (int k = 0; k < 5; ++k) independent["i" + std::to_string(i)].push_back(levels[rng.below(3)]);
  const double noise = krippendorff_alpha(records_of(independent, true));

  const double hand = krippendorff_alpha(records_of({{"u1", {0.0, 0.5}}, {"u2", {1.0, 1.0}}}, true));
  const bool ok = boundary && perfect == 1.0 && std::abs(noise) <= 0.05 && std::abs(hand - 8.0 / 11.0) < 1e-9;
  return {ok, fmt("boundary_cases=%s alpha_perfect=%.6f alpha_independent=%.4f alpha_hand=%.12f (8/11)",
                  boundary ? "ok" : "wrong", perfect, noise, hand)};
}

Outcome determinism() {
  testutil::TempDir dir("acc-determinism");
  mock::MockProvider server;
  const auto f = [&](const std::string& n) { return dir.file(n); };
  std::string topics;
  for (int i = 0; i < 16; ++i) topics += "topic number " + std::to_string(i) + "\n";
  testutil::write_text(f("topics.txt"), topics);

  const std::vector<std::vector<std::string>> stages{
      {"generate-prompts", "--topics", f("topics.txt"), "--features", "active_voice,contractions,humor,sarcasm",
       "--per-feature", "4", "--out", f("prompts.jsonl"), "--seed", "11"},
      {"generate", "--prompts", f("prompts.jsonl"), "--out", f("pairs.jsonl"), "--rejects", f("rejects.jsonl"),
       "--provider-url", server.chat_url(), "--model", "m", "--cache", f("chat_cache.jsonl")},
      {"split", "--pairs", f("pairs.jsonl"), "--out", f("split.jsonl"), "--train-fraction", "0.5", "--seed", "11"},
      {"embed", "--pairs", f("split.jsonl"), "--out", f("emb.jsonl"), "--provider-url", server.embed_url(), "--model",
       "e", "--cache", f("embed_cache.jsonl"), "--batch", "5"},
      {"sample", "--pairs", f("split.jsonl"), "--out", f("triplets.jsonl"), "--per-feature", "4", "--seed", "11",
       "--report", f("sample_report.json")},
      {"validate", "--pairs", f("split.jsonl"), "--triplets", f("triplets.jsonl"), "--report", f("validate.json")},
      {"train", "--triplets", f("triplets.jsonl"), "--embeddings", f("emb.jsonl"), "--out", f("model.jsonl"),
       "--max-epochs", "5", "--batch", "4", "--lr", "1e-3", "--seed", "11"},
      {"encode", "--model", f("model.jsonl"), "--embeddings", f("emb.jsonl"), "--out", f("encoded.jsonl")},
      {"stel", "--pairs", f("split.jsonl"), "--embeddings", f("encoded.jsonl"), "--split", "test", "--mode",
       "stel_or_content", "--instances-out", f("stel_instances.jsonl"), "--report", f("stel.json"), "--seed", "11"},
      {"metrics", "--pairs", f("split.jsonl"), "--embeddings", f("emb.jsonl"), "--report", f("metrics.json")},
  };
  auto run_all = [&]() -> std::optional<std::map<std::string, std::string>> {
    for (const auto& s : stages)
      if (quiet_cli(s) != 0) return std::nullopt;
    std::map<std::string, std::string> hashes;
    for (const auto& entry : std::filesystem::directory_iterator(dir.path()))
      hashes[entry.path().filename().string()] = sha256_file(entry.path());
    return hashes;
  };
  const auto first = run_all();
  if (!first) return {false, "first pipeline run failed"};
  const std::size_t calls_after_first = server.total_calls();
  const auto second = run_all();
  if (!second) return {false, "second pipeline run failed"};
  const std::size_t rerun_calls = server.total_calls() - calls_after_first;
  std::size_t differing = 0;
  for (const auto& [name, h] : *first) differing += !second->contains(name) || second->at(name) != h;
  const bool ok = differing == 0 && first->size() == second->size() && rerun_calls == 0 && calls_after_first > 0;
  return {ok, fmt("stages=%zu artifacts=%zu differing=%zu first_run_calls=%zu rerun_calls=%zu", stages.size(),
                  first->size(), differing, calls_after_first, rerun_calls)};
}

Outcome prompt_fidelity() {
  std::size_t topic_mismatch = 0;
  for (const std::string s : {"Cats purr.", "The river froze in January, and the town skated on it for weeks."}) {
    const std::string expected = "What is the fine-grained topic of the following text: " + s + " Only return the topic.";
    topic_mismatch += genkit::build_topic_prompt(s) != expected;
  }

  Rng rng(31337);
  const std::vector<std::string> vocab{"the", "a", "of", "and", "river", "city", "was", "is", "people", "walked",
                                       "quickly", "to", "in", "market", "we", "they", "bright", "morning", "|",
                                       "http://x.y", "42", "--", "it's", "well-known", "\t"};
  std::size_t kept = 0, short_passed = 0;
  for (int doc = 0; doc < 2000; ++doc) {
    std::string text;
    const std::size_t n_tokens = rng.below(400);
    for (std::size_t t = 0; t < n_tokens; ++t) {
      text += vocab[rng.below(vocab.size())];
      const auto r = rng.below(25);
      text += r == 0 ? ". " : r == 1 ? "! " : r == 2 ? "? " : " ";
    }
    for (const auto& s : genkit::filter_c4_sentences(text)) {
      ++kept;
      short_passed += genkit::word_count(s) <= 32;
    }
  }
  return {topic_mismatch == 0 && short_passed == 0 && kept > 0,
          fmt("topic_template_mismatches=%zu c4_docs=2000 kept=%zu kept_le_32_words=%zu", topic_mismatch, kept,
              short_passed)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"sampler-structure", sampler_structure},
      {"ablation-presets", ablation_presets},
      {"gradient-correctness", gradient_correctness},
      {"end-to-end-separability", end_to_end_recovery},
      {"roc-auc-oracle", auc_oracle_equivalence},
      {"stel-oracle-and-calibration", stel_oracle_and_calibration},
      {"probe-mse", probe_mse_sanity},
      {"annotation-metrics", annotation_metrics},
      {"determinism", determinism},
      {"genkit-prompt-fidelity", prompt_fidelity},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
