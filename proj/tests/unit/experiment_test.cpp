#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include <json.hpp>

#include "sentirag/error.hpp"
#include "sentirag/experiment.hpp"
#include "sentirag/synthetic.hpp"
#include "test_support.hpp"

using namespace sentirag;
namespace fs = std::filesystem;

namespace {

// A small synthetic world on disk plus a config pointing at it.
struct DiskWorld {
  testsupport::TempDir dir;
  std::string conf_path;

  explicit DiskWorld(std::uint64_t seed, std::string extra = "", std::size_t symbols = 4) {
    auto cfg = synthetic_config({0.9, 0.6, 0.3}, seed);
    cfg.symbols = symbols;
    cfg.days = 40;
    auto w = make_synthetic_world(cfg);
    write_news_jsonl(dir.file("corpus.jsonl"), w.corpus.items());
    write_test_items(dir.file("items.jsonl"), w.items);
    testsupport::write_file(dir.file("sources.conf"), w.registry.to_text());
    std::string text =
        "[run]\nseed = " + std::to_string(seed) +
        "\nthreads = 3\n[data]\ncorpus = corpus.jsonl\nitems = items.jsonl\nsources = sources.conf\n" +
        (extra.find("alpha") == std::string::npos ? "[feedback]\nalpha = 0.001\n" : "") +
        "[oracle]\nbase_rate = 0.5\nS1 = 0.9\nS2 = 0.6\nS3 = 0.3\n" +
        extra;
    conf_path = dir.file("experiment.conf");
    testsupport::write_file(conf_path, text);
  }

  ExperimentConfig config(Variant v) const {
    auto c = ExperimentConfig::load(conf_path);
    c.variant = v;
    return c;
  }
};

std::string repo_file(const std::string& rel) { return std::string(SENTIRAG_SOURCE_DIR) + "/" + rel; }

}  // namespace

TEST(Config, ShippedExampleStatesTheDefaults) {
  auto c = ExperimentConfig::load(repo_file("configs/example.conf"));
  ExperimentConfig d;
  EXPECT_EQ(c.variant, Variant::RagStatic);
  EXPECT_EQ(c.seed, d.seed);
  EXPECT_EQ(c.threads, d.threads);
  EXPECT_EQ(c.audit_prompts, d.audit_prompts);
  EXPECT_EQ(c.retrieval.k, kDefaultTopK);
  EXPECT_EQ(c.retrieval.window_days, kDefaultWindowDays);
  EXPECT_EQ(c.retrieval.scorer, ScorerKind::Cosine);
  EXPECT_TRUE(c.retrieval.use_cue_filter);
  EXPECT_FALSE(c.retrieval.price_context);
  EXPECT_EQ(c.feedback.alpha, kDefaultFeedbackRate);
  EXPECT_EQ(c.feedback.zone, kDefaultNeutralZone);
  EXPECT_EQ(c.backend, BackendKind::Oracle);
  EXPECT_EQ(c.oracle.base_rate, 0.5);
  EXPECT_EQ(c.embedder, EmbedderKind::Hash);
  EXPECT_EQ(c.embedding_dim, kDefaultEmbeddingDim);
  PpoHyperparams hp;
  EXPECT_EQ(c.ppo.gamma, hp.gamma);
  EXPECT_EQ(c.ppo.clip, hp.clip);
  EXPECT_EQ(c.ppo.policy_lr, hp.policy_lr);
  EXPECT_EQ(c.ppo.value_lr, hp.value_lr);
  EXPECT_EQ(c.ppo.batch_size, hp.batch_size);
  EXPECT_EQ(c.ppo.minibatch_size, hp.minibatch_size);
  EXPECT_EQ(c.ppo.epochs, hp.epochs);
  EXPECT_EQ(c.ppo.total_steps, hp.total_steps);
  EXPECT_EQ(c.ppo.hidden, hp.hidden);
  EXPECT_EQ(c.ppo.init_log_std, hp.init_log_std);
  EXPECT_EQ(c.env.accuracy_window, EnvConfig{}.accuracy_window);
  EXPECT_EQ(c.ppo_eval_steps, d.ppo_eval_steps);
  auto lex = SentimentCueLexicon::default_finance();
  for (auto p : {CuePolarity::Positive, CuePolarity::Negative, CuePolarity::Neutral})
    EXPECT_EQ(c.lexicon.terms(p), lex.terms(p));
  // Paths resolve against the config's directory.
  EXPECT_EQ(fs::path(c.sources_path), fs::path(repo_file("configs/sources.conf")).lexically_normal());
  EXPECT_NO_THROW(SourceRegistry::load(c.sources_path));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(ExperimentConfig::from_doc(KeyValueDoc::parse("[retrieval]\ntop_k = 3\n")),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_doc(KeyValueDoc::parse("[run]\nvariant = rag_magic\n")),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_doc(KeyValueDoc::parse("[retrieval]\nscorer = jaccard\n")),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_doc(KeyValueDoc::parse("[feedback]\nalpha = -1\n")),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_doc(KeyValueDoc::parse("[ppo]\nhidden = 64, x\n")),
               ConfigError);
  EXPECT_THROW(variant_from_name("nope"), ConfigError);
  EXPECT_EQ(variant_from_name("rag_feedback_woc"), Variant::RagFeedbackWoc);
}

TEST(Config, EnvironmentOverridesEndpointUrls) {
  ::setenv("SENTIRAG_CLASSIFIER_URL", "http://127.0.0.1:9/classify", 1);
  auto c = ExperimentConfig::from_doc(
      KeyValueDoc::parse("[backend]\nkind = remote\nurl = http://example.invalid/x\n"));
  ::unsetenv("SENTIRAG_CLASSIFIER_URL");
  EXPECT_EQ(c.classifier_endpoint.url, "http://127.0.0.1:9/classify");
}

TEST(Config, VariantRequirements) {
  auto c = ExperimentConfig::from_doc(KeyValueDoc::parse("[data]\nitems = i.jsonl\ncorpus = c.jsonl\n"));
  auto base = c;
  base.finalize_for(Variant::BaseNoContext);
  EXPECT_EQ(base.retrieval.k, 0u);
  auto woc = c;
  woc.finalize_for(Variant::RagFeedbackWoc);
  EXPECT_EQ(woc.retrieval.scorer, ScorerKind::Overlap);
  auto ppo = c;
  EXPECT_THROW(ppo.finalize_for(Variant::RagPpo), ConfigError);
  auto no_items = ExperimentConfig::from_doc(KeyValueDoc::parse("[data]\ncorpus = c.jsonl\n"));
  EXPECT_THROW(no_items.finalize_for(Variant::RagStatic), ConfigError);
}

TEST(PlotData, ConstantTrajectoryIsFlatAndUnflagged) {
  auto d = emit_weight_plot_data({"A", "B"}, {{0.6, 0.4}, {0.6, 0.4}, {0.6, 0.4}});
  for (const auto& r : d.summary) {
    EXPECT_FALSE(r.flagged);
    EXPECT_EQ(r.initial, r.final_weight);
  }
  auto low = emit_weight_plot_data({"A", "B"}, {{0.99, 0.01}, {0.99, 0.01}});
  EXPECT_FALSE(low.summary[0].flagged);
  EXPECT_TRUE(low.summary[1].flagged);
  EXPECT_THROW(emit_weight_plot_data({"A"}, {}), InputError);
}

TEST(PlotData, DefaultPresetLabels) {
  auto w = SourceRegistry::default_preset().initial_weights();
  auto d = emit_weight_plot_data(w.names(), {w.values()});
  ASSERT_GE(d.initial_labels.size(), 2u);
  EXPECT_EQ(d.initial_labels[0], "Business Standard 15.23%");
  EXPECT_EQ(d.initial_labels[1], "NDTV Profit 14.80%");
}

TEST(PlotData, Files) {
  testsupport::TempDir dir;
  write_weight_plot_data(dir.path().string(),
                         emit_weight_plot_data({"A", "B"}, {{0.5, 0.5}, {0.99, 0.01}}));
  EXPECT_EQ(testsupport::read_file(dir.file("weights_summary.csv")),
            "source,initial,final,flagged\nA,0.5,0.98999999999999999,0\nB,0.5,0.01,1\n");
  EXPECT_EQ(testsupport::read_file(dir.file("weights.csv")),
            "step,source,weight\n0,A,0.5\n0,B,0.5\n1,A,0.98999999999999999\n1,B,0.01\n");
}

TEST(Lattice, FeedbackWithZeroRateEqualsStatic) {
  DiskWorld w(3, "[feedback]\nalpha = 0\n");
  auto fb = w.config(Variant::RagFeedbackCosine);
  ASSERT_EQ(fb.feedback.alpha, 0.0);
  auto a = run_experiment(fb);
  auto b = run_experiment(w.config(Variant::RagStatic));
  EXPECT_EQ(a.metrics_json().dump(), b.metrics_json().dump());
  ASSERT_EQ(a.predictions.size(), b.predictions.size());
  for (std::size_t i = 0; i < a.predictions.size(); ++i) {
    EXPECT_EQ(a.predictions[i].prompt, b.predictions[i].prompt);
    EXPECT_EQ(a.predictions[i].predicted, b.predictions[i].predicted);
  }
}

TEST(Lattice, StaticWithoutContextEqualsBase) {
  DiskWorld w(4, "[run]\nweights_preset = uniform\n[retrieval]\nk = 0\n");
  auto base = run_experiment(w.config(Variant::BaseNoContext));
  auto stat = run_experiment(w.config(Variant::RagStatic));
  ASSERT_EQ(base.predictions.size(), stat.predictions.size());
  for (std::size_t i = 0; i < base.predictions.size(); ++i) {
    EXPECT_EQ(base.predictions[i].prompt, stat.predictions[i].prompt);
    EXPECT_EQ(base.predictions[i].prompt.find("Context:"), std::string::npos);
  }
  EXPECT_EQ(base.metrics_json().dump(), stat.metrics_json().dump());
}

TEST(Experiment, DeterministicAcrossRunsAndThreadCounts) {
  DiskWorld w(5);
  auto a = run_experiment(w.config(Variant::RagStatic));
  auto cfg = w.config(Variant::RagStatic);
  cfg.threads = 1;
  auto b = run_experiment(cfg);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  auto f1 = run_experiment(w.config(Variant::RagFeedbackWoc));
  auto f2 = run_experiment(w.config(Variant::RagFeedbackWoc));
  EXPECT_EQ(f1.to_json().dump(), f2.to_json().dump());
  EXPECT_EQ(f1.weights.trajectory, f2.weights.trajectory);
}

TEST(Experiment, MetricsAgreeWithThePredictionLog) {
  DiskWorld w(6);
  auto r = run_experiment(w.config(Variant::RagFeedbackCosine));
  double correct = 0, total = 0;
  for (const auto& p : r.predictions)
    if (p.predicted && p.truth != SentimentLabel::Unknown) {
      ++total;
      correct += *p.predicted == p.truth;
    }
  EXPECT_NEAR(r.accuracy, correct / total, 1e-12);
  EXPECT_EQ(r.events.size(), r.predictions.size());
}

TEST(Experiment, PpoCheckpointFlow) {
  DiskWorld w(7, "[ppo]\ntotal_steps = 256\nhidden = 16, 16\ncheckpoint = ppo/policy.json\n"
                 "eval_steps = 100\n");
  auto cfg = w.config(Variant::RagPpo);
  auto trained = run_ppo_training(cfg, w.dir.file("ppo"));
  EXPECT_EQ(trained.result.steps, 256u);
  for (const char* f : {"policy.json", "training.csv", "weights.csv", "weights_summary.csv"})
    EXPECT_TRUE(fs::exists(w.dir.path() / "ppo" / f)) << f;

  auto r = run_experiment(cfg);
  ASSERT_EQ(r.weights.trajectory.size(), 2u);
  EXPECT_EQ(r.weights.trajectory[1], trained.extracted.values());

  testsupport::TempDir out;
  write_experiment_outputs(out.path().string(), r, true);
  for (const char* f : {"report.json", "confusion.csv", "weights.csv", "weights_summary.csv",
                        "predictions.jsonl", "prompts.jsonl"})
    EXPECT_TRUE(fs::exists(out.path() / f)) << f;
  auto j = nlohmann::json::parse(testsupport::read_file(out.file("report.json")));
  EXPECT_EQ(j.at("variant"), "rag_ppo");
  EXPECT_EQ(j.at("metrics").dump(), r.metrics_json().dump());
}

TEST(Experiment, MissingCheckpointOrData) {
  DiskWorld w(8, "[ppo]\ncheckpoint = nowhere/policy.json\n");
  EXPECT_THROW(run_experiment(w.config(Variant::RagPpo)), InputError);
  auto cfg = w.config(Variant::RagStatic);
  cfg.items_path = w.dir.file("missing.jsonl");
  EXPECT_THROW(run_experiment(cfg), InputError);
}

TEST(Experiment, UnreachableRemoteBackendFailsFast) {
  DiskWorld w(9, "[backend]\nkind = remote\nurl = http://127.0.0.1:1/complete\ntimeout_ms = 200\n"
                 "retries = 0\n");
  EXPECT_THROW(run_experiment(w.config(Variant::RagStatic)), RetryableError);
}
