#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentirag/classifier.hpp"
#include "sentirag/corpus.hpp"
#include "sentirag/embedding.hpp"
#include "sentirag/feedback.hpp"
#include "sentirag/http.hpp"
#include "sentirag/marketdata.hpp"
#include "sentirag/metrics.hpp"
#include "sentirag/ppo.hpp"
#include "sentirag/retrieval.hpp"
#include "sentirag/text.hpp"

namespace sentirag {

enum class Variant { BaseNoContext, RagStatic, RagFeedbackCosine, RagFeedbackWoc, RagPpo };

std::string_view variant_name(Variant v);
// ConfigError on an unknown name.
Variant variant_from_name(std::string_view name);

enum class BackendKind { Oracle, Rule, Remote };
enum class EmbedderKind { Hash, Precomputed, Remote };

struct ExperimentConfig {
  Variant variant = Variant::RagStatic;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: hardware concurrency
  bool audit_prompts = false;

  // Data. Relative paths are resolved against the config file's directory.
  std::string corpus_path;
  std::string items_path;
  std::string prices_path;      // optional; needed for price_context
  std::string sources_path;     // optional; else [sources], else the default preset
  std::string weights_preset = "registry";  // registry | uniform
  UnknownSourcePolicy unknown_source = UnknownSourcePolicy::AutoRegister;
  std::optional<SourceRegistry> inline_sources;

  RetrievalConfig retrieval;
  SentimentCueLexicon lexicon = SentimentCueLexicon::default_finance();
  FeedbackParams feedback;

  BackendKind backend = BackendKind::Oracle;
  HttpEndpoint classifier_endpoint;
  OracleFidelity oracle;

  EmbedderKind embedder = EmbedderKind::Hash;
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  std::uint64_t embedding_seed = 0;
  std::string embeddings_path;
  HttpEndpoint embedding_endpoint;
  std::ptrdiff_t embedding_max_in_flight = 4;

  PpoHyperparams ppo;
  EnvConfig env;
  std::string checkpoint_path;
  std::size_t ppo_eval_steps = 500;

  // Reads the sectioned key-value format of configs/example.conf.
  // SENTIRAG_CLASSIFIER_URL and SENTIRAG_EMBEDDING_URL override the URLs.
  static ExperimentConfig from_doc(const KeyValueDoc& doc, const std::string& base_dir = ".");
  static ExperimentConfig load(const std::string& path);

  // Applies the variant's fixed settings (k = 0 for the no-context
  // baseline, scorer for the feedback variants) and checks required fields.
  // ConfigError on a violation.
  void finalize_for(Variant v);
};

// Everything an experiment needs in memory.
struct ExperimentData {
  SourceRegistry registry;
  CorpusStore corpus;
  IngestReport ingest;
  std::vector<TestItem> items;  // sorted by (date, id)
  std::optional<PriceStore> prices;
  std::vector<std::string> price_errors;
};

// InputError on missing files, ConfigError on a bad registry.
ExperimentData load_experiment_data(const ExperimentConfig& config);

std::unique_ptr<EmbeddingProvider> make_embedder(const ExperimentConfig& config);
std::unique_ptr<ClassifierBackend> make_backend(const ExperimentConfig& config);

struct WeightSummaryRow {
  std::string source;
  double initial = 0.0;
  double final_weight = 0.0;
  bool flagged = false;  // final weight below kZeroedWeight
};

inline constexpr double kZeroedWeight = 0.02;

struct WeightPlotData {
  std::vector<std::string> sources;
  std::vector<std::vector<double>> trajectory;
  std::vector<WeightSummaryRow> summary;
  // "Business Standard 15.23%" style lines for the initial weights, in
  // registry order.
  std::vector<std::string> initial_labels;
};

// InputError on an empty trajectory.
WeightPlotData emit_weight_plot_data(const std::vector<std::string>& sources,
                                     const std::vector<std::vector<double>>& trajectory);

// weights.csv (step,source,weight) and weights_summary.csv.
void write_weight_plot_data(const std::string& dir, const WeightPlotData& data);

struct ExperimentReport {
  Variant variant = Variant::RagStatic;
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  std::array<double, 3> per_class_f1{};
  WeightPlotData weights;
  std::vector<PredictionRecord> predictions;
  std::vector<FeedbackEvent> events;  // feedback variants only
  IngestReport ingest;

  // The deterministic metrics block written under "metrics" in report.json.
  nlohmann::json metrics_json() const;
  nlohmann::json to_json() const;
};

// Runs one variant end to end. Deterministic for a fixed config.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Writes report.json, confusion.csv, weights.csv, weights_summary.csv,
// predictions.jsonl, plus events.jsonl (feedback) and prompts.jsonl (audit).
void write_experiment_outputs(const std::string& dir, const ExperimentReport& report,
                              bool audit_prompts);

struct PpoTrainOutcome {
  PpoResult result;
  SourceWeights extracted;
  std::string config_hash;
};

// Trains on the configured items with the registry's initial weights and
// writes policy.json, training.csv, weights.csv and weights_summary.csv.
PpoTrainOutcome run_ppo_training(const ExperimentConfig& config, const std::string& out_dir);

}  // namespace sentirag
