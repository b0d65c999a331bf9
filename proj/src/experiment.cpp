#include "sentirag/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "sentirag/error.hpp"

namespace sentirag {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::pair<Variant, std::string_view>, 5> kVariants = {{
    {Variant::BaseNoContext, "base_no_context"},
    {Variant::RagStatic, "rag_static"},
    {Variant::RagFeedbackCosine, "rag_feedback_cosine"},
    {Variant::RagFeedbackWoc, "rag_feedback_woc"},
    {Variant::RagPpo, "rag_ppo"},
}};

// Keys outside the free-form sections; anything else is a typo.
const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "run.variant",          "run.seed",           "run.threads",
      "run.audit_prompts",    "run.weights_preset", "data.corpus",
      "data.items",           "data.prices",        "data.sources",
      "data.unknown_source",  "retrieval.k",        "retrieval.window_days",
      "retrieval.scorer",     "retrieval.cue_filter", "retrieval.price_context",
      "feedback.alpha",       "feedback.neutral_zone", "backend.kind",
      "backend.url",          "backend.timeout_ms", "backend.retries",
      "embedding.kind",       "embedding.dim",      "embedding.seed",
      "embedding.path",       "embedding.url",      "embedding.timeout_ms",
      "embedding.retries",    "embedding.max_in_flight", "ppo.gamma",
      "ppo.clip",             "ppo.policy_lr",      "ppo.value_lr",
      "ppo.batch_size",       "ppo.minibatch_size", "ppo.epochs",
      "ppo.total_steps",      "ppo.hidden",         "ppo.init_log_std",
      "ppo.seed",             "ppo.accuracy_window", "ppo.neutral_zone_rewards",
      "ppo.checkpoint",       "ppo.eval_steps",     "cues.positive",
      "cues.negative",        "cues.neutral",
  };
  return keys;
}

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

std::size_t non_negative(const KeyValueDoc& doc, const std::string& key, std::size_t fallback) {
  long long v = doc.get_int(key, static_cast<long long>(fallback));
  if (v < 0) throw ConfigError(fmt::format("`{}` must be >= 0", key));
  return static_cast<std::size_t>(v);
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    auto tok = trim(std::string_view(text).substr(start, end - start));
    auto v = parse_double(tok);
    if (!v || *v < 1 || *v != static_cast<double>(static_cast<std::size_t>(*v)))
      throw ConfigError(fmt::format("`{}`: bad layer size `{}`", key, tok));
    out.push_back(static_cast<std::size_t>(*v));
    start = end + 1;
  }
  return out;
}

HttpEndpoint endpoint_from(const KeyValueDoc& doc, const std::string& section,
                           const char* env_override) {
  HttpEndpoint ep;
  ep.url = doc.get_or(section + ".url", "");
  if (const char* env = std::getenv(env_override); env != nullptr && *env != '\0') ep.url = env;
  ep.timeout = std::chrono::milliseconds(doc.get_int(section + ".timeout_ms", 10000));
  ep.retries = static_cast<int>(doc.get_int(section + ".retries", 2));
  if (ep.timeout.count() <= 0 || ep.retries < 0)
    throw ConfigError(fmt::format("[{}] timeout_ms must be > 0 and retries >= 0", section));
  return ep;
}

// Owns the inner provider behind a by-id cache.
class CachedProvider final : public EmbeddingProvider {
 public:
  explicit CachedProvider(std::unique_ptr<EmbeddingProvider> inner)
      : inner_(std::move(inner)), cache_(*inner_) {}

  std::size_t dim() const override { return cache_.dim(); }
  SentenceVector embed(std::string_view id, std::string_view text) override {
    return cache_.embed(id, text);
  }

 private:
  std::unique_ptr<EmbeddingProvider> inner_;
  CachingEmbedder cache_;
};

std::vector<PredictionRecord> evaluate_static(std::span<const TestItem> items,
                                              const RagPipeline& pipeline,
                                              ClassifierBackend& backend,
                                              const SourceWeights& weights, std::uint64_t seed,
                                              std::size_t threads) {
  std::vector<PredictionRecord> out(items.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, items.size()));
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = items.size();
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      try {
        out[i] = predict_item(items[i], pipeline, backend, weights,
                              query_stream(seed, items[i].query.id));
      } catch (...) {
        std::lock_guard lock(mu);
        // Report the earliest failing item so the diagnostic is stable.
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
        next = items.size();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

nlohmann::json record_json(const PredictionRecord& r) {
  nlohmann::json j;
  j["query_id"] = r.query_id;
  j["truth"] = std::string(label_name(r.truth));
  j["predicted"] = r.predicted ? nlohmann::json(std::string(label_name(*r.predicted)))
                               : nlohmann::json(nullptr);
  j["raw_output"] = r.raw_output;
  j["error"] = r.error;
  j["selected_ids"] = r.selected_ids;
  j["contributing_sources"] = r.contributing_sources;
  j["scores"] = r.scores;
  return j;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write `{}`", path));
  for (const auto& l : lines) out << l << '\n';
}

std::size_t labeled_count(std::span<const TestItem> items) {
  return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [](const TestItem& t) {
    return t.truth != SentimentLabel::Unknown;
  }));
}

}  // namespace

std::string_view variant_name(Variant v) {
  for (const auto& [var, name] : kVariants)
    if (var == v) return name;
  return "unknown";
}

Variant variant_from_name(std::string_view name) {
  for (const auto& [var, n] : kVariants)
    if (n == name) return var;
  throw ConfigError(fmt::format("unknown variant `{}` (expected base_no_context, rag_static, "
                                "rag_feedback_cosine, rag_feedback_woc or rag_ppo)",
                                name));
}

ExperimentConfig ExperimentConfig::from_doc(const KeyValueDoc& doc, const std::string& base_dir) {
  for (const auto& [key, value] : doc.entries()) {
    bool free_form = key.rfind("sources.", 0) == 0 || key.rfind("oracle.", 0) == 0;
    if (!free_form && !known_keys().count(key))
      throw ConfigError(fmt::format("unknown config key `{}`", key));
  }

  ExperimentConfig c;
  if (doc.has("run.variant")) c.variant = variant_from_name(doc.get("run.variant"));
  c.seed = static_cast<std::uint64_t>(doc.get_int("run.seed", 0));
  c.threads = non_negative(doc, "run.threads", 0);
  c.audit_prompts = doc.get_bool("run.audit_prompts", false);
  c.weights_preset = doc.get_or("run.weights_preset", "registry");
  if (c.weights_preset != "registry" && c.weights_preset != "uniform")
    throw ConfigError("run.weights_preset must be `registry` or `uniform`");

  c.corpus_path = resolve(base_dir, doc.get_or("data.corpus", ""));
  c.items_path = resolve(base_dir, doc.get_or("data.items", ""));
  c.prices_path = resolve(base_dir, doc.get_or("data.prices", ""));
  c.sources_path = resolve(base_dir, doc.get_or("data.sources", ""));
  std::string policy = doc.get_or("data.unknown_source", "auto_register");
  if (policy == "auto_register")
    c.unknown_source = UnknownSourcePolicy::AutoRegister;
  else if (policy == "reject")
    c.unknown_source = UnknownSourcePolicy::Reject;
  else
    throw ConfigError("data.unknown_source must be `auto_register` or `reject`");

  auto sources = doc.section("sources");
  if (!sources.empty()) {
    std::string text;
    for (const auto& [name, weight] : sources) text += fmt::format("{} = {}\n", name, weight);
    c.inline_sources = SourceRegistry::parse(text);
  }

  long long k = doc.get_int("retrieval.k", static_cast<long long>(kDefaultTopK));
  if (k < 0) throw ConfigError("retrieval.k must be >= 0");
  c.retrieval.k = static_cast<std::size_t>(k);
  c.retrieval.window_days =
      static_cast<int>(doc.get_int("retrieval.window_days", kDefaultWindowDays));
  if (c.retrieval.window_days < 1 || c.retrieval.window_days % 2 == 0)
    throw ConfigError("retrieval.window_days must be odd and >= 1");
  auto scorer = scorer_from_name(doc.get_or("retrieval.scorer", "cosine"));
  if (!scorer) throw ConfigError("retrieval.scorer must be `cosine` or `overlap`");
  c.retrieval.scorer = *scorer;
  c.retrieval.use_cue_filter = doc.get_bool("retrieval.cue_filter", true);
  c.retrieval.price_context = doc.get_bool("retrieval.price_context", false);
  c.lexicon = SentimentCueLexicon::from_config(doc);

  c.feedback.alpha = doc.get_double("feedback.alpha", kDefaultFeedbackRate);
  c.feedback.zone = doc.get_double("feedback.neutral_zone", kDefaultNeutralZone);
  c.feedback.seed = c.seed;
  if (!(c.feedback.alpha >= 0.0)) throw ConfigError("feedback.alpha must be >= 0");
  if (!(c.feedback.zone >= 0.0)) throw ConfigError("feedback.neutral_zone must be >= 0");

  std::string backend = doc.get_or("backend.kind", "oracle");
  if (backend == "oracle")
    c.backend = BackendKind::Oracle;
  else if (backend == "rule")
    c.backend = BackendKind::Rule;
  else if (backend == "remote")
    c.backend = BackendKind::Remote;
  else
    throw ConfigError("backend.kind must be `oracle`, `rule` or `remote`");
  c.classifier_endpoint = endpoint_from(doc, "backend", "SENTIRAG_CLASSIFIER_URL");

  for (const auto& [name, value] : doc.section("oracle")) {
    auto p = parse_double(value);
    if (!p) throw ConfigError(fmt::format("oracle.{}: `{}` is not a number", name, value));
    if (name == "base_rate")
      c.oracle.base_rate = *p;
    else
      c.oracle.per_source[name] = *p;
  }
  c.oracle.validate();

  std::string embedder = doc.get_or("embedding.kind", "hash");
  if (embedder == "hash")
    c.embedder = EmbedderKind::Hash;
  else if (embedder == "precomputed")
    c.embedder = EmbedderKind::Precomputed;
  else if (embedder == "remote")
    c.embedder = EmbedderKind::Remote;
  else
    throw ConfigError("embedding.kind must be `hash`, `precomputed` or `remote`");
  c.embedding_dim = non_negative(doc, "embedding.dim", kDefaultEmbeddingDim);
  if (c.embedding_dim == 0) throw ConfigError("embedding.dim must be > 0");
  c.embedding_seed = static_cast<std::uint64_t>(doc.get_int("embedding.seed", 0));
  c.embeddings_path = resolve(base_dir, doc.get_or("embedding.path", ""));
  c.embedding_endpoint = endpoint_from(doc, "embedding", "SENTIRAG_EMBEDDING_URL");
  c.embedding_max_in_flight = doc.get_int("embedding.max_in_flight", 4);
  if (c.embedding_max_in_flight < 1 || c.embedding_max_in_flight > 64)
    throw ConfigError("embedding.max_in_flight must lie in [1, 64]");

  auto& hp = c.ppo;
  hp.gamma = doc.get_double("ppo.gamma", hp.gamma);
  hp.clip = doc.get_double("ppo.clip", hp.clip);
  hp.policy_lr = doc.get_double("ppo.policy_lr", hp.policy_lr);
  hp.value_lr = doc.get_double("ppo.value_lr", hp.value_lr);
  hp.batch_size = non_negative(doc, "ppo.batch_size", hp.batch_size);
  hp.minibatch_size = non_negative(doc, "ppo.minibatch_size", hp.minibatch_size);
  hp.epochs = non_negative(doc, "ppo.epochs", hp.epochs);
  hp.total_steps = non_negative(doc, "ppo.total_steps", hp.total_steps);
  if (doc.has("ppo.hidden")) hp.hidden = parse_sizes("ppo.hidden", doc.get("ppo.hidden"));
  hp.init_log_std = doc.get_double("ppo.init_log_std", hp.init_log_std);
  hp.seed = static_cast<std::uint64_t>(doc.get_int("ppo.seed", static_cast<long long>(c.seed)));
  hp.validate();
  c.env.accuracy_window = non_negative(doc, "ppo.accuracy_window", c.env.accuracy_window);
  c.env.neutral_zone_rewards = doc.get_bool("ppo.neutral_zone_rewards", false);
  c.env.zone = c.feedback.zone;
  c.checkpoint_path = resolve(base_dir, doc.get_or("ppo.checkpoint", ""));
  c.ppo_eval_steps = non_negative(doc, "ppo.eval_steps", c.ppo_eval_steps);
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  auto doc = KeyValueDoc::load(path);
  auto base = fs::path(path).parent_path().string();
  return from_doc(doc, base.empty() ? "." : base);
}

void ExperimentConfig::finalize_for(Variant v) {
  variant = v;
  switch (v) {
    case Variant::BaseNoContext:
      retrieval.k = 0;
      retrieval.price_context = false;
      break;
    case Variant::RagFeedbackCosine:
      retrieval.scorer = ScorerKind::Cosine;
      break;
    case Variant::RagFeedbackWoc:
      retrieval.scorer = ScorerKind::Overlap;
      break;
    case Variant::RagPpo:
      if (checkpoint_path.empty())
        throw ConfigError("variant rag_ppo needs ppo.checkpoint");
      if (ppo_eval_steps == 0) throw ConfigError("variant rag_ppo needs ppo.eval_steps > 0");
      break;
    case Variant::RagStatic:
      break;
  }
  if (items_path.empty()) throw ConfigError("data.items is required");
  if (v != Variant::BaseNoContext && corpus_path.empty())
    throw ConfigError(fmt::format("variant {} needs data.corpus", variant_name(v)));
  if (retrieval.price_context && prices_path.empty())
    throw ConfigError("retrieval.price_context needs data.prices");
  // rag_static with k = 0 is allowed: it is the no-context baseline under another name.
  if (v != Variant::BaseNoContext && v != Variant::RagStatic && retrieval.k == 0)
    throw ConfigError(fmt::format("variant {} needs retrieval.k > 0", variant_name(v)));
  if (embedder == EmbedderKind::Precomputed && embeddings_path.empty())
    throw ConfigError("embedding.kind = precomputed needs embedding.path");
  if (embedder == EmbedderKind::Remote && embedding_endpoint.url.empty())
    throw ConfigError("embedding.kind = remote needs embedding.url or SENTIRAG_EMBEDDING_URL");
  if (backend == BackendKind::Remote && classifier_endpoint.url.empty())
    throw ConfigError("backend.kind = remote needs backend.url or SENTIRAG_CLASSIFIER_URL");
}

ExperimentData load_experiment_data(const ExperimentConfig& config) {
  ExperimentData d;
  if (!config.sources_path.empty())
    d.registry = SourceRegistry::load(config.sources_path);
  else if (config.inline_sources)
    d.registry = *config.inline_sources;
  else
    d.registry = SourceRegistry::default_preset();
  if (config.weights_preset == "uniform")
    d.registry = SourceRegistry::uniform(d.registry.initial_weights().names());

  if (!config.corpus_path.empty()) {
    IngestOptions opts;
    opts.unknown_source = config.unknown_source;
    d.ingest = ingest_corpus(config.corpus_path, d.corpus, d.registry, opts);
  }
  d.items = load_test_items(config.items_path);
  std::stable_sort(d.items.begin(), d.items.end(), [](const TestItem& a, const TestItem& b) {
    return a.query.date != b.query.date ? a.query.date < b.query.date : a.query.id < b.query.id;
  });
  if (!config.prices_path.empty()) {
    auto loaded = load_prices_csv(config.prices_path);
    d.prices = std::move(loaded.store);
    d.price_errors = std::move(loaded.errors);
  }
  return d;
}

std::unique_ptr<EmbeddingProvider> make_embedder(const ExperimentConfig& config) {
  std::unique_ptr<EmbeddingProvider> inner;
  switch (config.embedder) {
    case EmbedderKind::Hash:
      inner = std::make_unique<HashEmbedder>(config.embedding_dim, config.embedding_seed);
      break;
    case EmbedderKind::Precomputed:
      inner = std::make_unique<PrecomputedEmbeddings>(
          PrecomputedEmbeddings::load(config.embeddings_path));
      break;
    case EmbedderKind::Remote:
      inner = std::make_unique<RemoteEmbedder>(config.embedding_endpoint, config.embedding_dim,
                                               config.embedding_max_in_flight);
      break;
  }
  return std::make_unique<CachedProvider>(std::move(inner));
}

std::unique_ptr<ClassifierBackend> make_backend(const ExperimentConfig& config) {
  switch (config.backend) {
    case BackendKind::Oracle:
      return std::make_unique<OracleClassifier>(config.oracle, config.seed);
    case BackendKind::Rule:
      return std::make_unique<RuleClassifier>(config.lexicon);
    case BackendKind::Remote:
      break;
  }
  return std::make_unique<RemoteClassifier>(config.classifier_endpoint);
}

WeightPlotData emit_weight_plot_data(const std::vector<std::string>& sources,
                                     const std::vector<std::vector<double>>& trajectory) {
  if (trajectory.empty()) throw InputError("weight trajectory is empty");
  for (const auto& row : trajectory)
    if (row.size() != sources.size())
      throw InputError("weight trajectory row does not match the source list");
  WeightPlotData d;
  d.sources = sources;
  d.trajectory = trajectory;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    WeightSummaryRow row;
    row.source = sources[i];
    row.initial = trajectory.front()[i];
    row.final_weight = trajectory.back()[i];
    row.flagged = row.final_weight < kZeroedWeight;
    d.summary.push_back(row);
    d.initial_labels.push_back(fmt::format("{} {:.2f}%", sources[i], 100.0 * row.initial));
  }
  return d;
}

void write_weight_plot_data(const std::string& dir, const WeightPlotData& data) {
  write_weight_trajectory((fs::path(dir) / "weights.csv").string(), data.sources, data.trajectory);
  std::vector<std::string> lines{"source,initial,final,flagged"};
  for (const auto& r : data.summary)
    lines.push_back(fmt::format("{},{:.17g},{:.17g},{}", csv_escape(r.source), r.initial,
                                r.final_weight, r.flagged ? 1 : 0));
  write_lines((fs::path(dir) / "weights_summary.csv").string(), lines);
}

nlohmann::json ExperimentReport::metrics_json() const {
  nlohmann::json m;
  m["accuracy"] = accuracy;
  m["weighted_f1"] = weighted_f1;
  m["per_class_f1"] = {{"positive", per_class_f1[0]},
                       {"negative", per_class_f1[1]},
                       {"neutral", per_class_f1[2]}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : confusion.counts) rows.push_back(row);
  m["confusion"] = {{"labels", {"positive", "negative", "neutral"}}, {"counts", rows}};
  m["evaluated"] = confusion.total();
  m["excluded"] = confusion.excluded;
  return m;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["variant"] = std::string(variant_name(variant));
  j["metrics"] = metrics_json();
  nlohmann::json w;
  w["sources"] = weights.sources;
  w["initial"] = weights.trajectory.front();
  w["final"] = weights.trajectory.back();
  w["initial_summary"] = weights.initial_labels;
  nlohmann::json flagged = nlohmann::json::array();
  for (const auto& r : weights.summary)
    if (r.flagged) flagged.push_back(r.source);
  w["flagged_below_0_02"] = flagged;
  j["weights"] = w;
  j["ingest"] = {{"accepted", ingest.accepted},
                 {"per_source", ingest.per_source},
                 {"rejected", ingest.rejected},
                 {"auto_registered", ingest.auto_registered}};
  std::size_t errors = 0;
  for (const auto& p : predictions)
    if (!p.error.empty()) ++errors;
  j["prediction_errors"] = errors;
  if (!events.empty()) {
    std::map<std::string, std::size_t> outcomes;
    for (const auto& e : events) ++outcomes[std::string(outcome_name(e.outcome))];
    j["feedback_outcomes"] = outcomes;
  }
  return j;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentConfig config = cfg;
  config.finalize_for(cfg.variant);
  auto data = load_experiment_data(config);
  auto embedder = make_embedder(config);
  auto backend = make_backend(config);
  RagPipeline pipeline(data.corpus, *embedder, config.lexicon, config.retrieval,
                       data.prices ? &*data.prices : nullptr);
  const SourceWeights& initial = data.registry.initial_weights();
  const auto& sources = initial.names();

  ExperimentReport report;
  report.variant = config.variant;
  report.ingest = data.ingest;
  std::vector<std::vector<double>> trajectory;

  switch (config.variant) {
    case Variant::BaseNoContext:
    case Variant::RagStatic:
      report.predictions = evaluate_static(data.items, pipeline, *backend, initial, config.seed,
                                           config.threads);
      trajectory.push_back(initial.values());
      break;
    case Variant::RagFeedbackCosine:
    case Variant::RagFeedbackWoc: {
      auto fb = run_feedback_epoch(data.items, pipeline, *backend, initial, config.feedback);
      report.predictions = std::move(fb.predictions);
      report.events = std::move(fb.events);
      trajectory = std::move(fb.trajectory);
      break;
    }
    case Variant::RagPpo: {
      auto ckpt = load_checkpoint(config.checkpoint_path);
      if (ckpt.sources != sources)
        throw ConfigError("checkpoint sources do not match the configured registry");
      std::size_t usable = labeled_count(data.items);
      if (usable == 0) throw InputError("rag_ppo needs labeled items to roll out the policy");
      SourceWeightEnv env(data.items, pipeline, *backend, initial, config.env);
      auto states = rollout(env, mix_seed(config.seed, 0x9e3779b97f4a7c15ULL),
                            std::min(config.ppo_eval_steps, usable), &ckpt.policy)
                        .states;
      auto learned = extract_policy_weights(ckpt.policy, states, sources);
      report.predictions = evaluate_static(data.items, pipeline, *backend, learned, config.seed,
                                           config.threads);
      trajectory = {initial.values(), learned.values()};
      break;
    }
  }

  report.confusion = confusion_from_records(report.predictions);
  if (report.confusion.total() == 0)
    throw InputError("no item could be evaluated (all Unknown or failed)");
  report.accuracy = accuracy(report.confusion);
  report.weighted_f1 = weighted_f1(report.confusion);
  report.per_class_f1 = per_class_f1(report.confusion);
  report.weights = emit_weight_plot_data(sources, trajectory);
  return report;
}

void write_experiment_outputs(const std::string& dir, const ExperimentReport& report,
                              bool audit_prompts) {
  fs::create_directories(dir);
  auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };
  write_lines(path("report.json"), {report.to_json().dump(2)});

  std::vector<std::string> cm{"truth,positive,negative,neutral"};
  for (std::size_t t = 0; t < 3; ++t)
    cm.push_back(fmt::format("{},{},{},{}", label_name(kKnownLabels[t]),
                             report.confusion.counts[t][0], report.confusion.counts[t][1],
                             report.confusion.counts[t][2]));
  write_lines(path("confusion.csv"), cm);

  write_weight_plot_data(dir, report.weights);

  std::vector<std::string> preds;
  for (const auto& r : report.predictions) preds.push_back(record_json(r).dump());
  write_lines(path("predictions.jsonl"), preds);

  if (!report.events.empty()) write_event_log(path("events.jsonl"), report.events);
  if (audit_prompts) {
    std::vector<std::string> lines;
    for (const auto& r : report.predictions) {
      nlohmann::json j;
      j["query_id"] = r.query_id;
      j["prompt"] = r.prompt;
      j["selected_ids"] = r.selected_ids;
      j["scores"] = r.scores;
      lines.push_back(j.dump());
    }
    write_lines(path("prompts.jsonl"), lines);
  }
}

PpoTrainOutcome run_ppo_training(const ExperimentConfig& cfg, const std::string& out_dir) {
  ExperimentConfig config = cfg;
  if (config.items_path.empty()) throw ConfigError("data.items is required");
  if (config.corpus_path.empty()) throw ConfigError("ppo training needs data.corpus");
  if (config.retrieval.k == 0) throw ConfigError("ppo training needs retrieval.k > 0");
  auto data = load_experiment_data(config);
  auto embedder = make_embedder(config);
  auto backend = make_backend(config);
  RagPipeline pipeline(data.corpus, *embedder, config.lexicon, config.retrieval,
                       data.prices ? &*data.prices : nullptr);
  const SourceWeights& initial = data.registry.initial_weights();
  SourceWeightEnv env(data.items, pipeline, *backend, initial, config.env);

  PpoTrainOutcome out;
  out.result = ppo_train(env, config.ppo);
  out.config_hash = hyperparams_hash(config.ppo, initial.names(), config.env);
  std::size_t eval = std::min(config.ppo_eval_steps, labeled_count(data.items));
  auto states = rollout(env, mix_seed(config.seed, 0x9e3779b97f4a7c15ULL), std::max<std::size_t>(eval, 1),
                        &out.result.policy)
                    .states;
  out.extracted = extract_policy_weights(out.result.policy, states, initial.names());

  fs::create_directories(out_dir);
  save_checkpoint((fs::path(out_dir) / "policy.json").string(),
                  {out.result.policy, out.result.value, initial.names(), config.ppo,
                   out.config_hash});
  write_training_report((fs::path(out_dir) / "training.csv").string(), out.result.report);
  write_weight_plot_data(out_dir, emit_weight_plot_data(initial.names(),
                                                        {initial.values(), out.extracted.values()}));
  return out;
}

}  // namespace sentirag
