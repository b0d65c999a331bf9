// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Every expected value is recomputed here from first principles rather than
// taken from the library under test.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>
#include <json.hpp>

#include "sentirag/corpus.hpp"
#include "sentirag/error.hpp"
#include "sentirag/feedback.hpp"
#include "sentirag/marketdata.hpp"
#include "sentirag/metrics.hpp"
#include "sentirag/ppo.hpp"
#include "sentirag/retrieval.hpp"
#include "sentirag/rng.hpp"
#include "sentirag/synthetic.hpp"

using namespace sentirag;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / fmt::format("sentirag_acceptance_{}_{}", ::getpid(), name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = fmt::format("\"{}\" {} > \"{}\" 2>&1", SENTIRAG_CLI, args, log.string());
  int rc = std::system(cmd.c_str());
  return rc;
}

// ---- 1. labeling -----------------------------------------------------------

SentimentLabel naive_label(const std::map<Date, double>& opens, Date headline, int window) {
  auto next = opens.upper_bound(headline);
  if (next == opens.end() || next == opens.begin()) return SentimentLabel::Unknown;
  auto prev = std::prev(next);
  double r = (next->second - prev->second) / prev->second;
  // Returns dated strictly before the trade day, most recent `window` of them.
  std::vector<double> prior;
  for (auto it = std::next(opens.begin()); it != next; ++it) {
    auto before = std::prev(it);
    prior.push_back((it->second - before->second) / before->second);
  }
  if (prior.size() < static_cast<std::size_t>(window)) return SentimentLabel::Unknown;
  double mean = 0.0;
  for (std::size_t i = prior.size() - window; i < prior.size(); ++i) mean += prior[i];
  mean /= window;
  double ss = 0.0;
  for (std::size_t i = prior.size() - window; i < prior.size(); ++i)
    ss += (prior[i] - mean) * (prior[i] - mean);
  double sd = std::sqrt(ss / (window - 1));
  if (r > mean + sd) return SentimentLabel::Positive;
  if (r < mean - sd) return SentimentLabel::Negative;
  return SentimentLabel::Neutral;
}

Outcome criterion_labeling() {
  auto t0 = Clock::now();
  auto market = make_synthetic_market(5, 250, 400, 2024);
  auto dir = scratch_dir("labels");
  write_prices_csv((dir / "prices.csv").string(), market.bars);
  auto loaded = load_prices_csv((dir / "prices.csv").string());

  std::map<std::string, std::map<Date, double>> opens;
  for (const auto& b : market.bars) opens[b.symbol][b.date] = b.open;

  std::size_t agree = 0, known = 0, weekend = 0;
  for (const auto& h : market.headlines) {
    auto got = market_label(loaded.store, h.symbol, h.date).label;
    auto want = naive_label(opens[h.symbol], h.date, kDefaultRollingWindow);
    agree += got == want;
    known += want != SentimentLabel::Unknown;
    weekend += is_weekend(h.date);
  }
  double secs = seconds_since(t0);
  fs::remove_all(dir);
  std::size_t n = market.headlines.size();
  bool pass = agree == n && secs < 5.0 && loaded.errors.empty() && known > 0 && weekend > 0;
  return {pass, fmt::format("{}/{} headlines agree ({} labeled, {} on weekends), {:.2f}s < 5s",
                            agree, n, known, weekend, secs)};
}

// ---- 2. metrics ------------------------------------------------------------

Outcome criterion_metrics() {
  std::mt19937_64 gen(2);
  ConfusionMatrix cm;
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < 1000; ++i) {
    int t = static_cast<int>(gen() % 3);
    int p = gen() % 4 == 0 ? static_cast<int>(gen() % 3) : t;
    if (gen() % 7 == 0) p = (t + 1) % 3;
    pairs.emplace_back(t, p);
    cm.add(kKnownLabels[t], kKnownLabels[p]);
  }
  double correct = 0;
  for (auto [t, p] : pairs) correct += t == p;
  double want_acc = correct / pairs.size();
  double want_f1 = 0.0;
  for (int c = 0; c < 3; ++c) {
    double tp = 0, fp = 0, fn = 0, support = 0;
    for (auto [t, p] : pairs) {
      support += t == c;
      tp += t == c && p == c;
      fp += t != c && p == c;
      fn += t == c && p != c;
    }
    double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    want_f1 += support / pairs.size() * f1;
  }
  double da = std::abs(accuracy(cm) - want_acc), df = std::abs(weighted_f1(cm) - want_f1);
  return {da <= 1e-12 && df <= 1e-12,
          fmt::format("accuracy {:.6f} (|diff| {:.1e}), weighted F1 {:.6f} (|diff| {:.1e}), tol 1e-12",
                      want_acc, da, want_f1, df)};
}

// ---- 3. simplex ------------------------------------------------------------

Outcome criterion_simplex() {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t failures = 0, calls = 0;
  for (int i = 0; i < 10000; ++i) {
    std::size_t n = 2 + gen() % 10;
    std::vector<std::string> names;
    std::vector<double> raw(n);
    for (std::size_t j = 0; j < n; ++j) {
      names.push_back(fmt::format("src{}", j));
      raw[j] = u(gen) < 0.15 ? 0.0 : u(gen);
    }
    raw[gen() % n] += 1e-3;
    auto w = SourceWeights::normalized(names, raw);
    std::vector<std::string> contributing;
    for (const auto& s : names)
      if (u(gen) < 0.4) contributing.push_back(s);
    if (contributing.empty()) contributing.push_back(names[gen() % n]);
    double alpha = std::pow(10.0, -5.0 + 3.0 * u(gen));  // [1e-5, 1e-2]
    auto out = update_weights(w, contributing,
                              u(gen) < 0.5 ? Alignment::Aligned : Alignment::Misaligned, alpha);
    ++calls;
    double sum = 0.0;
    bool ok = true;
    for (double v : out.values()) {
      ok = ok && v >= 0.0 && v <= 1.0;
      sum += v;
    }
    if (!ok || std::abs(sum - 1.0) > 1e-9) ++failures;
  }
  return {failures == 0, fmt::format("{} failures in {} random updates", failures, calls)};
}

// ---- 4 and 5. synthetic convergence ----------------------------------------

const std::vector<double> kFidelities{0.9, 0.7, 0.5, 0.5, 0.3};

struct Harness {
  SyntheticWorld world;
  HashEmbedder base;
  CachingEmbedder emb{base};
  RagPipeline pipeline;
  OracleClassifier oracle;

  explicit Harness(std::uint64_t seed)
      : world(make_synthetic_world(synthetic_config(kFidelities, seed))),
        pipeline(world.corpus, emb, SentimentCueLexicon::default_finance(), RetrievalConfig{}),
        oracle(world.oracle, seed) {}
};

Outcome criterion_feedback() {
  auto t0 = Clock::now();
  int passing = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Harness h(seed);
    auto r = run_feedback_epoch(h.world.items, h.pipeline, h.oracle,
                                h.world.registry.initial_weights(), {1e-3, 0.005, seed});
    const auto& w = r.final_weights.values();
    bool strict_max = true;
    for (std::size_t i = 1; i < w.size(); ++i) strict_max = strict_max && w[0] > w[i];
    bool ok = h.world.items.size() == 2000 && w[0] >= 0.3 && strict_max && w[4] <= 0.1;
    passing += ok;
    per_seed += fmt::format(" s{}:{:.3f}/{:.3f}{}", seed, w[0], w[4], ok ? "" : "(x)");
  }
  double secs = seconds_since(t0);
  return {passing >= 4 && secs < 30.0,
          fmt::format("{}/5 seeds with w(0.9) >= 0.3 and max, w(0.3) <= 0.1;{}; {:.1f}s < 30s",
                      passing, per_seed, secs)};
}

Outcome criterion_ppo() {
  auto t0 = Clock::now();
  int passing = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Harness h(seed);
    SourceWeightEnv env(h.world.items, h.pipeline, h.oracle, h.world.registry.initial_weights());
    PpoHyperparams hp;
    hp.total_steps = 5000;
    hp.seed = seed;
    auto trained = ppo_train(env, hp);
    auto eval = rollout(env, seed + 100, 500, &trained.policy);
    auto uniform = rollout(env, seed + 100, 500, nullptr, h.world.registry.initial_weights().values());
    double gain = eval.mean_reward() - uniform.mean_reward();
    auto w = extract_policy_weights(trained.policy, eval.states,
                                    h.world.registry.initial_weights().names());
    double lowest = *std::min_element(w.values().begin(), w.values().end());
    bool ok = gain >= 0.15 && lowest < 0.02;
    passing += ok;
    per_seed += fmt::format(" s{}:+{:.3f},min {:.4f}{}", seed, gain, lowest, ok ? "" : "(x)");
  }
  double secs = seconds_since(t0);
  return {passing >= 4 && secs < 120.0,
          fmt::format("{}/5 seeds with reward gain >= 0.15 and a weight < 0.02;{}; {:.1f}s < 120s",
                      passing, per_seed, secs)};
}

// ---- 6. gradient check -----------------------------------------------------

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(num) / scale;
}

std::vector<double> central_difference(const std::vector<double>& x,
                                       const std::function<double(const std::vector<double>&)>& f) {
  const double h = 1e-5;
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    auto plus = x, minus = x;
    plus[k] += h;
    minus[k] -= h;
    g[k] = (f(plus) - f(minus)) / (2 * h);
  }
  return g;
}

Outcome criterion_gradients() {
  double worst_policy = 0.0, worst_value = 0.0;
  std::size_t checked = 0;
  const double eps = 0.2;
  for (std::uint64_t net = 0; net < 20; ++net) {
    Rng rng(1000 + net);
    std::size_t sd = 3 + net % 4, na = 2 + net % 3;
    std::vector<std::size_t> hidden{4 + net % 3, 3 + net % 2};
    GaussianSoftmaxPolicy policy(sd, na, hidden, rng, rng.uniform(-0.5, 0.2));
    for (double& x : policy.params()) x += rng.uniform(-0.3, 0.3);
    ValueFunction value(sd, hidden, rng);

    Trajectory batch;
    std::vector<double> adv, targets;
    for (int i = 0; i < 6; ++i) {
      std::vector<double> s(sd);
      for (double& x : s) x = rng.uniform(-1.0, 1.0);
      auto a = policy.sample(s, rng);
      batch.push_back({s, s, a.logits, a.log_prob, 1.0, 0.0});
      adv.push_back(rng.uniform(-2.0, 2.0));
      targets.push_back(rng.uniform(-2.0, 2.0));
    }
    std::vector<double> theta = policy.params();
    for (double& x : theta) x += rng.uniform(-0.05, 0.05);

    for (std::size_t i = 0; i < batch.size(); ++i) {
      std::span<const TrajectoryStep> one(&batch[i], 1);
      std::span<const double> a1(&adv[i], 1);
      double ratio = std::exp(policy.log_prob(theta, batch[i].state, batch[i].logits) -
                              batch[i].log_prob);
      if (std::abs(ratio - (1 - eps)) < 1e-3 || std::abs(ratio - (1 + eps)) < 1e-3) continue;
      std::vector<double> g(theta.size(), 0.0);
      surrogate_objective(policy, theta, one, a1, eps, g);
      auto fd = central_difference(
          theta, [&](const std::vector<double>& p) { return surrogate_objective(policy, p, one, a1, eps); });
      worst_policy = std::max(worst_policy, rel_error(g, fd));
      ++checked;
    }
    std::vector<double> vg(value.params().size(), 0.0);
    value_loss(value, value.params(), batch, targets, vg);
    auto vfd = central_difference(value.params(), [&](const std::vector<double>& p) {
      return value_loss(value, p, batch, targets);
    });
    worst_value = std::max(worst_value, rel_error(vg, vfd));
  }
  bool pass = worst_policy < 1e-4 && worst_value < 1e-4 && checked > 0;
  return {pass, fmt::format("20 networks, {} surrogate checks: max rel error policy {:.2e}, "
                            "value {:.2e} (< 1e-4)",
                            checked, worst_policy, worst_value)};
}

// ---- 7 and 10. CLI runs ----------------------------------------------------

Outcome criterion_lattice() {
  auto dir = scratch_dir("lattice");
  if (run_cli(fmt::format("synth --out \"{}\" --seed 11 --alpha 0 --symbols 8 --days 40",
                          (dir / "world").string()),
              dir / "synth.log") != 0)
    return {false, "synth failed: " + slurp(dir / "synth.log")};
  auto conf = dir / "world" / "experiment.conf";
  {
    std::ofstream out(conf, std::ios::app);
    out << "\n[run]\naudit_prompts = on\n";
  }
  for (const char* v : {"rag_static", "rag_feedback_cosine", "base_no_context"})
    if (run_cli(fmt::format("run --config \"{}\" --variant {} --out \"{}\"", conf.string(), v,
                            (dir / v).string()),
                dir / "run.log") != 0)
      return {false, fmt::format("run {} failed: {}", v, slurp(dir / "run.log"))};

  auto metrics = [&](const char* v) {
    return json::parse(slurp(dir / v / "report.json")).at("metrics").dump();
  };
  bool same = metrics("rag_static") == metrics("rag_feedback_cosine");

  std::vector<std::string> prompts;
  std::ifstream in(dir / "base_no_context" / "prompts.jsonl");
  for (std::string line; std::getline(in, line);)
    prompts.push_back(json::parse(line).at("prompt").get<std::string>());
  std::mt19937_64 gen(7);
  std::shuffle(prompts.begin(), prompts.end(), gen);
  std::size_t sampled = std::min<std::size_t>(100, prompts.size()), context_lines = 0;
  const std::string bare_prefix =
      "<s>[INST] Classify the sentiment of the following financial sentence: ";
  for (std::size_t i = 0; i < sampled; ++i) {
    const auto& p = prompts[i];
    bool bare = p.rfind(bare_prefix, 0) == 0 && p.find('\n') == std::string::npos &&
                p.size() > bare_prefix.size() + 8 && p.ends_with(" [/INST]");
    context_lines += !bare;
  }
  fs::remove_all(dir);
  return {same && sampled == 100 && context_lines == 0,
          fmt::format("alpha=0 feedback metrics {} rag_static; {} sampled base prompts, {} with "
                      "context",
                      same ? "byte-identical to" : "DIFFER from", sampled, context_lines)};
}

Outcome criterion_determinism() {
  auto dir = scratch_dir("determinism");
  if (run_cli(fmt::format("synth --out \"{}\" --seed 5 --symbols 8 --days 60",
                          (dir / "world").string()),
              dir / "synth.log") != 0)
    return {false, "synth failed: " + slurp(dir / "synth.log")};
  auto conf = (dir / "world" / "experiment.conf").string();
  for (const char* run : {"a", "b"})
    if (run_cli(fmt::format("run --config \"{}\" --variant rag_feedback_cosine --out \"{}\"", conf,
                            (dir / run).string()),
                dir / "run.log") != 0)
      return {false, "run failed: " + slurp(dir / "run.log")};
  auto ra = slurp(dir / "a" / "report.json"), rb = slurp(dir / "b" / "report.json");
  auto wa = slurp(dir / "a" / "weights.csv"), wb = slurp(dir / "b" / "weights.csv");
  bool moved = wa.find("\n1,") != std::string::npos;
  fs::remove_all(dir);
  bool pass = !ra.empty() && ra == rb && !wa.empty() && wa == wb && moved;
  return {pass, fmt::format("report.json {} ({} bytes), weights.csv {} ({} bytes)",
                            ra == rb ? "identical" : "DIFFERS", ra.size(),
                            wa == wb ? "identical" : "DIFFERS", wa.size())};
}

// ---- 8. retrieval ----------------------------------------------------------

Outcome criterion_retrieval() {
  std::mt19937_64 gen(8);
  const std::vector<std::string> vocab{"tcs",    "orders", "margin", "deal",  "board", "guidance",
                                       "export", "plant",  "stake",  "bonds", "fund",  "cloud"};
  const std::vector<std::string> sources{"A", "B", "C", "D", "Z1", "Z2"};
  auto weights = SourceWeights::normalized(sources, {0.4, 0.3, 0.2, 0.1, 0.0, 0.0});
  const std::vector<std::string> symbols{"AAA", "BBB", "CCC"};
  CorpusStore corpus;
  for (int i = 0; i < 1000; ++i) {
    std::string h;
    for (int j = 0; j < 3; ++j) h += vocab[gen() % 5 + (j == 2 ? gen() % 7 : 0)] + " ";
    corpus.add({fmt::format("n{:04d}", i), h, sources[gen() % sources.size()],
                symbols[gen() % symbols.size()], make_date(2024, 5, 1 + gen() % 10)});
  }
  HashEmbedder emb(32, 4);
  RetrievalConfig cfg;
  cfg.k = 5;
  cfg.use_cue_filter = false;
  RagPipeline rag(corpus, emb, SentimentCueLexicon::default_finance(), cfg);

  auto vec = [&](const NewsItem& n) { return emb.embed(n.id, n.headline).values; };
  auto cos = [](const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] * b[i], na += a[i] * a[i], nb += b[i] * b[i];
    return d / (std::sqrt(na) * std::sqrt(nb));
  };

  std::size_t mismatches = 0, zero_weight = 0, selected = 0;
  for (int q = 0; q < 200; ++q) {
    const NewsItem& query = corpus.items()[gen() % corpus.size()];
    auto built = rag.build(query, weights);
    struct Row { double score; Date date; std::string id; };
    std::vector<Row> oracle;
    auto qv = vec(query);
    for (const auto& n : corpus.items()) {
      if (n.id == query.id || n.symbol != query.symbol) continue;
      if (std::abs((n.date - query.date).count()) > 1) continue;
      double w = weights.weight(n.source);
      if (!(w > 0.0)) continue;
      oracle.push_back({cos(qv, vec(n)) * w, n.date, n.id});
    }
    std::sort(oracle.begin(), oracle.end(), [](const Row& a, const Row& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.date != b.date) return a.date > b.date;
      return a.id < b.id;
    });
    oracle.resize(std::min<std::size_t>(oracle.size(), cfg.k));
    const auto& got = built.bundle.selected;
    bool same = got.size() == oracle.size();
    for (std::size_t i = 0; same && i < got.size(); ++i)
      same = got[i].item.id == oracle[i].id && std::abs(got[i].weighted_score - oracle[i].score) < 1e-12;
    mismatches += !same;
    for (const auto& c : got) {
      ++selected;
      zero_weight += !(weights.weight(c.item.source) > 0.0);
    }
  }
  return {mismatches == 0 && zero_weight == 0 && selected > 0,
          fmt::format("200 queries, 1000 items: {} top-k mismatches, {} zero-weight selections "
                      "among {}",
                      mismatches, zero_weight, selected)};
}

// ---- 9. ingestion ----------------------------------------------------------

Outcome criterion_ingestion() {
  const std::vector<std::pair<std::string, std::size_t>> table{
      {"Business Standard", 1031}, {"NDTV Profit", 1002}, {"Financial Express", 830},
      {"The Economic Times", 743}, {"Mint", 699},         {"MoneyControl", 585},
      {"Business Today", 449},     {"ET Now", 335}};
  std::vector<std::pair<std::string, std::size_t>> rows;
  for (const auto& [s, n] : table)
    for (std::size_t i = 0; i < n; ++i) rows.emplace_back(s, i);
  std::mt19937_64 gen(9);
  std::shuffle(rows.begin(), rows.end(), gen);

  auto dir = scratch_dir("ingest");
  {
    std::ofstream out(dir / "corpus.csv");
    out << "id,headline,source,symbol,date\n";
    std::size_t k = 0;
    for (const auto& [s, i] : rows) {
      // Some headlines carry markup and commas to exercise the normalizer and CSV quoting.
      std::string headline = k % 5 == 0 ? fmt::format("\"<b>Stock {}</b>, update {}\"", i, k)
                                        : fmt::format("Stock {} update {}", i, k);
      out << fmt::format("item{:05d},{},{},SYM{},2024-{:02d}-{:02d}\n", k, headline, s, k % 40,
                         1 + k % 12, 1 + k % 28);
      ++k;
    }
  }
  auto registry = SourceRegistry::default_preset();
  CorpusStore store;
  auto report = ingest_corpus((dir / "corpus.csv").string(), store, registry);
  fs::remove_all(dir);

  std::size_t expected_total = 0, matched = 0;
  for (const auto& [s, n] : table) {
    expected_total += n;
    auto it = report.per_source.find(s);
    matched += it != report.per_source.end() && it->second == n;
  }
  std::size_t reported_nonzero = 0;
  for (const auto& [s, n] : report.per_source) reported_nonzero += n > 0;
  bool pass = matched == table.size() && reported_nonzero == table.size() &&
              report.accepted == expected_total && report.rejected_total() == 0;
  return {pass, fmt::format("{}/{} sources match, {} accepted of {}, {} rejected", matched,
                            table.size(), report.accepted, expected_total, report.rejected_total())};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "labeling matches naive recomputation", criterion_labeling},
      {2, "metrics match brute force", criterion_metrics},
      {3, "weight updates stay on the simplex", criterion_simplex},
      {4, "market feedback favours the reliable source", criterion_feedback},
      {5, "PPO beats uniform weights and zeroes a source", criterion_ppo},
      {6, "analytic gradients match finite differences", criterion_gradients},
      {7, "variant reduction lattice", criterion_lattice},
      {8, "top-k retrieval matches brute-force sort", criterion_retrieval},
      {9, "ingestion reproduces per-source counts", criterion_ingestion},
      {10, "end-to-end run determinism", criterion_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    failed += !o.pass;
    std::printf("%s criterion %d: %s -- %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
