// sentirag command-line front end: ingest, label, run, ppo-train, report, synth.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "sentirag/error.hpp"
#include "sentirag/experiment.hpp"
#include "sentirag/synthetic.hpp"

namespace fs = std::filesystem;
using namespace sentirag;
using nlohmann::json;

namespace {

int fail(std::string_view kind, std::string_view message, int code) {
  json err = {{"error", {{"type", kind}, {"message", message}}}};
  std::cerr << err.dump() << '\n';
  return code;
}

json ingest_json(const IngestReport& r) {
  std::vector<std::string> errors = r.errors;
  return {{"accepted", r.accepted},
          {"per_source", r.per_source},
          {"rejected", r.rejected},
          {"rejected_total", r.rejected_total()},
          {"auto_registered", r.auto_registered},
          {"errors", errors}};
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto v = parse_double(trim(tok));
    if (!v) throw ConfigError(fmt::format("`{}` is not a number", tok));
    out.push_back(*v);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write `{}`", path.string()));
  out << text;
}

struct IngestArgs {
  std::string corpus, prices, sources, unknown = "auto_register", out;
};

int cmd_ingest(const IngestArgs& a) {
  json result;
  if (!a.corpus.empty()) {
    SourceRegistry registry =
        a.sources.empty() ? SourceRegistry::default_preset() : SourceRegistry::load(a.sources);
    IngestOptions opts;
    if (a.unknown == "reject")
      opts.unknown_source = UnknownSourcePolicy::Reject;
    else if (a.unknown != "auto_register")
      throw ConfigError("--unknown-source must be auto_register or reject");
    CorpusStore store;
    auto report = ingest_corpus(a.corpus, store, registry, opts);
    result["corpus"] = ingest_json(report);
    if (!a.out.empty()) write_news_jsonl(a.out, store.items());
  }
  if (!a.prices.empty()) {
    auto loaded = load_prices_csv(a.prices);
    result["prices"] = {{"rows_accepted", loaded.rows_accepted},
                        {"symbols", loaded.store.symbols()},
                        {"errors", loaded.errors}};
  }
  if (result.is_null()) throw ConfigError("ingest needs --corpus and/or --prices");
  std::cout << result.dump(2) << '\n';
  return 0;
}

struct LabelArgs {
  std::string prices, headlines, out;
  int window = kDefaultRollingWindow;
};

int cmd_label(const LabelArgs& a) {
  auto loaded = load_prices_csv(a.prices);
  auto headlines = load_headlines(a.headlines);
  std::vector<TestItem> items;
  std::map<std::string, std::size_t> counts;
  for (auto& h : headlines) {
    TestItem t;
    auto ml = market_label(loaded.store, h.symbol, h.date, a.window);
    t.query = std::move(h);
    t.truth = ml.label;
    t.next_day_return = ml.next_day_return;
    t.trade_date = ml.trade_date;
    ++counts[std::string(label_name(t.truth))];
    items.push_back(std::move(t));
  }
  write_test_items(a.out, items);
  std::cout << json{{"items", items.size()},
                    {"labels", counts},
                    {"price_errors", loaded.errors}}
                   .dump(2)
            << '\n';
  return 0;
}

struct RunArgs {
  std::string config, variant, out;
};

int cmd_run(const RunArgs& a) {
  auto config = ExperimentConfig::load(a.config);
  config.variant = variant_from_name(a.variant);
  auto report = run_experiment(config);
  write_experiment_outputs(a.out, report, config.audit_prompts);
  std::cout << json{{"variant", a.variant}, {"out", a.out}, {"metrics", report.metrics_json()}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_ppo_train(const RunArgs& a) {
  auto config = ExperimentConfig::load(a.config);
  auto outcome = run_ppo_training(config, a.out);
  std::map<std::string, double> weights;
  for (std::size_t i = 0; i < outcome.extracted.size(); ++i)
    weights[outcome.extracted.names()[i]] = outcome.extracted.values()[i];
  double last = outcome.result.report.empty() ? 0.0 : outcome.result.report.back().mean_reward;
  std::cout << json{{"steps", outcome.result.steps},
                    {"batches", outcome.result.report.size()},
                    {"final_batch_mean_reward", last},
                    {"config_hash", outcome.config_hash},
                    {"extracted_weights", weights},
                    {"checkpoint", (fs::path(a.out) / "policy.json").string()}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_report(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "report.json");
  if (!in) throw InputError(fmt::format("no report.json in `{}`", dir));
  json r;
  try {
    r = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(fmt::format("report.json: {}", e.what()));
  }
  const auto& m = r.at("metrics");
  std::cout << fmt::format("variant      {}\n", r.at("variant").get<std::string>());
  std::cout << fmt::format("accuracy     {:.4f}\n", m.at("accuracy").get<double>());
  std::cout << fmt::format("weighted F1  {:.4f}\n", m.at("weighted_f1").get<double>());
  for (const char* c : {"positive", "negative", "neutral"})
    std::cout << fmt::format("  F1 {:<9}{:.4f}\n", c, m.at("per_class_f1").at(c).get<double>());
  std::cout << fmt::format("evaluated    {}  excluded {}\n", m.at("evaluated").get<std::size_t>(),
                           m.at("excluded").get<std::size_t>());
  std::cout << "confusion (rows truth, columns predicted: positive negative neutral)\n";
  const auto& counts = m.at("confusion").at("counts");
  const char* names[] = {"positive", "negative", "neutral"};
  for (std::size_t i = 0; i < 3; ++i)
    std::cout << fmt::format("  {:<9}{:>7}{:>9}{:>8}\n", names[i], counts[i][0].get<long>(),
                             counts[i][1].get<long>(), counts[i][2].get<long>());
  const auto& w = r.at("weights");
  std::cout << "source weights (initial -> final)\n";
  const auto& src = w.at("sources");
  for (std::size_t i = 0; i < src.size(); ++i)
    std::cout << fmt::format("  {:<22}{:>7.2f}% -> {:>6.2f}%\n", src[i].get<std::string>(),
                             100.0 * w.at("initial")[i].get<double>(),
                             100.0 * w.at("final")[i].get<double>());
  if (!w.at("flagged_below_0_02").empty())
    std::cout << fmt::format("near zero    {}\n", w.at("flagged_below_0_02").dump());
  return 0;
}

struct SynthArgs {
  std::string out;
  std::uint64_t seed = 7;
  std::string fidelities = "0.9,0.7,0.5,0.5,0.3";
  std::size_t symbols = 20, days = 100;
  double alpha = 1e-3;
  bool market = false;
};

int cmd_synth(const SynthArgs& a) {
  auto cfg = synthetic_config(parse_doubles(a.fidelities), a.seed);
  cfg.symbols = a.symbols;
  cfg.days = a.days;
  auto world = make_synthetic_world(cfg);
  fs::path dir(a.out);
  fs::create_directories(dir);
  write_news_jsonl((dir / "corpus.jsonl").string(), world.corpus.items());
  write_test_items((dir / "items.jsonl").string(), world.items);
  write_text(dir / "sources.conf", world.registry.to_text());

  std::string conf = fmt::format(
      "# Synthetic world written by `sentirag synth --seed {}`\n"
      "[run]\nseed = {}\n\n"
      "[data]\ncorpus = corpus.jsonl\nitems = items.jsonl\nsources = sources.conf\n\n"
      "[retrieval]\nk = 3\nwindow_days = 3\nscorer = cosine\n\n"
      "[feedback]\nalpha = {}\nneutral_zone = 0.005\n\n"
      "[backend]\nkind = oracle\n\n[oracle]\nbase_rate = 0.5\n",
      a.seed, a.seed, a.alpha);
  for (std::size_t i = 0; i < cfg.sources.size(); ++i)
    conf += fmt::format("{} = {}\n", cfg.sources[i], cfg.fidelities[i]);
  conf += "\n[ppo]\ntotal_steps = 5000\ncheckpoint = ppo/policy.json\n";
  write_text(dir / "experiment.conf", conf);

  json summary = {{"out", a.out},
                  {"corpus_items", world.corpus.size()},
                  {"test_items", world.items.size()},
                  {"config", (dir / "experiment.conf").string()}};
  if (a.market) {
    auto market = make_synthetic_market(5, 250, 200, a.seed);
    write_prices_csv((dir / "prices.csv").string(), market.bars);
    write_news_jsonl((dir / "headlines.jsonl").string(), market.headlines);
    summary["prices"] = (dir / "prices.csv").string();
    summary["headlines"] = (dir / "headlines.jsonl").string();
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Market-grounded retrieval-augmented sentiment experiments"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Validate and count a news corpus and/or prices");
  c_ingest->add_option("--corpus", ingest.corpus, "News corpus (JSONL or CSV)");
  c_ingest->add_option("--prices", ingest.prices, "Daily open prices CSV");
  c_ingest->add_option("--sources", ingest.sources, "Source registry file");
  c_ingest->add_option("--unknown-source", ingest.unknown, "auto_register or reject");
  c_ingest->add_option("--out", ingest.out, "Write the normalized corpus as JSONL");

  LabelArgs label;
  auto* c_label = app.add_subcommand("label", "Label headlines from next-day returns");
  c_label->add_option("--prices", label.prices, "Daily open prices CSV")->required();
  c_label->add_option("--headlines", label.headlines, "Headlines (JSONL or CSV)")->required();
  c_label->add_option("--out", label.out, "Labeled items JSONL")->required();
  c_label->add_option("--window", label.window, "Rolling window in trading days");

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Run one experiment variant");
  c_run->add_option("--config", run.config)->required();
  c_run->add_option("--variant", run.variant)->required();
  c_run->add_option("--out", run.out)->required();

  RunArgs train;
  auto* c_train = app.add_subcommand("ppo-train", "Train the source-weighting policy");
  c_train->add_option("--config", train.config)->required();
  c_train->add_option("--out", train.out)->required();

  std::string report_dir;
  auto* c_report = app.add_subcommand("report", "Summarize an experiment output directory");
  c_report->add_option("--in", report_dir)->required();

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic world and its config");
  c_synth->add_option("--out", synth.out)->required();
  c_synth->add_option("--seed", synth.seed);
  c_synth->add_option("--fidelities", synth.fidelities, "Comma-separated oracle fidelities");
  c_synth->add_option("--symbols", synth.symbols);
  c_synth->add_option("--days", synth.days);
  c_synth->add_option("--alpha", synth.alpha, "Feedback rate written to the config");
  c_synth->add_flag("--market", synth.market, "Also write synthetic prices and headlines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    return fail("usage", e.what(), 64);
  }

  try {
    if (*c_ingest) return cmd_ingest(ingest);
    if (*c_label) return cmd_label(label);
    if (*c_run) return cmd_run(run);
    if (*c_train) return cmd_ppo_train(train);
    if (*c_report) return cmd_report(report_dir);
    if (*c_synth) return cmd_synth(synth);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const InputError& e) {
    return fail("input", e.what(), 3);
  } catch (const RetryableError& e) {
    return fail("unreachable", e.what(), 4);
  } catch (const DivergenceError& e) {
    return fail("divergence", e.what(), 5);
  } catch (const std::exception& e) {
    return fail("error", e.what(), 1);
  }
  return 1;
}
