#include "sentirag/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "sentirag/error.hpp"
#include "sentirag/text.hpp"

namespace sentirag {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxReportedErrors = 50;

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open {} `{}`", what, path));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void reject(IngestReport& report, std::size_t line_no, const std::string& reason,
            const std::string& detail = {}) {
  ++report.rejected[reason];
  if (report.errors.size() < kMaxReportedErrors)
    report.errors.push_back(detail.empty() ? fmt::format("line {}: {}", line_no, reason)
                                           : fmt::format("line {}: {}: {}", line_no, reason,
                                                         detail));
}

// Raw row before validation.
struct RawRow {
  std::string id, headline, source, symbol, date;
};

std::string json_string_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw InputError(fmt::format("field `{}` must be a string", key));
}

bool looks_like_jsonl(std::string_view text) {
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
    return c == '{';
  }
  return false;
}

// Calls `fn(line_no, row)` per record; malformed records go to `bad(line_no, why)`.
template <typename RowFn, typename BadFn>
void for_each_row(std::string_view text, RowFn fn, BadFn bad, bool require_source) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  if (looks_like_jsonl(text)) {
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      RawRow row;
      try {
        json obj = json::parse(line);
        if (!obj.is_object()) throw InputError("not a JSON object");
        row.id = json_string_field(obj, "id");
        row.headline = json_string_field(obj, "headline");
        row.source = json_string_field(obj, "source");
        row.symbol = json_string_field(obj, "symbol");
        row.date = json_string_field(obj, "date");
      } catch (const std::exception& e) {
        bad(line_no, "malformed_row", e.what());
        continue;
      }
      fn(line_no, row, line);
    }
    return;
  }
  std::vector<int> col(5, -1);  // id, headline, source, symbol, date
  std::size_t columns = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    try {
      f = split_csv_line(line);
    } catch (const InputError& e) {
      if (header) throw;
      bad(line_no, "malformed_row", e.what());
      continue;
    }
    if (header) {
      const char* names[] = {"id", "headline", "source", "symbol", "date"};
      for (std::size_t i = 0; i < f.size(); ++i)
        for (std::size_t k = 0; k < 5; ++k)
          if (to_lower(trim(f[i])) == names[k]) col[k] = static_cast<int>(i);
      for (std::size_t k = 0; k < 5; ++k)
        if (col[k] < 0 && !(k == 2 && !require_source))
          throw InputError(fmt::format("news CSV header lacks `{}`", names[k]));
      columns = f.size();
      header = false;
      continue;
    }
    if (f.size() != columns) {
      bad(line_no, "malformed_row", fmt::format("expected {} fields, got {}", columns, f.size()));
      continue;
    }
    auto at = [&](std::size_t k) {
      return col[k] < 0 ? std::string{} : f[static_cast<std::size_t>(col[k])];
    };
    fn(line_no, RawRow{at(0), at(1), at(2), at(3), at(4)}, line);
  }
}

std::optional<std::string> validate(RawRow& row, NewsItem& out, bool require_source) {
  row.id = trim(row.id);
  row.symbol = trim(row.symbol);
  row.source = trim(row.source);
  if (row.id.empty()) return "missing_id";
  out.headline = normalize_headline(row.headline);
  if (out.headline.empty()) return "blank_headline";
  if (row.symbol.empty()) return "missing_symbol";
  if (require_source && row.source.empty()) return "missing_source";
  auto date = parse_date(trim(row.date));
  if (!date) return "bad_date";
  out.id = row.id;
  out.source = row.source;
  out.symbol = row.symbol;
  out.date = *date;
  return std::nullopt;
}

}  // namespace

std::string normalize_headline(std::string_view raw) {
  std::string no_tags;
  no_tags.reserve(raw.size());
  bool in_tag = false;
  for (char c : raw) {
    if (in_tag) {
      if (c == '>') {
        in_tag = false;
        no_tags.push_back(' ');
      }
    } else if (c == '<') {
      in_tag = true;
    } else {
      no_tags.push_back(c);
    }
  }
  static const std::pair<std::string_view, std::string_view> kEntities[] = {
      {"&amp;", "&"}, {"&lt;", "<"}, {"&gt;", ">"},  {"&quot;", "\""},
      {"&#39;", "'"}, {"&apos;", "'"}, {"&nbsp;", " "}};
  std::string decoded;
  decoded.reserve(no_tags.size());
  for (std::size_t i = 0; i < no_tags.size();) {
    bool hit = false;
    if (no_tags[i] == '&') {
      for (const auto& [ent, rep] : kEntities) {
        if (std::string_view(no_tags).substr(i, ent.size()) == ent) {
          decoded += rep;
          i += ent.size();
          hit = true;
          break;
        }
      }
    }
    if (!hit) decoded.push_back(no_tags[i++]);
  }
  std::string out;
  out.reserve(decoded.size());
  bool pending_space = false;
  for (char c : decoded) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

SourceRegistry SourceRegistry::parse(std::string_view text) {
  std::vector<std::string> names;
  std::vector<double> values;
  auto doc = KeyValueDoc::parse(text, "source registry");
  for (const auto& [key, value] : doc.entries()) {
    std::string name = key.rfind("sources.", 0) == 0 ? key.substr(8) : key;
    auto w = parse_double(value);
    if (!w) throw ConfigError(fmt::format("source registry: bad weight `{}` for `{}`", value, name));
    names.push_back(name);
    values.push_back(*w);
  }
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("registry weights must lie in [0,1]");
  try {
    return SourceRegistry(SourceWeights(std::move(names), std::move(values)));
  } catch (const InputError& e) {
    throw ConfigError(fmt::format("source registry: {}", e.what()));
  }
}

SourceRegistry SourceRegistry::load(const std::string& path) {
  return parse(read_file(path, "source registry"));
}

SourceRegistry SourceRegistry::default_preset() {
  return SourceRegistry(SourceWeights(
      {"Business Standard", "NDTV Profit", "Financial Express", "The Economic Times", "Mint",
       "MoneyControl", "Business Today", "Zee Business", "ET Now", "Yahoo Finance", "CNBC TV18"},
      {0.1523, 0.1480, 0.1210, 0.1150, 0.1020, 0.0890, 0.0780, 0.0560, 0.0510, 0.0480, 0.0397}));
}

SourceRegistry SourceRegistry::uniform(std::vector<std::string> names) {
  return SourceRegistry(SourceWeights::uniform(std::move(names)));
}

std::string SourceRegistry::to_text() const {
  std::string out = "[sources]\n";
  for (std::size_t i = 0; i < weights_.size(); ++i)
    out += fmt::format("{} = {:.17g}\n", weights_.names()[i], weights_.values()[i]);
  return out;
}

std::size_t IngestReport::rejected_total() const {
  std::size_t n = 0;
  for (const auto& [k, v] : rejected) n += v;
  return n;
}

bool CorpusStore::add(NewsItem item) {
  if (by_id_.count(item.id)) return false;
  std::size_t idx = items_.size();
  by_id_.emplace(item.id, idx);
  auto& list = by_symbol_[item.symbol];
  items_.push_back(std::move(item));
  const NewsItem& added = items_.back();
  auto pos = std::upper_bound(list.begin(), list.end(), idx, [&](std::size_t a, std::size_t b) {
    const auto& x = a == idx ? added : items_[a];
    const auto& y = items_[b];
    return std::tie(x.date, x.id) < std::tie(y.date, y.id);
  });
  list.insert(pos, idx);
  return true;
}

const NewsItem* CorpusStore::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &items_[it->second];
}

std::vector<NewsItem> CorpusStore::candidates(const std::string& symbol, Date center,
                                              int window_days, const SourceWeights& weights,
                                              std::string_view exclude_id) const {
  if (window_days < 1 || window_days % 2 == 0)
    throw InputError(fmt::format("candidate window must be odd and >= 1, got {}", window_days));
  std::vector<NewsItem> out;
  auto it = by_symbol_.find(symbol);
  if (it == by_symbol_.end()) return out;
  int half = window_days / 2;
  Date lo = add_days(center, -half), hi = add_days(center, half);
  const auto& list = it->second;
  auto first = std::lower_bound(list.begin(), list.end(), lo,
                                [&](std::size_t i, Date d) { return items_[i].date < d; });
  for (auto p = first; p != list.end() && items_[*p].date <= hi; ++p) {
    const NewsItem& item = items_[*p];
    if (!exclude_id.empty() && item.id == exclude_id) continue;
    if (!(weights.weight(item.source) > 0.0)) continue;
    out.push_back(item);
  }
  return out;
}

IngestReport ingest_corpus_text(std::string_view text, CorpusStore& store,
                                SourceRegistry& registry, const IngestOptions& opts) {
  IngestReport report;
  auto bad = [&](std::size_t line_no, const std::string& reason, const std::string& detail) {
    reject(report, line_no, reason, detail);
  };
  for_each_row(
      text,
      [&](std::size_t line_no, RawRow row, const std::string&) {
        NewsItem item;
        if (auto why = validate(row, item, true)) {
          reject(report, line_no, *why);
          return;
        }
        if (store.find(item.id)) {
          reject(report, line_no, "duplicate_id", item.id);
          return;
        }
        if (!registry.contains(item.source)) {
          if (opts.unknown_source == UnknownSourcePolicy::Reject) {
            reject(report, line_no, "unknown_source", item.source);
            return;
          }
          registry.register_zero(item.source);
          report.auto_registered.push_back(item.source);
        }
        std::string source = item.source;
        store.add(std::move(item));
        ++report.accepted;
        ++report.per_source[source];
      },
      bad, true);
  return report;
}

IngestReport ingest_corpus(const std::string& path, CorpusStore& store, SourceRegistry& registry,
                           const IngestOptions& opts) {
  return ingest_corpus_text(read_file(path, "news corpus"), store, registry, opts);
}

void write_news_jsonl(const std::string& path, std::span<const NewsItem> items) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write `{}`", path));
  for (const auto& n : items) {
    json j = {{"id", n.id},
              {"headline", n.headline},
              {"source", n.source},
              {"symbol", n.symbol},
              {"date", format_date(n.date)}};
    out << j.dump() << '\n';
  }
}

std::vector<NewsItem> load_headlines(const std::string& path) {
  std::string text = read_file(path, "headline file");
  std::vector<NewsItem> out;
  std::vector<std::string> problems;
  for_each_row(
      text,
      [&](std::size_t line_no, RawRow row, const std::string&) {
        NewsItem item;
        if (auto why = validate(row, item, false))
          problems.push_back(fmt::format("line {}: {}", line_no, *why));
        else
          out.push_back(std::move(item));
      },
      [&](std::size_t line_no, const std::string& reason, const std::string& detail) {
        problems.push_back(fmt::format("line {}: {}: {}", line_no, reason, detail));
      },
      false);
  if (!problems.empty())
    throw InputError(fmt::format("{}: {} bad rows, first: {}", path, problems.size(),
                                 problems.front()));
  return out;
}

std::vector<TestItem> load_test_items(const std::string& path) {
  std::string text = read_file(path, "test set");
  std::vector<TestItem> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json obj = json::parse(line);
      RawRow row{json_string_field(obj, "id"), json_string_field(obj, "headline"),
                 json_string_field(obj, "source"), json_string_field(obj, "symbol"),
                 json_string_field(obj, "date")};
      TestItem t;
      if (auto why = validate(row, t.query, false)) throw InputError(*why);
      auto label = label_from_name(json_string_field(obj, "label"));
      if (!label) throw InputError("missing or invalid `label`");
      t.truth = *label;
      if (auto it = obj.find("next_day_return"); it != obj.end() && it->is_number())
        t.next_day_return = it->get<double>();
      if (auto td = json_string_field(obj, "trade_date"); !td.empty()) t.trade_date = parse_date(td);
      out.push_back(std::move(t));
    } catch (const std::exception& e) {
      throw InputError(fmt::format("{}:{}: {}", path, line_no, e.what()));
    }
  }
  return out;
}

void write_test_items(const std::string& path, std::span<const TestItem> items) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write `{}`", path));
  for (const auto& t : items) {
    json j = {{"id", t.query.id},
              {"headline", t.query.headline},
              {"source", t.query.source},
              {"symbol", t.query.symbol},
              {"date", format_date(t.query.date)},
              {"label", std::string(label_name(t.truth))}};
    j["next_day_return"] = t.next_day_return ? json(*t.next_day_return) : json(nullptr);
    j["trade_date"] = t.trade_date ? json(format_date(*t.trade_date)) : json(nullptr);
    out << j.dump() << '\n';
  }
}

}  // namespace sentirag
