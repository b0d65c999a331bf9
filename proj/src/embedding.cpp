#include "sentirag/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "sentirag/error.hpp"
#include "sentirag/text.hpp"

namespace sentirag {

using nlohmann::json;

namespace {

void require_text(std::string_view text) {
  if (trim(text).empty()) throw InputError("cannot embed empty text");
}

SentenceVector to_vector(const json& arr, std::size_t expect_dim) {
  if (!arr.is_array()) throw InputError("vector must be a JSON array");
  SentenceVector v;
  v.values.reserve(arr.size());
  for (const auto& x : arr) {
    if (!x.is_number()) throw InputError("vector entries must be numbers");
    double d = x.get<double>();
    if (!std::isfinite(d)) throw InputError("vector entries must be finite");
    v.values.push_back(d);
  }
  if (v.values.empty()) throw InputError("vector is empty");
  if (expect_dim != 0 && v.dim() != expect_dim)
    throw InputError(fmt::format("vector has dim {}, expected {}", v.dim(), expect_dim));
  return v;
}

}  // namespace

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim == 0) throw ConfigError("embedding dim must be positive");
}

SentenceVector HashEmbedder::embed(std::string_view, std::string_view text) {
  require_text(text);
  auto tokens = word_tokens(text);
  if (tokens.empty()) throw InputError(fmt::format("text has no word tokens: `{}`", text));
  SentenceVector v;
  v.values.assign(dim_, 0.0);
  auto add = [&](const std::string& feature, double weight) {
    std::uint64_t h = mix_seed(seed_, fnv1a(feature));
    double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    v.values[h % dim_] += sign * weight;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add(tokens[i], 1.0);
    if (i + 1 < tokens.size()) add(tokens[i] + ' ' + tokens[i + 1], 0.5);
  }
  double norm = 0.0;
  for (double x : v.values) norm += x * x;
  norm = std::sqrt(norm);
  // All features cancelled through sign collisions; fall back to one bucket.
  if (norm == 0.0) {
    v.values[fnv1a(text) % dim_] = 1.0;
    return v;
  }
  for (double& x : v.values) x /= norm;
  return v;
}

PrecomputedEmbeddings PrecomputedEmbeddings::parse(std::string_view text) {
  PrecomputedEmbeddings out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json obj = json::parse(line);
      auto id = obj.at("id").get<std::string>();
      auto v = to_vector(obj.at("vector"), out.dim_);
      out.dim_ = v.dim();
      if (!out.vectors_.emplace(id, std::move(v)).second)
        throw InputError(fmt::format("duplicate id `{}`", id));
    } catch (const std::exception& e) {
      throw InputError(fmt::format("precomputed vectors line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

PrecomputedEmbeddings PrecomputedEmbeddings::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open vectors file `{}`", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

SentenceVector PrecomputedEmbeddings::embed(std::string_view id, std::string_view) {
  auto it = vectors_.find(std::string(id));
  if (it == vectors_.end()) throw InputError(fmt::format("no precomputed vector for id `{}`", id));
  return it->second;
}

RemoteEmbedder::RemoteEmbedder(HttpEndpoint endpoint, std::size_t dim,
                               std::ptrdiff_t max_in_flight)
    : endpoint_(std::move(endpoint)), dim_(dim), in_flight_(max_in_flight) {
  if (max_in_flight < 1 || max_in_flight > 64)
    throw ConfigError("remote embedder in-flight limit must be in [1, 64]");
  split_url(endpoint_.url);
}

std::vector<SentenceVector> RemoteEmbedder::embed_texts(const std::vector<std::string>& texts) {
  for (const auto& t : texts) require_text(t);
  in_flight_.acquire();
  json reply;
  try {
    reply = post_json(endpoint_, json{{"texts", texts}});
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();
  auto it = reply.find("vectors");
  if (it == reply.end() || !it->is_array() || it->size() != texts.size())
    throw Error(fmt::format("{}: reply must carry {} vectors", endpoint_.url, texts.size()));
  std::vector<SentenceVector> out;
  for (const auto& arr : *it) {
    try {
      out.push_back(to_vector(arr, dim_));
    } catch (const InputError& e) {
      throw Error(fmt::format("{}: {}", endpoint_.url, e.what()));
    }
  }
  return out;
}

SentenceVector RemoteEmbedder::embed(std::string_view, std::string_view text) {
  return embed_texts({std::string(text)}).front();
}

SentenceVector CachingEmbedder::embed(std::string_view id, std::string_view text) {
  std::string key(id);
  {
    std::shared_lock lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  SentenceVector v = inner_.embed(id, text);
  std::unique_lock lock(mu_);
  return cache_.emplace(std::move(key), std::move(v)).first->second;
}

double cosine(const SentenceVector& a, const SentenceVector& b) {
  if (a.dim() != b.dim())
    throw InputError(fmt::format("cosine: dimension mismatch {} vs {}", a.dim(), b.dim()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) throw UndefinedSimilarity("cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

TokenSet token_set(std::string_view text) {
  auto tokens = word_tokens(text);
  return TokenSet(tokens.begin(), tokens.end());
}

double overlap_coefficient(const TokenSet& a, const TokenSet& b) {
  if (a.empty() && b.empty()) throw UndefinedSimilarity("overlap of two empty token sets");
  if (a.empty() || b.empty()) return 0.0;
  std::size_t shared = 0;
  for (const auto& t : a) shared += b.count(t);
  return static_cast<double>(shared) / static_cast<double>(std::min(a.size(), b.size()));
}

}  // namespace sentirag
