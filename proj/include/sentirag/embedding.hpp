#pragma once

#include <cstddef>
#include <memory>
#include <semaphore>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sentirag/http.hpp"

namespace sentirag {

struct SentenceVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  bool operator==(const SentenceVector&) const = default;
};

// Source of sentence vectors. `id` names the text for providers that look
// vectors up instead of computing them. Implementations are safe for
// concurrent embed() calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  // InputError on empty text; RetryableError when a remote is unavailable.
  virtual SentenceVector embed(std::string_view id, std::string_view text) = 0;
};

inline constexpr std::size_t kDefaultEmbeddingDim = 384;

// Signed feature hashing over lowercased word unigrams and bigrams,
// unit-normalized. Fully deterministic and offline.
class HashEmbedder final : public EmbeddingProvider {
 public:
  explicit HashEmbedder(std::size_t dim = kDefaultEmbeddingDim, std::uint64_t seed = 0);

  std::size_t dim() const override { return dim_; }
  SentenceVector embed(std::string_view id, std::string_view text) override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Vectors loaded from JSONL `{"id": ..., "vector": [...]}`; lookups by id.
class PrecomputedEmbeddings final : public EmbeddingProvider {
 public:
  static PrecomputedEmbeddings load(const std::string& path);
  static PrecomputedEmbeddings parse(std::string_view text);

  std::size_t dim() const override { return dim_; }
  // InputError when `id` is absent.
  SentenceVector embed(std::string_view id, std::string_view text) override;
  std::size_t size() const { return vectors_.size(); }

 private:
  std::unordered_map<std::string, SentenceVector> vectors_;
  std::size_t dim_ = 0;
};

// Remote endpoint: POST `{"texts": [...]}` -> `{"vectors": [[...]]}`.
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  RemoteEmbedder(HttpEndpoint endpoint, std::size_t dim, std::ptrdiff_t max_in_flight = 4);

  std::size_t dim() const override { return dim_; }
  SentenceVector embed(std::string_view id, std::string_view text) override;
  std::vector<SentenceVector> embed_texts(const std::vector<std::string>& texts);

 private:
  HttpEndpoint endpoint_;
  std::size_t dim_;
  std::counting_semaphore<64> in_flight_;
};

// Memoizes another provider by id.
class CachingEmbedder final : public EmbeddingProvider {
 public:
  explicit CachingEmbedder(EmbeddingProvider& inner) : inner_(inner) {}

  std::size_t dim() const override { return inner_.dim(); }
  SentenceVector embed(std::string_view id, std::string_view text) override;

 private:
  EmbeddingProvider& inner_;
  std::shared_mutex mu_;
  std::unordered_map<std::string, SentenceVector> cache_;
};

// dot(a,b) / (|a||b|), clamped to [-1, 1]. InputError on dimension
// mismatch; UndefinedSimilarity when either vector is all zeros.
double cosine(const SentenceVector& a, const SentenceVector& b);

using TokenSet = std::set<std::string>;

// Lowercase, split on non-alphanumerics, drop empties.
TokenSet token_set(std::string_view text);

// |a n b| / min(|a|, |b|). UndefinedSimilarity when both are empty; 0 when
// exactly one is empty.
double overlap_coefficient(const TokenSet& a, const TokenSet& b);

}  // namespace sentirag
