#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sentirag {

inline constexpr double kSimplexTolerance = 1e-9;

// Reliability distribution over named news sources. Every public
// constructor and mutation leaves each weight in [0, 1] with a total of
// 1 +- kSimplexTolerance. Source order is stable and significant.
class SourceWeights {
 public:
  SourceWeights() = default;

  // Throws InputError unless the values already lie on the simplex and the
  // names are unique and non-empty.
  SourceWeights(std::vector<std::string> names, std::vector<double> values);

  static SourceWeights uniform(std::vector<std::string> names);

  // Divides by the total. Throws InputError on negative entries or a zero sum.
  static SourceWeights normalized(std::vector<std::string> names, std::vector<double> values);

  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& values() const { return values_; }

  std::optional<std::size_t> index_of(std::string_view name) const;

  // Weight of a source; 0 for sources not in the registry.
  double weight(std::string_view name) const;

  // Adds a new source with weight 0 (keeps the simplex). No-op if present.
  void append_zero(const std::string& name);

  bool operator==(const SourceWeights&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
};

// True when every entry is in [0,1] and the sum is within tolerance of 1.
bool on_simplex(const std::vector<double>& values, double tol = kSimplexTolerance);

}  // namespace sentirag
