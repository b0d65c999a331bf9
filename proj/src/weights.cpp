#include "sentirag/weights.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "sentirag/error.hpp"

namespace sentirag {

namespace {

void check_names(const std::vector<std::string>& names) {
  std::set<std::string_view> seen;
  for (const auto& n : names) {
    if (n.empty()) throw InputError("source name must be non-empty");
    if (!seen.insert(n).second) throw InputError(fmt::format("duplicate source `{}`", n));
  }
}

}  // namespace

bool on_simplex(const std::vector<double>& values, double tol) {
  double sum = 0.0;
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

SourceWeights::SourceWeights(std::vector<std::string> names, std::vector<double> values)
    : names_(std::move(names)), values_(std::move(values)) {
  if (names_.size() != values_.size())
    throw InputError("source weights: names and values differ in length");
  check_names(names_);
  if (!names_.empty() && !on_simplex(values_))
    throw InputError("source weights must each lie in [0,1] and sum to 1");
}

SourceWeights SourceWeights::uniform(std::vector<std::string> names) {
  std::vector<double> v(names.size(), names.empty() ? 0.0 : 1.0 / static_cast<double>(names.size()));
  return normalized(std::move(names), std::move(v));
}

SourceWeights SourceWeights::normalized(std::vector<std::string> names,
                                        std::vector<double> values) {
  double sum = 0.0;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("weights must be finite and >= 0");
    sum += v;
  }
  if (!(sum > 0.0)) throw InputError("weights sum to zero");
  for (double& v : values) v /= sum;
  return SourceWeights(std::move(names), std::move(values));
}

std::optional<std::size_t> SourceWeights::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

double SourceWeights::weight(std::string_view name) const {
  auto i = index_of(name);
  return i ? values_[*i] : 0.0;
}

void SourceWeights::append_zero(const std::string& name) {
  if (index_of(name)) return;
  if (name.empty()) throw InputError("source name must be non-empty");
  names_.push_back(name);
  values_.push_back(0.0);
}

}  // namespace sentirag
