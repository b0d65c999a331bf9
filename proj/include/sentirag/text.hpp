#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sentirag {

// Splits one CSV record. Handles double-quoted fields with embedded commas
// and doubled quotes. Throws InputError on an unterminated quote.
std::vector<std::string> split_csv_line(std::string_view line);

// Quotes a field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

std::string trim(std::string_view s);

// Whole-string decimal parse; nullopt on trailing garbage.
std::optional<double> parse_double(std::string_view s);

std::string to_lower(std::string_view s);

// Lowercased alphanumeric runs; everything else separates tokens.
std::vector<std::string> word_tokens(std::string_view text);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);

// Combines a seed with further 64-bit values (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value);

// Flat `key = value` document with optional `[section]` headers. Keys inside
// a section are stored as `section.key`. `#` and `;` start comment lines;
// ` #` also starts a trailing comment.
// Insertion order is kept per section for ordered lists such as registries.
class KeyValueDoc {
 public:
  static KeyValueDoc parse(std::string_view text, std::string_view origin = "<memory>");
  static KeyValueDoc load(const std::string& path);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Entries of one section in file order, with the section prefix removed.
  std::vector<std::pair<std::string, std::string>> section(const std::string& name) const;

  void set(const std::string& key, const std::string& value);

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
  std::string origin_;
};

}  // namespace sentirag
