#pragma once

// Keyed score storage shared by ingested estimator outputs, crowd QE tables
// and dumped difficulty estimates, plus the auxiliary lookup resources
// (frequency lexicon, sentence embeddings).

#include <cmath>
#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtdiff/detail/io.hpp"
#include "mtdiff/detail/numfmt.hpp"
#include "mtdiff/errors.hpp"
#include "mtdiff/text.hpp"

namespace mtdiff {

inline constexpr std::string_view kWildcard = "*";

enum class Orientation {
  quality_like,     // higher = easier
  difficulty_like,  // higher = harder
};

inline std::string_view orientation_name(Orientation o) {
  return o == Orientation::quality_like ? "quality_like" : "difficulty_like";
}

inline Orientation parse_orientation(std::string_view s) {
  if (s == "quality_like") return Orientation::quality_like;
  if (s == "difficulty_like") return Orientation::difficulty_like;
  throw ValidationError("unknown orientation: " + std::string(s));
}

// Key with wildcard tiers. target_lang / system_id hold "*" when the score
// applies regardless of that dimension.
struct ScoreKey {
  std::string segment_id;
  std::string target_lang;
  std::string system_id;

  auto operator<=>(const ScoreKey&) const = default;

  bool lang_wildcard() const { return target_lang == kWildcard; }
  bool system_wildcard() const { return system_id == kWildcard; }
};

class ScoreTable {
 public:
  ScoreTable() = default;
  ScoreTable(std::string name, Orientation orientation)
      : name_(std::move(name)), orientation_(orientation) {}

  const std::string& name() const { return name_; }
  Orientation orientation() const { return orientation_; }
  const std::map<ScoreKey, double>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  void insert(ScoreKey key, double score) {
    if (!std::isfinite(score))
      throw ValidationError("non-finite score for segment '" + key.segment_id + "'");
    auto [it, inserted] = entries_.emplace(std::move(key), score);
    if (!inserted)
      throw ValidationError("duplicate score key (" + it->first.segment_id + ", " +
                            it->first.target_lang + ", " + it->first.system_id + ")");
  }

  // Resolution order: exact -> (segment, lang, *) -> (segment, *, *).
  std::optional<double> lookup(std::string_view segment, std::string_view lang,
                               std::string_view system) const {
    if (auto v = find(segment, lang, system)) return v;
    if (auto v = find(segment, lang, kWildcard)) return v;
    return find(segment, kWildcard, kWildcard);
  }

  // Language-level resolution, used where no single system is in play.
  std::optional<double> lookup_lang(std::string_view segment, std::string_view lang) const {
    if (auto v = find(segment, lang, kWildcard)) return v;
    return find(segment, kWildcard, kWildcard);
  }

  // Source-only resolution: the (segment, *, *) tier alone.
  std::optional<double> lookup_src(std::string_view segment) const {
    return find(segment, kWildcard, kWildcard);
  }

 private:
  std::optional<double> find(std::string_view segment, std::string_view lang,
                             std::string_view system) const {
    // Transparent comparators would avoid these copies; the tables are small.
    ScoreKey key{std::string(segment), std::string(lang), std::string(system)};
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::string name_;
  Orientation orientation_ = Orientation::quality_like;
  std::map<ScoreKey, double> entries_;
};

// TSV: segment_id <tab> target_lang-or-* <tab> system_id-or-* <tab> score.
// No header row.
inline ScoreTable load_scores(const std::string& path, const std::string& name,
                              Orientation orientation) {
  ScoreTable table(name, orientation);
  auto in = detail::open_input(path);
  detail::ErrorCollector errors(path);
  detail::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    if (line.empty()) return;
    auto fields = detail::split_tsv(line);
    if (fields.size() != 4) {
      errors.add(lineno, "expected 4 tab-separated fields, got " +
                             std::to_string(fields.size()));
      return;
    }
    auto score = detail::parse_double(fields[3]);
    if (!score) {
      errors.add(lineno, "unparseable score '" + std::string(fields[3]) + "'");
      return;
    }
    if (!std::isfinite(*score)) {
      errors.add(lineno, "non-finite score");
      return;
    }
    ScoreKey key{nfc(fields[0]), nfc(fields[1]), nfc(fields[2])};
    if (key.segment_id.empty() || key.target_lang.empty() || key.system_id.empty()) {
      errors.add(lineno, "empty key field");
      return;
    }
    try {
      table.insert(std::move(key), *score);
    } catch (const ValidationError& e) {
      errors.add(lineno, e.what());
    }
  });
  errors.raise_validation_if_any();
  return table;
}

inline void save_scores(const ScoreTable& table, const std::string& path) {
  auto out = detail::open_output(path);
  for (const auto& [key, score] : table.entries()) {
    out << key.segment_id << '\t' << key.target_lang << '\t' << key.system_id
        << '\t' << detail::format_double(score) << '\n';
  }
}

// Zipf-like token frequencies. Lookups go through NFKC case folding so
// "The", "THE" and fullwidth variants hit the same entry.
struct FrequencyLexicon {
  std::map<std::string, double> entries;
  double floor = 0.0;

  double value(std::string_view raw_token) const {
    auto it = entries.find(nfkc_casefold(raw_token));
    return it == entries.end() ? floor : it->second;
  }

  bool contains(std::string_view raw_token) const {
    return entries.count(nfkc_casefold(raw_token)) > 0;
  }
};

// TSV: token <tab> value. No header row.
inline FrequencyLexicon load_frequency_lexicon(const std::string& path, double floor = 0.0) {
  FrequencyLexicon lex;
  lex.floor = floor;
  auto in = detail::open_input(path);
  detail::ErrorCollector errors(path);
  detail::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    if (line.empty()) return;
    auto fields = detail::split_tsv(line);
    if (fields.size() != 2) {
      errors.add(lineno, "expected 2 tab-separated fields, got " +
                             std::to_string(fields.size()));
      return;
    }
    auto value = detail::parse_double(fields[1]);
    if (!value || !std::isfinite(*value)) {
      errors.add(lineno, "unparseable or non-finite frequency '" +
                             std::string(fields[1]) + "'");
      return;
    }
    std::string token = nfkc_casefold(fields[0]);
    if (token.empty()) {
      errors.add(lineno, "empty token");
      return;
    }
    if (!lex.entries.emplace(std::move(token), *value).second)
      errors.add(lineno, "duplicate token '" + std::string(fields[0]) + "'");
  });
  errors.raise_validation_if_any();
  return lex;
}

struct EmbeddingKey {
  std::string segment_id;
  std::string target_lang;
  std::string system_id;
  auto operator<=>(const EmbeddingKey&) const = default;
};

struct EmbeddingTable {
  std::map<EmbeddingKey, std::vector<double>> entries;
  std::size_t dimension = 0;

  const std::vector<double>* find(std::string_view segment, std::string_view lang,
                                  std::string_view system) const {
    EmbeddingKey key{std::string(segment), std::string(lang), std::string(system)};
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  }
};

}  // namespace mtdiff
