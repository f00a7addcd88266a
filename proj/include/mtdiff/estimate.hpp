#pragma once

// Canonical per-segment difficulty estimate. Scores are always
// quality-like (higher = easier); wildcard keys carry source-only
// estimators. Converting from an ingested table is the one place
// orientation is resolved.

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "mtdiff/score_table.hpp"

namespace mtdiff {

class DifficultyEstimate {
 public:
  DifficultyEstimate() = default;
  explicit DifficultyEstimate(std::string name)
      : table_(std::move(name), Orientation::quality_like) {}

  // Canonicalization: difficulty-like inputs are negated so every consumer
  // sees quality-like scores.
  static DifficultyEstimate from_table(const ScoreTable& table) {
    DifficultyEstimate est(table.name());
    const bool flip = table.orientation() == Orientation::difficulty_like;
    for (const auto& [key, score] : table.entries())
      est.table_.insert(key, flip ? -score : score);
    return est;
  }

  const std::string& name() const { return table_.name(); }
  const ScoreTable& table() const { return table_; }
  bool empty() const { return table_.empty(); }
  std::size_t size() const { return table_.size(); }

  void set(std::string segment, std::string lang, std::string system, double score) {
    table_.insert(ScoreKey{std::move(segment), std::move(lang), std::move(system)}, score);
  }
  void set_lang(std::string segment, std::string lang, double score) {
    set(std::move(segment), std::move(lang), std::string(kWildcard), score);
  }
  void set_src(std::string segment, double score) {
    set(std::move(segment), std::string(kWildcard), std::string(kWildcard), score);
  }

  std::optional<double> lookup(std::string_view segment, std::string_view lang,
                               std::string_view system) const {
    return table_.lookup(segment, lang, system);
  }
  std::optional<double> lookup_lang(std::string_view segment, std::string_view lang) const {
    return table_.lookup_lang(segment, lang);
  }
  std::optional<double> lookup_src(std::string_view segment) const {
    return table_.lookup_src(segment);
  }

 private:
  ScoreTable table_;  // orientation is always quality_like
};

inline DifficultyEstimate canonicalize(const ScoreTable& table) {
  return DifficultyEstimate::from_table(table);
}

}  // namespace mtdiff
