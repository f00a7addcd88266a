#pragma once

// Character n-gram F-score over Unicode code points. Used as a pairwise
// output-diversity measure; also exposed on the CLI for debugging.

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mtdiff/errors.hpp"
#include "mtdiff/text.hpp"

namespace mtdiff {

struct ChrfConfig {
  int max_n = 6;
  double beta = 2.0;
  bool whitespace_included = false;

  void validate() const {
    if (max_n < 1) throw ValidationError("chrf: max_n must be >= 1");
    if (!(beta > 0.0)) throw ValidationError("chrf: beta must be > 0");
  }
};

namespace detail {

inline std::u32string chrf_prepare(std::string_view text, bool keep_whitespace) {
  std::u32string out;
  for (char32_t cp : to_code_points(text)) {
    if (!keep_whitespace && is_unicode_whitespace(cp)) continue;
    out.push_back(cp);
  }
  return out;
}

struct U32Hash {
  std::size_t operator()(const std::u32string& s) const {
    std::size_t h = 1469598103934665603ull;
    for (char32_t c : s) {
      h ^= static_cast<std::size_t>(c);
      h *= 1099511628211ull;
    }
    return h;
  }
};

using NgramCounts = std::unordered_map<std::u32string, long long, U32Hash>;

inline NgramCounts count_ngrams(const std::u32string& chars, int n) {
  NgramCounts counts;
  if (static_cast<int>(chars.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= chars.size(); ++i)
    ++counts[chars.substr(i, static_cast<std::size_t>(n))];
  return counts;
}

}  // namespace detail

// Returns the score in [0, 100], or nullopt when both strings are empty
// after preprocessing. Per order n: clipped-multiset precision and recall;
// orders with no reference n-grams are excluded; P and R are arithmetic
// means over the remaining orders; F_beta combines them. Empty overlap
// yields exactly 0; identical non-empty strings yield exactly 100.
inline std::optional<double> chrf(std::string_view hypothesis, std::string_view reference,
                                  const ChrfConfig& config = {}) {
  config.validate();
  const std::u32string hyp = detail::chrf_prepare(hypothesis, config.whitespace_included);
  const std::u32string ref = detail::chrf_prepare(reference, config.whitespace_included);
  if (hyp.empty() && ref.empty()) return std::nullopt;
  if (hyp.empty() || ref.empty()) return 0.0;

  double precision_sum = 0.0;
  double recall_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= config.max_n; ++n) {
    const long long ref_total = static_cast<long long>(ref.size()) - n + 1;
    if (ref_total <= 0) continue;  // no reference n-grams of this order
    const long long hyp_total = static_cast<long long>(hyp.size()) - n + 1;
    auto ref_counts = detail::count_ngrams(ref, n);
    long long overlap = 0;
    if (hyp_total > 0) {
      auto hyp_counts = detail::count_ngrams(hyp, n);
      for (const auto& [gram, count] : hyp_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) overlap += std::min(count, it->second);
      }
    }
    precision_sum += hyp_total > 0
                         ? static_cast<double>(overlap) / static_cast<double>(hyp_total)
                         : 0.0;
    recall_sum += static_cast<double>(overlap) / static_cast<double>(ref_total);
    ++orders;
  }
  if (orders == 0) return 0.0;

  const double precision = precision_sum / orders;
  const double recall = recall_sum / orders;
  const double b2 = config.beta * config.beta;
  const double denom = b2 * precision + recall;
  if (denom == 0.0) return 0.0;
  return 100.0 * (1.0 + b2) * precision * recall / denom;
}

// Symmetrized variant used by the diversity analysis; chrf is asymmetric.
inline std::optional<double> chrf_symmetric(std::string_view a, std::string_view b,
                                            const ChrfConfig& config = {}) {
  auto ab = chrf(a, b, config);
  auto ba = chrf(b, a, config);
  if (!ab || !ba) return std::nullopt;
  return 0.5 * (*ab + *ba);
}

}  // namespace mtdiff
