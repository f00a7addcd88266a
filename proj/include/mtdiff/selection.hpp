#pragma once

// Difficult-benchmark construction: top-B selection of the hardest
// segments under the canonical orientation (lowest quality-like score
// first), subset quality metrics (AvgScore, %Perfect), budget sweeps,
// per-domain breakdowns and score-distribution histograms.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mtdiff/corpus.hpp"
#include "mtdiff/detail/sum.hpp"
#include "mtdiff/errors.hpp"
#include "mtdiff/estimate.hpp"

namespace mtdiff {

// What counts as a perfect translation, per protocol.
struct PerfectRule {
  double esa_value = 100.0;
  double mqm_value = 0.0;
  std::optional<double> other_value;  // unset: 'other' rows are never perfect

  bool is_perfect(Protocol protocol, double score) const {
    switch (protocol) {
      case Protocol::esa: return score == esa_value;
      case Protocol::mqm: return score == mqm_value;
      default: return other_value && score == *other_value;
    }
  }
};

struct PairMetrics {
  double avg_score = 0.0;
  double pct_perfect = 0.0;
  std::size_t cells = 0;     // (segment, system) pairs behind the means
  std::size_t segments = 0;  // subset segments belonging to this pair
};

struct SelectionDiagnostics {
  std::size_t missing_estimate = 0;  // candidates without a resolvable score
  std::vector<std::string> warnings;
};

struct SelectionResult {
  std::string estimator_name;
  std::size_t budget = 0;                      // requested B
  std::optional<LangPair> scope_lang;          // set in per-target-language scope
  std::vector<std::pair<std::string, double>> selected;  // (segment, score), hardest first
  std::map<LangPair, PairMetrics> per_language;
  std::optional<double> macro_avg_score;
  std::optional<double> macro_pct_perfect;
  SelectionDiagnostics diag;
};

enum class SelectionScope { src, per_target_lang };

// AvgScore: mean human score over subset segments x systems of the pair.
// Throws when a required (segment, system) cell is missing or unscored.
inline double avg_score(const std::vector<std::string>& subset, const TestSet& ts,
                        const LangPair& pair) {
  detail::NeumaierSum sum;
  std::vector<std::string> missing;
  for (const auto& seg : subset) {
    const auto* rows = ts.item(pair, seg);
    if (!rows) continue;  // segment not part of this pair
    std::set<std::string> seen;
    for (std::size_t idx : *rows) {
      const auto& tr = ts.translation(idx);
      if (!tr.human_score) {
        missing.push_back("(" + seg + ", " + pair.str() + ", " + tr.system_id + ")");
        continue;
      }
      seen.insert(tr.system_id);
      sum.add(*tr.human_score);
    }
    for (const auto& system : ts.systems_per_language().at(pair)) {
      if (!seen.count(system))
        missing.push_back("(" + seg + ", " + pair.str() + ", " + system + ")");
    }
  }
  if (!missing.empty()) {
    std::string msg = "avg_score: missing or unscored cells:";
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
    if (missing.size() > 10) msg += " (+" + std::to_string(missing.size() - 10) + " more)";
    throw ValidationError(msg);
  }
  auto mean = sum.mean();
  if (!mean) throw ValidationError("avg_score: no cells for language pair " + pair.str());
  return *mean;
}

// Fraction of subset cells whose score meets the protocol's perfect value.
inline double pct_perfect(const std::vector<std::string>& subset, const TestSet& ts,
                          const LangPair& pair, const PerfectRule& rule = {}) {
  long long perfect = 0;
  long long total = 0;
  for (const auto& seg : subset) {
    const auto* rows = ts.item(pair, seg);
    if (!rows) continue;
    for (std::size_t idx : *rows) {
      const auto& tr = ts.translation(idx);
      if (!tr.human_score)
        throw ValidationError("pct_perfect: unscored cell (" + seg + ", " + pair.str() +
                              ", " + tr.system_id + ")");
      ++total;
      if (rule.is_perfect(tr.protocol, *tr.human_score)) ++perfect;
    }
  }
  if (total == 0)
    throw ValidationError("pct_perfect: no cells for language pair " + pair.str());
  return static_cast<double>(perfect) / static_cast<double>(total);
}

namespace detail {

// Largest-remainder split of B across source-language pools, capped at
// pool sizes. Requires B <= sum of pool sizes.
inline std::map<std::string, std::size_t> allocate_budget(
    const std::map<std::string, std::size_t>& pool_sizes, std::size_t budget) {
  std::size_t total = 0;
  for (const auto& [lang, n] : pool_sizes) total += n;
  std::map<std::string, std::size_t> alloc;
  if (total == 0) return alloc;

  double remainder_budget = static_cast<double>(budget);
  std::vector<std::pair<double, std::string>> fractions;  // (-frac, lang): sort ascending
  std::size_t assigned = 0;
  for (const auto& [lang, n] : pool_sizes) {
    const double quota =
        static_cast<double>(budget) * static_cast<double>(n) / static_cast<double>(total);
    auto base = static_cast<std::size_t>(std::floor(quota));
    base = std::min(base, n);
    alloc[lang] = base;
    assigned += base;
    fractions.emplace_back(-(quota - std::floor(quota)), lang);
  }
  (void)remainder_budget;
  std::sort(fractions.begin(), fractions.end());
  // Hand out the remainder by largest fractional part; skip full pools.
  std::size_t left = budget > assigned ? budget - assigned : 0;
  while (left > 0) {
    bool progressed = false;
    for (const auto& [negfrac, lang] : fractions) {
      if (left == 0) break;
      if (alloc[lang] < pool_sizes.at(lang)) {
        ++alloc[lang];
        --left;
        progressed = true;
      }
    }
    if (!progressed) break;  // every pool full
  }
  return alloc;
}

struct Candidate {
  std::string segment_id;
  double score;
};

inline void sort_hardest_first(std::vector<Candidate>& cs) {
  std::sort(cs.begin(), cs.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.segment_id < b.segment_id;
  });
}

inline void fill_metrics(SelectionResult& result, const TestSet& ts,
                         const PerfectRule& rule) {
  std::vector<std::string> subset;
  subset.reserve(result.selected.size());
  for (const auto& [seg, score] : result.selected) subset.push_back(seg);

  NeumaierSum macro_avg, macro_pct;
  for (const auto& pair : ts.languages()) {
    if (result.scope_lang && !(pair == *result.scope_lang)) continue;
    std::size_t in_pair = 0;
    for (const auto& seg : subset)
      if (ts.item(pair, seg)) ++in_pair;
    if (in_pair == 0) continue;
    PairMetrics m;
    m.avg_score = avg_score(subset, ts, pair);
    m.pct_perfect = pct_perfect(subset, ts, pair, rule);
    m.segments = in_pair;
    m.cells = in_pair * ts.systems_per_language().at(pair).size();
    result.per_language.emplace(pair, m);
    macro_avg.add(m.avg_score);
    macro_pct.add(m.pct_perfect);
  }
  result.macro_avg_score = macro_avg.mean();
  result.macro_pct_perfect = macro_pct.mean();
}

}  // namespace detail

// Picks the B hardest candidates. src scope: one global subset, resolved
// through the (segment, *, *) tier; when several source languages are
// present the budget is split across their pools proportionally to pool
// size. per_target_lang scope: an independent subset per language pair,
// resolved through the (segment, lang, *) tier; one result per pair.
// Ties break by (score ascending, segment_id ascending). Candidates with
// no resolvable estimate are excluded and counted in the diagnostics.
inline std::vector<SelectionResult> select_top(const DifficultyEstimate& estimate,
                                               const TestSet& ts, std::size_t budget,
                                               SelectionScope scope = SelectionScope::src,
                                               const PerfectRule& rule = {}) {
  if (budget == 0) throw ValidationError("select_top: budget must be positive");

  std::vector<SelectionResult> results;
  if (scope == SelectionScope::src) {
    SelectionResult result;
    result.estimator_name = estimate.name();
    result.budget = budget;

    // Pools per source language, scored candidates only.
    std::map<std::string, std::vector<detail::Candidate>> pools;
    for (const auto& seg : ts.segments()) {
      auto score = estimate.lookup_src(seg.segment_id);
      if (!score) {
        ++result.diag.missing_estimate;
        continue;
      }
      pools[seg.source_lang].push_back({seg.segment_id, *score});
    }
    if (result.diag.missing_estimate > 0)
      result.diag.warnings.push_back(
          std::to_string(result.diag.missing_estimate) +
          " candidate segment(s) had no source-level estimate and were excluded");

    std::size_t available = 0;
    std::map<std::string, std::size_t> pool_sizes;
    for (auto& [lang, pool] : pools) {
      detail::sort_hardest_first(pool);
      pool_sizes[lang] = pool.size();
      available += pool.size();
    }
    std::size_t effective = budget;
    if (budget > available) {
      effective = available;
      result.diag.warnings.push_back("budget " + std::to_string(budget) +
                                     " exceeds candidate count " + std::to_string(available) +
                                     "; selecting all");
    }
    auto alloc = detail::allocate_budget(pool_sizes, effective);
    std::vector<detail::Candidate> chosen;
    for (const auto& [lang, pool] : pools) {
      const std::size_t take = alloc[lang];
      chosen.insert(chosen.end(), pool.begin(),
                    pool.begin() + static_cast<std::ptrdiff_t>(take));
    }
    detail::sort_hardest_first(chosen);
    for (auto& c : chosen) result.selected.emplace_back(std::move(c.segment_id), c.score);
    detail::fill_metrics(result, ts, rule);
    results.push_back(std::move(result));
    return results;
  }

  // per_target_lang: independent subset per language pair.
  for (const auto& pair : ts.languages()) {
    SelectionResult result;
    result.estimator_name = estimate.name();
    result.budget = budget;
    result.scope_lang = pair;

    std::vector<detail::Candidate> pool;
    for (const auto& seg : ts.segments()) {
      if (seg.source_lang != pair.src) continue;
      if (!ts.item(pair, seg.segment_id)) continue;  // no translations in this pair
      auto score = estimate.lookup_lang(seg.segment_id, pair.tgt);
      if (!score) {
        ++result.diag.missing_estimate;
        continue;
      }
      pool.push_back({seg.segment_id, *score});
    }
    if (result.diag.missing_estimate > 0)
      result.diag.warnings.push_back(
          std::to_string(result.diag.missing_estimate) +
          " candidate segment(s) had no language-level estimate and were excluded");
    detail::sort_hardest_first(pool);
    std::size_t take = budget;
    if (budget > pool.size()) {
      take = pool.size();
      result.diag.warnings.push_back("budget " + std::to_string(budget) +
                                     " exceeds candidate count " + std::to_string(pool.size()) +
                                     "; selecting all");
    }
    for (std::size_t i = 0; i < take; ++i)
      result.selected.emplace_back(std::move(pool[i].segment_id), pool[i].score);
    detail::fill_metrics(result, ts, rule);
    results.push_back(std::move(result));
  }
  return results;
}

inline std::size_t budget_from_fraction(double fraction, std::size_t candidates) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ValidationError("budget fraction must be in (0, 1]");
  auto b = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(candidates)));
  return std::max<std::size_t>(1, std::min(b, candidates));
}

struct SweepPoint {
  double fraction = 0.0;
  std::size_t budget = 0;
  std::optional<double> macro_avg_score;
  std::optional<double> macro_pct_perfect;
};

inline std::vector<double> default_budget_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 20; ++i) grid.push_back(0.05 * i);
  return grid;
}

inline std::vector<SweepPoint> budget_sweep(const DifficultyEstimate& estimate,
                                            const TestSet& ts,
                                            const std::vector<double>& fractions,
                                            const PerfectRule& rule = {}) {
  std::vector<SweepPoint> points;
  const std::size_t n = ts.segments().size();
  for (double f : fractions) {
    SweepPoint p;
    p.fraction = f;
    p.budget = budget_from_fraction(f, n);
    auto results = select_top(estimate, ts, p.budget, SelectionScope::src, rule);
    p.macro_avg_score = results.front().macro_avg_score;
    p.macro_pct_perfect = results.front().macro_pct_perfect;
    points.push_back(p);
  }
  return points;
}

// Selection run independently inside each domain's segment pool, with the
// budget fraction applied to the domain's own size.
inline std::map<std::string, SelectionResult> domain_breakdown(
    const DifficultyEstimate& estimate, const TestSet& ts, double budget_fraction,
    const PerfectRule& rule = {}) {
  std::map<std::string, SelectionResult> results;
  for (const auto& domain : ts.domains()) {
    std::map<std::string, std::vector<detail::Candidate>> pools;
    std::size_t domain_size = 0;
    SelectionResult result;
    result.estimator_name = estimate.name();
    for (const auto& seg : ts.segments()) {
      if (seg.domain != domain) continue;
      ++domain_size;
      auto score = estimate.lookup_src(seg.segment_id);
      if (!score) {
        ++result.diag.missing_estimate;
        continue;
      }
      pools[seg.source_lang].push_back({seg.segment_id, *score});
    }
    if (domain_size == 0) continue;
    const std::size_t budget = budget_from_fraction(budget_fraction, domain_size);
    result.budget = budget;
    if (result.diag.missing_estimate > 0)
      result.diag.warnings.push_back(std::to_string(result.diag.missing_estimate) +
                                     " segment(s) in domain '" + domain +
                                     "' had no estimate and were excluded");

    std::size_t available = 0;
    std::map<std::string, std::size_t> pool_sizes;
    for (auto& [lang, pool] : pools) {
      detail::sort_hardest_first(pool);
      pool_sizes[lang] = pool.size();
      available += pool.size();
    }
    std::size_t effective = budget;
    if (budget > available) {
      effective = available;
      result.diag.warnings.push_back("domain '" + domain + "': budget " +
                                     std::to_string(budget) + " exceeds candidate count " +
                                     std::to_string(available) + "; selecting all");
    }
    auto alloc = detail::allocate_budget(pool_sizes, effective);
    std::vector<detail::Candidate> chosen;
    for (const auto& [lang, pool] : pools) {
      chosen.insert(chosen.end(), pool.begin(),
                    pool.begin() + static_cast<std::ptrdiff_t>(alloc[lang]));
    }
    detail::sort_hardest_first(chosen);
    for (auto& c : chosen) result.selected.emplace_back(std::move(c.segment_id), c.score);
    detail::fill_metrics(result, ts, rule);
    results.emplace(domain, std::move(result));
  }
  return results;
}

enum class HistogramViewKind { all, top_model_per_language, top_translation_per_source };

inline std::string_view histogram_view_name(HistogramViewKind v) {
  switch (v) {
    case HistogramViewKind::all: return "all";
    case HistogramViewKind::top_model_per_language: return "top_model_per_language";
    default: return "top_translation_per_source";
  }
}

struct HistogramBin {
  double lower = 0.0;  // exclusive
  double upper = 0.0;  // inclusive
  std::size_t count = 0;
};

struct Histogram {
  HistogramViewKind view = HistogramViewKind::all;
  double bin_width = 15.0;
  double anchor = 100.0;  // scale maximum; the top bin's inclusive upper edge
  std::vector<HistogramBin> bins;
  std::size_t total = 0;
};

// Bins anchored at the scale maximum, extending downward in bin_width
// steps; a score equal to a boundary lands in the bin above it.
inline Histogram score_histogram(const TestSet& ts, const std::optional<LangPair>& lang,
                                 HistogramViewKind view, double bin_width,
                                 std::optional<double> anchor = std::nullopt) {
  if (!(bin_width > 0.0)) throw ValidationError("score_histogram: bin_width must be > 0");

  std::vector<double> scores;
  bool any_esa = false, any_mqm = false, any_other = false;
  auto note_protocol = [&](Protocol p) {
    if (p == Protocol::esa) any_esa = true;
    else if (p == Protocol::mqm) any_mqm = true;
    else any_other = true;
  };

  auto require_score = [&](const Translation& tr) -> double {
    if (!tr.human_score)
      throw ValidationError("score_histogram: unscored translation (" + tr.segment_id +
                            ", " + tr.target_lang + ", " + tr.system_id + ")");
    note_protocol(tr.protocol);
    return *tr.human_score;
  };

  for (const auto& pair : ts.languages()) {
    if (lang && !(pair == *lang)) continue;
    if (view == HistogramViewKind::all) {
      for (const auto& [key, rows] : ts.cells()) {
        if (!(key.first == pair)) continue;
        for (std::size_t idx : rows) scores.push_back(require_score(ts.translation(idx)));
      }
    } else if (view == HistogramViewKind::top_model_per_language) {
      // System with the highest mean score in this pair; ties break toward
      // the lexicographically smaller system id.
      std::optional<std::string> best;
      double best_mean = 0.0;
      for (const auto& system : ts.systems_per_language().at(pair)) {
        const auto* rows = ts.cell(pair, system);
        if (!rows || rows->empty()) continue;
        detail::NeumaierSum sum;
        for (std::size_t idx : *rows) sum.add(require_score(ts.translation(idx)));
        const double mean = *sum.mean();
        if (!best || mean > best_mean) {
          best = system;
          best_mean = mean;
        }
      }
      if (best) {
        for (std::size_t idx : *ts.cell(pair, *best))
          scores.push_back(*ts.translation(idx).human_score);
      }
    } else {
      // Best translation per source segment.
      for (const auto& [key, rows] : ts.items()) {
        if (!(key.first == pair)) continue;
        double best = 0.0;
        bool first = true;
        for (std::size_t idx : rows) {
          const double s = require_score(ts.translation(idx));
          if (first || s > best) best = s;
          first = false;
        }
        if (!first) scores.push_back(best);
      }
    }
  }
  if (scores.empty())
    throw ValidationError("score_histogram: no human scores in scope");

  Histogram h;
  h.view = view;
  h.bin_width = bin_width;
  if (anchor) {
    h.anchor = *anchor;
  } else if (any_esa && !any_mqm && !any_other) {
    h.anchor = 100.0;
  } else if (any_mqm && !any_esa && !any_other) {
    h.anchor = 0.0;
  } else {
    h.anchor = *std::max_element(scores.begin(), scores.end());
  }

  long long max_idx = 0;
  std::vector<long long> indices;
  indices.reserve(scores.size());
  for (double s : scores) {
    if (s > h.anchor)
      throw ValidationError("score_histogram: score above the scale maximum (anchor)");
    // floor((anchor - s) / w) puts a score lying exactly on a bin boundary
    // into the bin whose inclusive upper edge it is.
    long long idx = s == h.anchor
                        ? 0
                        : static_cast<long long>(std::floor((h.anchor - s) / bin_width));
    indices.push_back(idx);
    max_idx = std::max(max_idx, idx);
  }
  h.bins.resize(static_cast<std::size_t>(max_idx) + 1);
  for (long long i = 0; i <= max_idx; ++i) {
    h.bins[static_cast<std::size_t>(i)].upper = h.anchor - static_cast<double>(i) * bin_width;
    h.bins[static_cast<std::size_t>(i)].lower =
        h.anchor - static_cast<double>(i + 1) * bin_width;
  }
  for (long long idx : indices) ++h.bins[static_cast<std::size_t>(idx)].count;
  h.total = scores.size();
  return h;
}

}  // namespace mtdiff
