#pragma once

// Rank-correlation machinery: Kendall tau-b with exact integer pair
// counts, Pearson, the per-(language, system) correlation report with its
// aggregate (DEC), translator agreement matrices and per-system alignment.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtdiff/corpus.hpp"
#include "mtdiff/detail/sum.hpp"
#include "mtdiff/errors.hpp"
#include "mtdiff/estimate.hpp"
#include "mtdiff/parallel.hpp"

namespace mtdiff {

struct TauResult {
  std::optional<double> value;  // nullopt when a denominator factor is 0
  long long concordant = 0;
  long long discordant = 0;
  long long ties_gold_only = 0;
  long long ties_hyp_only = 0;
  long long ties_both = 0;
  long long n = 0;  // number of observations

  long long total_pairs() const { return n * (n - 1) / 2; }
};

namespace detail {

struct TauWorkspace {
  std::vector<std::pair<double, double>> pairs;  // (hyp, gold)
  std::vector<double> seq;
  std::vector<double> buf;
};

// Strict inversions (a[i] > a[j] for i < j) via bottom-up merge sort.
inline long long count_inversions(std::vector<double>& a, std::vector<double>& buf) {
  const std::size_t n = a.size();
  long long inversions = 0;
  buf.resize(n);
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
      const std::size_t mid = lo + width;
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (a[j] < a[i]) {
          inversions += static_cast<long long>(mid - i);
          buf[k++] = a[j++];
        } else {
          buf[k++] = a[i++];
        }
      }
      while (i < mid) buf[k++] = a[i++];
      while (j < hi) buf[k++] = a[j++];
      std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
                buf.begin() + static_cast<std::ptrdiff_t>(hi),
                a.begin() + static_cast<std::ptrdiff_t>(lo));
    }
  }
  return inversions;
}

inline long long tied_pairs_in_runs(const std::vector<double>& sorted) {
  long long total = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      total += static_cast<long long>(run) * static_cast<long long>(run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

inline TauResult kendall_tau_b_ws(std::span<const double> hyp, std::span<const double> gold,
                                  TauWorkspace& ws) {
  if (hyp.size() != gold.size())
    throw ValidationError("kendall_tau_b: length mismatch (" + std::to_string(hyp.size()) +
                          " vs " + std::to_string(gold.size()) + ")");
  if (hyp.size() < 2)
    throw ValidationError("kendall_tau_b: need at least 2 observations");

  const std::size_t n = hyp.size();
  const long long n0 = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;

  ws.pairs.clear();
  ws.pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ws.pairs.emplace_back(hyp[i], gold[i]);
  std::sort(ws.pairs.begin(), ws.pairs.end());

  // Pairs tied in hyp (n1) and tied in both (n3) from runs of the sorted order.
  long long n1 = 0, n3 = 0;
  {
    std::size_t run_h = 1, run_hg = 1;
    for (std::size_t i = 1; i <= n; ++i) {
      const bool end = i == n;
      if (!end && ws.pairs[i].first == ws.pairs[i - 1].first) {
        ++run_h;
        if (ws.pairs[i].second == ws.pairs[i - 1].second) {
          ++run_hg;
        } else {
          n3 += static_cast<long long>(run_hg) * static_cast<long long>(run_hg - 1) / 2;
          run_hg = 1;
        }
      } else {
        n1 += static_cast<long long>(run_h) * static_cast<long long>(run_h - 1) / 2;
        n3 += static_cast<long long>(run_hg) * static_cast<long long>(run_hg - 1) / 2;
        run_h = run_hg = 1;
      }
    }
  }

  // Discordant pairs: inversions in the gold sequence once sorted by
  // (hyp, gold); within equal hyp the gold values are ascending and
  // contribute none.
  ws.seq.clear();
  ws.seq.reserve(n);
  for (const auto& p : ws.pairs) ws.seq.push_back(p.second);
  const long long discordant = count_inversions(ws.seq, ws.buf);

  // Pairs tied in gold (n2): seq is now fully sorted.
  const long long n2 = tied_pairs_in_runs(ws.seq);

  TauResult r;
  r.n = static_cast<long long>(n);
  r.discordant = discordant;
  r.concordant = n0 - n1 - n2 + n3 - discordant;
  r.ties_hyp_only = n1 - n3;
  r.ties_gold_only = n2 - n3;
  r.ties_both = n3;

  const long long den_g = r.concordant + r.discordant + r.ties_gold_only;  // = n0 - n1
  const long long den_h = r.concordant + r.discordant + r.ties_hyp_only;  // = n0 - n2
  if (den_g > 0 && den_h > 0) {
    r.value = static_cast<double>(r.concordant - r.discordant) /
              std::sqrt(static_cast<double>(den_g) * static_cast<double>(den_h));
  }
  return r;
}

}  // namespace detail

inline TauResult kendall_tau_b(std::span<const double> hyp, std::span<const double> gold) {
  detail::TauWorkspace ws;
  return detail::kendall_tau_b_ws(hyp, gold, ws);
}

// Sample Pearson correlation; nullopt when either input is constant.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ValidationError("pearson: length mismatch");
  if (x.size() < 2)
    throw ValidationError("pearson: need at least 2 observations");
  const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  if (*xmin == *xmax || *ymin == *ymax) return std::nullopt;

  detail::NeumaierSum sx, sy;
  for (double v : x) sx.add(v);
  for (double v : y) sy.add(v);
  const double mx = *sx.mean();
  const double my = *sy.mean();
  detail::NeumaierSum sxx, syy, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx.add(dx * dx);
    syy.add(dy * dy);
    sxy.add(dx * dy);
  }
  const double den = std::sqrt(sxx.value() * syy.value());
  if (den == 0.0) return std::nullopt;
  return sxy.value() / den;
}

enum class Grouping {
  by_system,  // fix (language, system), correlate across source segments
  by_item,    // fix (language, segment), correlate across systems
};

enum class SkipPolicy {
  skip_and_report,  // undefined cells drop out of their language mean
  zero,             // undefined cells count as 0
};

inline std::string_view grouping_name(Grouping g) {
  return g == Grouping::by_system ? "group_by_system" : "group_by_item";
}

struct CellKey {
  LangPair lang;
  std::string group;  // system_id (by_system) or segment_id (by_item)

  auto operator<=>(const CellKey&) const = default;
};

struct SkippedCell {
  CellKey cell;
  std::string reason;
};

struct CorrelationReport {
  Grouping grouping = Grouping::by_system;
  SkipPolicy skip_policy = SkipPolicy::skip_and_report;
  std::map<CellKey, TauResult> per_cell;
  std::map<CellKey, std::size_t> excluded_per_cell;  // rows dropped for missing estimate
  std::map<LangPair, std::optional<double>> per_language;
  std::optional<double> dec;
  std::vector<SkippedCell> skipped;
  std::size_t cells_used = 0;
  std::size_t total_excluded = 0;
};

namespace detail {

struct CellTask {
  CellKey key;
  const std::vector<std::size_t>* rows;
};

// Shared by dec() and the agreement/alignment reports: tau over one cell's
// (estimate, gold) vectors with missing-estimate exclusion.
struct CellOutcome {
  std::optional<TauResult> tau;   // nullopt when < 2 usable points
  std::size_t excluded = 0;
};

inline CellOutcome correlate_cell(const DifficultyEstimate& estimate, const TestSet& ts,
                                  const std::vector<std::size_t>& rows,
                                  TauWorkspace& ws) {
  std::vector<double> hyp, gold;
  hyp.reserve(rows.size());
  gold.reserve(rows.size());
  CellOutcome out;
  for (std::size_t idx : rows) {
    const Translation& tr = ts.translation(idx);
    const auto* seg = ts.segment(tr.segment_id);
    auto est = estimate.lookup(tr.segment_id, tr.target_lang, tr.system_id);
    (void)seg;
    if (!est) {
      ++out.excluded;
      continue;
    }
    hyp.push_back(*est);
    gold.push_back(*tr.human_score);
  }
  if (hyp.size() < 2) return out;
  out.tau = kendall_tau_b_ws(hyp, gold, ws);
  return out;
}

}  // namespace detail

// Difficulty Estimation Correlation: per-cell tau-b, averaged per language
// pair, then across language pairs. Fails fast when any translation lacks
// a human score. Undefined cells follow the skip policy; languages whose
// cells are all skipped drop out of the final mean. dec is nullopt when
// nothing at all survives.
inline CorrelationReport dec(const DifficultyEstimate& estimate, const TestSet& ts,
                             Grouping grouping = Grouping::by_system,
                             SkipPolicy skip_policy = SkipPolicy::skip_and_report,
                             int workers = 1) {
  if (!ts.all_scored())
    throw ValidationError("dec: every translation needs a human_score");

  const auto& groups = grouping == Grouping::by_system ? ts.cells() : ts.items();
  std::vector<detail::CellTask> tasks;
  tasks.reserve(groups.size());
  for (const auto& [key, rows] : groups)
    tasks.push_back({CellKey{key.first, key.second}, &rows});

  std::vector<detail::CellOutcome> outcomes(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    thread_local detail::TauWorkspace ws;
    outcomes[i] = detail::correlate_cell(estimate, ts, *tasks[i].rows, ws);
  });

  CorrelationReport report;
  report.grouping = grouping;
  report.skip_policy = skip_policy;

  std::map<LangPair, detail::NeumaierSum> lang_sums;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& key = tasks[i].key;
    const auto& outcome = outcomes[i];
    report.total_excluded += outcome.excluded;
    if (outcome.excluded > 0) report.excluded_per_cell[key] = outcome.excluded;
    lang_sums.try_emplace(key.lang);
    if (!outcome.tau) {
      report.skipped.push_back({key, "fewer than 2 scored segments with estimates"});
      continue;
    }
    report.per_cell.emplace(key, *outcome.tau);
    if (!outcome.tau->value) {
      if (skip_policy == SkipPolicy::skip_and_report) {
        report.skipped.push_back({key, "tau undefined (a tie denominator factor is 0)"});
        continue;
      }
      lang_sums[key.lang].add(0.0);
      ++report.cells_used;
      continue;
    }
    lang_sums[key.lang].add(*outcome.tau->value);
    ++report.cells_used;
  }

  detail::NeumaierSum dec_sum;
  for (const auto& [lang, sum] : lang_sums) {
    auto mean = sum.mean();
    report.per_language[lang] = mean;
    if (mean) dec_sum.add(*mean);
  }
  report.dec = dec_sum.mean();
  return report;
}

struct AgreementMatrix {
  std::vector<std::string> translators;
  // values[i][j]: mean over shared language pairs of tau-b between the two
  // translators' score vectors; diagonal is exactly 1.
  std::vector<std::vector<std::optional<double>>> values;
};

inline AgreementMatrix agreement_matrix(const TestSet& ts,
                                        const std::vector<std::string>& translators) {
  if (translators.empty())
    throw ValidationError("agreement_matrix: no translators given");
  AgreementMatrix m;
  m.translators = translators;
  const std::size_t k = translators.size();
  m.values.assign(k, std::vector<std::optional<double>>(k));

  detail::TauWorkspace ws;
  for (std::size_t a = 0; a < k; ++a) {
    m.values[a][a] = 1.0;
    for (std::size_t b = a + 1; b < k; ++b) {
      detail::NeumaierSum sum;
      for (const auto& pair : ts.languages()) {
        const auto* cell_a = ts.cell(pair, translators[a]);
        const auto* cell_b = ts.cell(pair, translators[b]);
        if (!cell_a || !cell_b) continue;
        // Score per segment for each side, then the shared-segment vectors.
        std::map<std::string, double> scores_a;
        for (std::size_t idx : *cell_a) {
          const auto& tr = ts.translation(idx);
          if (!tr.human_score)
            throw ValidationError("agreement_matrix: unscored translation for '" +
                                  translators[a] + "'");
          scores_a.emplace(tr.segment_id, *tr.human_score);
        }
        std::vector<double> va, vb;
        for (std::size_t idx : *cell_b) {
          const auto& tr = ts.translation(idx);
          auto it = scores_a.find(tr.segment_id);
          if (it == scores_a.end()) continue;
          if (!tr.human_score)
            throw ValidationError("agreement_matrix: unscored translation for '" +
                                  translators[b] + "'");
          va.push_back(it->second);
          vb.push_back(*tr.human_score);
        }
        if (va.size() < 2) continue;
        auto tau = detail::kendall_tau_b_ws(va, vb, ws);
        if (tau.value) sum.add(*tau.value);
      }
      m.values[a][b] = m.values[b][a] = sum.mean();
    }
  }
  return m;
}

struct SystemAlignment {
  double mean_tau = 0.0;
  double std_tau = 0.0;  // population standard deviation
  std::size_t language_count = 0;
};

// Per-system mean/std of per-language-pair tau between the estimate and
// that system's human scores. Systems covering fewer than min_languages
// pairs (with a defined tau) are excluded.
inline std::map<std::string, SystemAlignment> per_system_alignment(
    const DifficultyEstimate& estimate, const TestSet& ts, std::size_t min_languages) {
  if (!ts.all_scored())
    throw ValidationError("per_system_alignment: every translation needs a human_score");
  std::map<std::string, std::vector<double>> taus_by_system;
  detail::TauWorkspace ws;
  for (const auto& [key, rows] : ts.cells()) {
    auto outcome = detail::correlate_cell(estimate, ts, rows, ws);
    if (outcome.tau && outcome.tau->value)
      taus_by_system[key.second].push_back(*outcome.tau->value);
  }
  std::map<std::string, SystemAlignment> result;
  for (const auto& [system, taus] : taus_by_system) {
    if (taus.size() < min_languages) continue;
    detail::NeumaierSum sum;
    for (double t : taus) sum.add(t);
    const double mean = *sum.mean();
    detail::NeumaierSum sq;
    for (double t : taus) sq.add((t - mean) * (t - mean));
    result[system] = SystemAlignment{
        mean, std::sqrt(*sq.mean()), taus.size()};
  }
  return result;
}

}  // namespace mtdiff
