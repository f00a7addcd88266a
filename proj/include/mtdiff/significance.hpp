#pragma once

// Pairwise permutation testing between difficulty estimators and the
// significance-cluster ranks derived from it. The test statistic is the
// DEC difference on the estimators' common coverage; each resample swaps
// the two estimators' scores per source segment (all of a segment's cells
// swap together) with probability 1/2.

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtdiff/corpus.hpp"
#include "mtdiff/detail/hash.hpp"
#include "mtdiff/detail/sum.hpp"
#include "mtdiff/errors.hpp"
#include "mtdiff/estimate.hpp"
#include "mtdiff/parallel.hpp"
#include "mtdiff/rank_stats.hpp"

namespace mtdiff {

struct PermTestConfig {
  int resamples = 1000;
  std::uint64_t seed = 0;
  Grouping grouping = Grouping::by_system;
  SkipPolicy skip_policy = SkipPolicy::skip_and_report;
  int workers = 1;
};

namespace detail {

struct PairedCell {
  LangPair lang;
  std::vector<double> gold;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<std::uint64_t> segment_hash;
};

struct PairedData {
  std::vector<PairedCell> cells;  // ordered by (lang, group key)
  std::size_t dropped_rows = 0;   // rows without common estimate coverage
};

inline PairedData build_paired(const DifficultyEstimate& ea, const DifficultyEstimate& eb,
                               const TestSet& ts, Grouping grouping) {
  if (!ts.all_scored())
    throw ValidationError("perm_both_test: every translation needs a human_score");
  PairedData data;
  const auto& groups = grouping == Grouping::by_system ? ts.cells() : ts.items();
  for (const auto& [key, rows] : groups) {
    PairedCell cell;
    cell.lang = key.first;
    for (std::size_t idx : rows) {
      const Translation& tr = ts.translation(idx);
      auto va = ea.lookup(tr.segment_id, tr.target_lang, tr.system_id);
      auto vb = eb.lookup(tr.segment_id, tr.target_lang, tr.system_id);
      if (!va || !vb) {
        ++data.dropped_rows;
        continue;
      }
      cell.gold.push_back(*tr.human_score);
      cell.a.push_back(*va);
      cell.b.push_back(*vb);
      cell.segment_hash.push_back(fnv1a64(tr.segment_id));
    }
    if (cell.gold.size() >= 2) data.cells.push_back(std::move(cell));
  }
  return data;
}

// DEC difference under one swap assignment. nullopt when either side ends
// up with no defined language mean.
template <typename SwapFn>
std::optional<double> paired_delta(const PairedData& data, SkipPolicy skip_policy,
                                   SwapFn&& swapped, TauWorkspace& ws,
                                   std::vector<double>& hyp) {
  std::map<LangPair, NeumaierSum> lang_a, lang_b;
  for (const auto& cell : data.cells) {
    const std::size_t n = cell.gold.size();
    lang_a.try_emplace(cell.lang);
    lang_b.try_emplace(cell.lang);
    for (int side = 0; side < 2; ++side) {
      hyp.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const bool swap = swapped(cell.segment_hash[i]);
        const double va = swap ? cell.b[i] : cell.a[i];
        const double vb = swap ? cell.a[i] : cell.b[i];
        hyp[i] = side == 0 ? va : vb;
      }
      auto tau = kendall_tau_b_ws(hyp, cell.gold, ws);
      auto& sums = side == 0 ? lang_a : lang_b;
      if (tau.value) {
        sums[cell.lang].add(*tau.value);
      } else if (skip_policy == SkipPolicy::zero) {
        sums[cell.lang].add(0.0);
      }
    }
  }
  NeumaierSum dec_a, dec_b;
  for (const auto& [lang, sum] : lang_a)
    if (auto m = sum.mean()) dec_a.add(*m);
  for (const auto& [lang, sum] : lang_b)
    if (auto m = sum.mean()) dec_b.add(*m);
  auto ma = dec_a.mean();
  auto mb = dec_b.mean();
  if (!ma || !mb) return std::nullopt;
  return *ma - *mb;
}

struct PairTestOutcome {
  double delta = 0.0;
  double p_a_beats_b = 1.0;
  double p_b_beats_a = 1.0;
};

// Runs both one-sided tails in one pass over the resamples. The swap
// stream is keyed by the unordered estimator pair, so (a, b) and (b, a)
// share draws and p_ab + p_ba >= 1 holds exactly.
inline PairTestOutcome perm_both_pair(const DifficultyEstimate& ea,
                                      const DifficultyEstimate& eb, const TestSet& ts,
                                      const PermTestConfig& cfg) {
  if (cfg.resamples < 1)
    throw ValidationError("perm_both_test: resamples must be >= 1");
  PairedData data = build_paired(ea, eb, ts, cfg.grouping);
  if (data.cells.empty())
    throw ValidationError("perm_both_test: no common coverage between '" + ea.name() +
                          "' and '" + eb.name() + "'");

  TauWorkspace ws0;
  std::vector<double> hyp0;
  auto delta0 = paired_delta(
      data, cfg.skip_policy, [](std::uint64_t) { return false; }, ws0, hyp0);
  if (!delta0)
    throw ValidationError("perm_both_test: DEC undefined on the common coverage of '" +
                          ea.name() + "' and '" + eb.name() + "'");

  const std::string lo = std::min(ea.name(), eb.name());
  const std::string hi = std::max(ea.name(), eb.name());
  const std::uint64_t stream = fnv1a64(lo + "\x1f" + hi);

  const auto resamples = static_cast<std::size_t>(cfg.resamples);
  std::atomic<long long> count_ge{0};
  std::atomic<long long> count_le{0};
  parallel_for(resamples, cfg.workers, [&](std::size_t r) {
    thread_local TauWorkspace ws;
    thread_local std::vector<double> hyp;
    auto swapped = [&](std::uint64_t seg_hash) {
      return counter_bit(cfg.seed, stream, static_cast<std::uint64_t>(r), seg_hash);
    };
    auto delta = paired_delta(data, cfg.skip_policy, swapped, ws, hyp);
    // A degenerate resample counts toward both tails; conservative and rare.
    if (!delta || *delta >= *delta0) count_ge.fetch_add(1, std::memory_order_relaxed);
    if (!delta || *delta <= *delta0) count_le.fetch_add(1, std::memory_order_relaxed);
  });

  PairTestOutcome out;
  out.delta = *delta0;
  const double denom = 1.0 + static_cast<double>(cfg.resamples);
  out.p_a_beats_b = (1.0 + static_cast<double>(count_ge.load())) / denom;
  out.p_b_beats_a = (1.0 + static_cast<double>(count_le.load())) / denom;
  return out;
}

}  // namespace detail

// One-sided p for "a's DEC exceeds b's by chance": share of resampled
// score swaps whose DEC difference reaches the observed one (with the
// add-one Monte Carlo correction). Deterministic given the seed.
inline double perm_both_test(const DifficultyEstimate& est_a, const DifficultyEstimate& est_b,
                             const TestSet& ts, const PermTestConfig& cfg) {
  return detail::perm_both_pair(est_a, est_b, ts, cfg).p_a_beats_b;
}

struct SignificanceResult {
  std::vector<std::string> estimators;
  std::vector<std::optional<double>> dec_values;  // each estimator's own-coverage DEC
  std::vector<std::vector<double>> p_values;      // p[i][j]: i beats j; diagonal 1
  std::vector<int> ranks;                         // 1 + #{significantly better estimators}
  double alpha = 0.05;
  int resamples = 0;
  std::uint64_t seed = 0;
};

inline SignificanceResult rank_clusters(const std::vector<const DifficultyEstimate*>& estimates,
                                        const TestSet& ts, double alpha,
                                        const PermTestConfig& cfg) {
  const std::size_t k = estimates.size();
  if (k < 2) throw ValidationError("rank_clusters: need at least 2 estimators");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("rank_clusters: alpha must be in (0, 1)");

  SignificanceResult res;
  res.alpha = alpha;
  res.resamples = cfg.resamples;
  res.seed = cfg.seed;
  res.estimators.reserve(k);
  for (const auto* e : estimates) res.estimators.push_back(e->name());

  for (const auto* e : estimates) {
    auto report = dec(*e, ts, cfg.grouping, cfg.skip_policy, cfg.workers);
    res.dec_values.push_back(report.dec);
  }

  res.p_values.assign(k, std::vector<double>(k, 1.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      auto outcome = detail::perm_both_pair(*estimates[i], *estimates[j], ts, cfg);
      res.p_values[i][j] = outcome.p_a_beats_b;
      res.p_values[j][i] = outcome.p_b_beats_a;
    }
  }

  res.ranks.assign(k, 1);
  for (std::size_t j = 0; j < k; ++j) {
    int better = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (i != j && res.p_values[i][j] < alpha) ++better;
    }
    res.ranks[j] = 1 + better;
  }
  return res;
}

}  // namespace mtdiff
