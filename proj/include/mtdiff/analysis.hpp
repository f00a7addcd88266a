#pragma once

// Pitfall analyses: per-segment source variables (length, error rate,
// output diversity, unique-output ratio) and their Pearson correlations
// with difficulty estimates.

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mtdiff/chrf.hpp"
#include "mtdiff/corpus.hpp"
#include "mtdiff/detail/sum.hpp"
#include "mtdiff/errors.hpp"
#include "mtdiff/estimate.hpp"
#include "mtdiff/parallel.hpp"
#include "mtdiff/rank_stats.hpp"
#include "mtdiff/score_table.hpp"
#include "mtdiff/text.hpp"

namespace mtdiff {

struct SegmentVariables {
  std::optional<double> source_length;        // token count
  std::optional<double> errors_per_word;      // source_error_count / token count
  std::optional<double> diversity_embedding;  // mean pairwise inner product
  std::optional<double> diversity_chrf;       // mean pairwise symmetric chrF
  std::optional<double> unique_outputs;       // distinct translations / translations

  std::optional<double> get(std::string_view variable) const {
    if (variable == "source_length") return source_length;
    if (variable == "source_errors_per_word") return errors_per_word;
    if (variable == "diversity_embedding") return diversity_embedding;
    if (variable == "diversity_chrf") return diversity_chrf;
    if (variable == "unique_outputs") return unique_outputs;
    throw ValidationError("unknown pitfall variable '" + std::string(variable) + "'");
  }
};

inline constexpr std::array<std::string_view, 5> kPitfallVariables = {
    "source_length", "source_errors_per_word", "diversity_embedding", "diversity_chrf",
    "unique_outputs"};

struct SourceVariables {
  std::map<std::string, SegmentVariables> per_segment;
  std::vector<std::string> notes;
};

namespace detail {

inline std::optional<double> inner_product(const std::vector<double>& a,
                                           const std::vector<double>& b) {
  if (a.size() != b.size()) return std::nullopt;
  NeumaierSum sum;
  for (std::size_t i = 0; i < a.size(); ++i) sum.add(a[i] * b[i]);
  return sum.value();
}

}  // namespace detail

// Diversity variables pair up the translations of a segment within each
// target language; languages with fewer than two translations are left out
// of the diversity means. unique_outputs includes any language with at
// least one translation.
inline SourceVariables source_variables(const TestSet& ts,
                                        const EmbeddingTable* embeddings = nullptr,
                                        const TokenizerConfig& tokenizer = {},
                                        const ChrfConfig& chrf_config = {},
                                        int workers = 1) {
  const auto& segments = ts.segments();
  std::vector<SegmentVariables> rows(segments.size());

  parallel_for(segments.size(), workers, [&](std::size_t si) {
    const auto& seg = segments[si];
    SegmentVariables v;
    const auto tokens = static_cast<double>(count_tokens(seg.text, tokenizer));
    v.source_length = tokens;
    if (seg.source_error_count && tokens > 0.0)
      v.errors_per_word = static_cast<double>(*seg.source_error_count) / tokens;

    detail::NeumaierSum emb_langs, chrf_langs, unique_langs;
    for (const auto& pair : ts.languages()) {
      if (pair.src != seg.source_lang) continue;
      const auto* rows_idx = ts.item(pair, seg.segment_id);
      if (!rows_idx || rows_idx->empty()) continue;

      // Unique-output ratio: distinct strings over translation count.
      std::set<std::string> distinct;
      for (std::size_t idx : *rows_idx) distinct.insert(ts.translation(idx).text);
      unique_langs.add(static_cast<double>(distinct.size()) /
                       static_cast<double>(rows_idx->size()));

      if (rows_idx->size() < 2) continue;  // no pairs to compare

      detail::NeumaierSum chrf_pairs;
      for (std::size_t i = 0; i < rows_idx->size(); ++i) {
        for (std::size_t j = i + 1; j < rows_idx->size(); ++j) {
          auto value = chrf_symmetric(ts.translation((*rows_idx)[i]).text,
                                      ts.translation((*rows_idx)[j]).text, chrf_config);
          if (value) chrf_pairs.add(*value);
        }
      }
      if (auto mean = chrf_pairs.mean()) chrf_langs.add(*mean);

      if (embeddings) {
        std::vector<const std::vector<double>*> vecs;
        for (std::size_t idx : *rows_idx) {
          const auto& tr = ts.translation(idx);
          if (const auto* vec = embeddings->find(tr.segment_id, tr.target_lang, tr.system_id))
            vecs.push_back(vec);
        }
        if (vecs.size() >= 2) {
          detail::NeumaierSum emb_pairs;
          for (std::size_t i = 0; i < vecs.size(); ++i) {
            for (std::size_t j = i + 1; j < vecs.size(); ++j) {
              if (auto ip = detail::inner_product(*vecs[i], *vecs[j])) emb_pairs.add(*ip);
            }
          }
          if (auto mean = emb_pairs.mean()) emb_langs.add(*mean);
        }
      }
    }
    v.unique_outputs = unique_langs.mean();
    v.diversity_chrf = chrf_langs.mean();
    v.diversity_embedding = emb_langs.mean();
    rows[si] = std::move(v);
  });

  SourceVariables out;
  for (std::size_t i = 0; i < segments.size(); ++i)
    out.per_segment.emplace(segments[i].segment_id, rows[i]);
  if (!embeddings)
    out.notes.push_back("no embedding table given; diversity_embedding undefined");
  return out;
}

enum class PitfallAggregation { per_language_mean, pooled };

struct PitfallEntry {
  std::optional<double> r;
  std::string reason;  // set when r is undefined
};

struct PitfallReport {
  PitfallAggregation aggregation = PitfallAggregation::per_language_mean;
  // estimator name -> variable name -> correlation
  std::map<std::string, std::map<std::string, PitfallEntry>> rows;
};

// Pearson correlation between canonical (quality-like) estimates and each
// source variable: per language pair then averaged, or pooled over all
// segments. Pooled mode resolves estimates through the source-only tier and
// also serves raw corpora without any translations.
inline PitfallReport pitfall_correlations(
    const std::vector<const DifficultyEstimate*>& estimates, const TestSet& ts,
    const SourceVariables& variables,
    PitfallAggregation aggregation = PitfallAggregation::per_language_mean) {
  PitfallReport report;
  report.aggregation = aggregation;

  for (const auto* est : estimates) {
    auto& row = report.rows[est->name()];
    for (auto variable : kPitfallVariables) {
      PitfallEntry entry;
      if (aggregation == PitfallAggregation::pooled) {
        std::vector<double> xs, ys;
        for (const auto& seg : ts.segments()) {
          auto x = est->lookup_src(seg.segment_id);
          auto y = variables.per_segment.at(seg.segment_id).get(variable);
          if (!x || !y) continue;
          xs.push_back(*x);
          ys.push_back(*y);
        }
        if (xs.size() < 2) {
          entry.reason = "fewer than 2 segments with both estimate and variable";
        } else if (auto r = pearson(xs, ys)) {
          entry.r = r;
        } else {
          entry.reason = "zero variance";
        }
      } else {
        detail::NeumaierSum langs;
        std::string last_reason = "no language pair produced a defined correlation";
        for (const auto& pair : ts.languages()) {
          std::vector<double> xs, ys;
          for (const auto& seg : ts.segments()) {
            if (seg.source_lang != pair.src) continue;
            if (!ts.item(pair, seg.segment_id)) continue;
            auto x = est->lookup_lang(seg.segment_id, pair.tgt);
            auto y = variables.per_segment.at(seg.segment_id).get(variable);
            if (!x || !y) continue;
            xs.push_back(*x);
            ys.push_back(*y);
          }
          if (xs.size() < 2) {
            last_reason = "fewer than 2 segments with both estimate and variable";
            continue;
          }
          if (auto r = pearson(xs, ys)) {
            langs.add(*r);
          } else {
            last_reason = "zero variance";
          }
        }
        if (auto mean = langs.mean()) {
          entry.r = mean;
        } else {
          entry.reason = last_reason;
        }
      }
      row.emplace(std::string(variable), std::move(entry));
    }
  }
  return report;
}

}  // namespace mtdiff
