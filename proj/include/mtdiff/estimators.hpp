#pragma once

// Difficulty estimators: built-in heuristics over source text, ingestion
// of external score tables, crowd aggregation, oracles and baselines.
// Every builder returns canonical quality-like scores (higher = easier).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mtdiff/conllu.hpp"
#include "mtdiff/corpus.hpp"
#include "mtdiff/detail/hash.hpp"
#include "mtdiff/detail/sum.hpp"
#include "mtdiff/errors.hpp"
#include "mtdiff/estimate.hpp"
#include "mtdiff/parallel.hpp"
#include "mtdiff/score_table.hpp"
#include "mtdiff/text.hpp"

namespace mtdiff {

// Longer text = harder, so the score is the negated token count.
inline double text_length_score(std::string_view text, const TokenizerConfig& cfg = {}) {
  return -static_cast<double>(count_tokens(text, cfg));
}

// Mean lexicon frequency over tokens (OOV tokens take the floor value).
// More common words = easier, which is already quality-like; paper_literal
// negates, restoring the "negative average frequency" reading.
inline double word_rarity_score(std::string_view text, const FrequencyLexicon& lexicon,
                                const TokenizerConfig& cfg = {}, bool paper_literal = false) {
  detail::NeumaierSum sum;
  for (const auto& token : tokenize(text, cfg)) sum.add(lexicon.value(token));
  const double mean = sum.mean().value_or(0.0);
  return paper_literal ? -mean : mean;
}

enum class HeightAggregate { max, mean };

// Negated dependency-tree height; multi-sentence segments aggregate by the
// tallest sentence (or the mean, when configured). nullopt = no parse.
inline std::optional<double> syntactic_complexity_score(
    std::string_view segment_id, const ParseTable& parses,
    HeightAggregate aggregate = HeightAggregate::max) {
  if (aggregate == HeightAggregate::max) {
    auto h = parses.max_height(segment_id);
    if (!h) return std::nullopt;
    return -static_cast<double>(*h);
  }
  auto h = parses.mean_height(segment_id);
  if (!h) return std::nullopt;
  return -*h;
}

struct EstimateBuild {
  DifficultyEstimate estimate;
  std::vector<std::string> warnings;
  std::vector<std::string> missing_segments;  // excluded, never imputed
};

namespace detail {

template <typename ScoreFn>
EstimateBuild build_source_only(const std::string& name, const TestSet& ts, int workers,
                                ScoreFn&& score_of) {
  const auto& segments = ts.segments();
  std::vector<std::optional<double>> scores(segments.size());
  parallel_for(segments.size(), workers,
               [&](std::size_t i) { scores[i] = score_of(segments[i]); });
  EstimateBuild out;
  out.estimate = DifficultyEstimate(name);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (scores[i]) {
      out.estimate.set_src(segments[i].segment_id, *scores[i]);
    } else {
      out.missing_segments.push_back(segments[i].segment_id);
    }
  }
  if (!out.missing_segments.empty())
    out.warnings.push_back(name + ": no estimate for " +
                           std::to_string(out.missing_segments.size()) + " segment(s)");
  return out;
}

}  // namespace detail

inline EstimateBuild estimate_text_length(const TestSet& ts, const TokenizerConfig& cfg = {},
                                          int workers = 1) {
  auto build = detail::build_source_only(
      "text_length", ts, workers,
      [&](const SourceSegment& seg) -> std::optional<double> {
        return text_length_score(seg.text, cfg);
      });
  for (const auto& seg : ts.segments()) {
    if (count_tokens(seg.text, cfg) == 0) {
      build.warnings.push_back("text_length: segment '" + seg.segment_id +
                               "' has no tokens, scored 0");
    }
  }
  return build;
}

inline EstimateBuild estimate_word_rarity(const TestSet& ts, const FrequencyLexicon& lexicon,
                                          const TokenizerConfig& cfg = {},
                                          bool paper_literal = false, int workers = 1) {
  return detail::build_source_only(
      "word_rarity", ts, workers,
      [&](const SourceSegment& seg) -> std::optional<double> {
        return word_rarity_score(seg.text, lexicon, cfg, paper_literal);
      });
}

inline EstimateBuild estimate_syntactic_complexity(
    const TestSet& ts, const ParseTable& parses,
    HeightAggregate aggregate = HeightAggregate::max, int workers = 1) {
  return detail::build_source_only(
      "syntactic_complexity", ts, workers,
      [&](const SourceSegment& seg) -> std::optional<double> {
        return syntactic_complexity_score(seg.segment_id, parses, aggregate);
      });
}

enum class CrowdMode { per_language, pooled };

// Mean crowd QE score per segment: per target language (keys (seg, lang, *))
// or pooled over systems and languages (keys (seg, *, *)). Each table holds
// one crowd system's scores and must be quality-like.
inline EstimateBuild crowd_aggregate(const std::string& name,
                                     const std::vector<const ScoreTable*>& qe_tables,
                                     const TestSet& ts, CrowdMode mode) {
  if (qe_tables.empty())
    throw ValidationError("crowd_aggregate: no QE tables given");
  for (const auto* t : qe_tables) {
    if (t->orientation() != Orientation::quality_like)
      throw ValidationError("crowd_aggregate: table '" + t->name() +
                            "' is not quality_like");
  }

  EstimateBuild out;
  out.estimate = DifficultyEstimate(name);
  std::size_t gaps = 0;

  for (const auto& seg : ts.segments()) {
    std::vector<std::string> langs;
    for (const auto& pair : ts.languages())
      if (pair.src == seg.source_lang) langs.push_back(pair.tgt);

    if (mode == CrowdMode::per_language) {
      bool any = false;
      for (const auto& lang : langs) {
        detail::NeumaierSum sum;
        for (const auto* t : qe_tables) {
          if (auto v = t->lookup_lang(seg.segment_id, lang)) {
            sum.add(*v);
          } else {
            ++gaps;
          }
        }
        if (auto mean = sum.mean()) {
          out.estimate.set_lang(seg.segment_id, lang, *mean);
          any = true;
        }
      }
      if (!any) out.missing_segments.push_back(seg.segment_id);
    } else {
      detail::NeumaierSum sum;
      for (const auto& lang : langs) {
        for (const auto* t : qe_tables) {
          if (auto v = t->lookup_lang(seg.segment_id, lang)) {
            sum.add(*v);
          } else {
            ++gaps;
          }
        }
      }
      if (auto mean = sum.mean()) {
        out.estimate.set_src(seg.segment_id, *mean);
      } else {
        out.missing_segments.push_back(seg.segment_id);
      }
    }
  }

  if (gaps > 0)
    out.warnings.push_back(name + ": " + std::to_string(gaps) +
                           " (segment, language) cell(s) missing from some crowd table");
  if (!out.missing_segments.empty())
    out.warnings.push_back(name + ": no crowd coverage for " +
                           std::to_string(out.missing_segments.size()) + " segment(s)");
  return out;
}

enum class OracleLevel {
  full,      // one score per (segment, language, system): the true score
  src_lang,  // mean across systems, per (segment, language)
  src,       // mean across systems and languages, per segment
};

inline DifficultyEstimate oracle_estimate(const TestSet& ts, OracleLevel level) {
  if (!ts.all_scored())
    throw ValidationError("oracle: every translation needs a human_score");
  const char* name = level == OracleLevel::full      ? "oracle_full"
                     : level == OracleLevel::src_lang ? "oracle_src_lang"
                                                      : "oracle_src";
  DifficultyEstimate est{std::string(name)};
  if (level == OracleLevel::full) {
    for (const auto& tr : ts.translations())
      est.set(tr.segment_id, tr.target_lang, tr.system_id, *tr.human_score);
    return est;
  }
  if (level == OracleLevel::src_lang) {
    std::map<std::pair<std::string, std::string>, detail::NeumaierSum> sums;
    for (const auto& tr : ts.translations())
      sums[{tr.segment_id, tr.target_lang}].add(*tr.human_score);
    for (const auto& [key, sum] : sums)
      est.set_lang(key.first, key.second, *sum.mean());
    return est;
  }
  std::map<std::string, detail::NeumaierSum> sums;
  for (const auto& tr : ts.translations()) sums[tr.segment_id].add(*tr.human_score);
  for (const auto& [seg, sum] : sums) est.set_src(seg, *sum.mean());
  return est;
}

// Uniform [0, 1) per segment from a fixed generator, so results are
// reproducible across platforms and runs.
inline DifficultyEstimate random_estimate(const TestSet& ts, std::uint64_t seed) {
  DifficultyEstimate est("random");
  std::mt19937_64 gen(seed);
  for (const auto& seg : ts.segments()) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    est.set_src(seg.segment_id, u);
  }
  return est;
}

inline DifficultyEstimate constant_estimate(const TestSet& ts, double value) {
  DifficultyEstimate est("constant");
  for (const auto& seg : ts.segments()) est.set_src(seg.segment_id, value);
  return est;
}

enum class EstimatorKind {
  text_length,
  word_rarity,
  syntactic_complexity,
  external,
  crowd_aggregate,
  oracle_full,
  oracle_src_lang,
  oracle_src,
  random_uniform,
  constant,
};

inline std::optional<EstimatorKind> parse_estimator_kind(std::string_view s) {
  if (s == "text_length") return EstimatorKind::text_length;
  if (s == "word_rarity") return EstimatorKind::word_rarity;
  if (s == "syntactic_complexity") return EstimatorKind::syntactic_complexity;
  if (s == "external") return EstimatorKind::external;
  if (s == "crowd_aggregate") return EstimatorKind::crowd_aggregate;
  if (s == "oracle_full") return EstimatorKind::oracle_full;
  if (s == "oracle_src_lang") return EstimatorKind::oracle_src_lang;
  if (s == "oracle_src") return EstimatorKind::oracle_src;
  if (s == "random") return EstimatorKind::random_uniform;
  if (s == "constant") return EstimatorKind::constant;
  return std::nullopt;
}

struct EstimatorSpec {
  std::string name;
  EstimatorKind kind = EstimatorKind::text_length;
  TokenizerConfig tokenizer;

  std::string lexicon_path;  // word_rarity
  double oov_floor = 0.0;
  bool paper_literal = false;

  std::string parses_path;  // syntactic_complexity
  HeightAggregate height_aggregate = HeightAggregate::max;

  std::string table_path;  // external
  Orientation orientation = Orientation::quality_like;

  std::vector<std::string> table_paths;  // crowd_aggregate
  CrowdMode crowd_mode = CrowdMode::pooled;

  std::optional<std::uint64_t> seed;  // random
  double constant_value = 0.0;        // constant

  void validate() const {
    auto require = [&](bool ok, const char* what) {
      if (!ok)
        throw ValidationError("estimator '" + name + "': missing parameter " + what);
    };
    switch (kind) {
      case EstimatorKind::word_rarity: require(!lexicon_path.empty(), "'lexicon'"); break;
      case EstimatorKind::syntactic_complexity:
        require(!parses_path.empty(), "'parses'");
        break;
      case EstimatorKind::external: require(!table_path.empty(), "'path'"); break;
      case EstimatorKind::crowd_aggregate:
        require(!table_paths.empty(), "'tables'");
        break;
      default: break;
    }
  }

  bool needs_human_scores() const {
    return kind == EstimatorKind::oracle_full || kind == EstimatorKind::oracle_src_lang ||
           kind == EstimatorKind::oracle_src;
  }

  bool stochastic() const { return kind == EstimatorKind::random_uniform; }
};

// Config file shape: {"estimators": {"<name>": {"kind": ..., ...}, ...}}.
inline EstimatorSpec estimator_spec_from_json(const std::string& name,
                                              const nlohmann::json& obj) {
  if (!obj.is_object())
    throw ValidationError("estimator '" + name + "': spec must be a JSON object");
  EstimatorSpec spec;
  spec.name = name;
  if (!obj.contains("kind") || !obj["kind"].is_string())
    throw ValidationError("estimator '" + name + "': missing 'kind'");
  auto kind = parse_estimator_kind(obj["kind"].get<std::string>());
  if (!kind)
    throw ValidationError("estimator '" + name + "': unknown kind '" +
                          obj["kind"].get<std::string>() + "'");
  spec.kind = *kind;

  if (obj.contains("tokenizer")) {
    const auto& mode = obj["tokenizer"];
    if (mode == "whitespace") {
      spec.tokenizer.mode = TokenizerMode::whitespace;
    } else if (mode == "words") {
      spec.tokenizer.mode = TokenizerMode::words;
    } else {
      throw ValidationError("estimator '" + name + "': unknown tokenizer");
    }
  }
  if (obj.contains("lexicon")) spec.lexicon_path = obj["lexicon"].get<std::string>();
  if (obj.contains("floor")) spec.oov_floor = obj["floor"].get<double>();
  if (obj.contains("paper_literal")) spec.paper_literal = obj["paper_literal"].get<bool>();
  if (obj.contains("parses")) spec.parses_path = obj["parses"].get<std::string>();
  if (obj.contains("height_aggregate")) {
    const auto& agg = obj["height_aggregate"];
    if (agg == "max") {
      spec.height_aggregate = HeightAggregate::max;
    } else if (agg == "mean") {
      spec.height_aggregate = HeightAggregate::mean;
    } else {
      throw ValidationError("estimator '" + name + "': unknown height_aggregate");
    }
  }
  if (obj.contains("path")) spec.table_path = obj["path"].get<std::string>();
  if (obj.contains("orientation"))
    spec.orientation = parse_orientation(obj["orientation"].get<std::string>());
  if (obj.contains("tables")) {
    for (const auto& t : obj["tables"]) spec.table_paths.push_back(t.get<std::string>());
  }
  if (obj.contains("mode")) {
    const auto& mode = obj["mode"];
    if (mode == "pooled") {
      spec.crowd_mode = CrowdMode::pooled;
    } else if (mode == "per_language") {
      spec.crowd_mode = CrowdMode::per_language;
    } else {
      throw ValidationError("estimator '" + name + "': unknown crowd mode");
    }
  }
  if (obj.contains("seed")) spec.seed = obj["seed"].get<std::uint64_t>();
  if (obj.contains("value")) spec.constant_value = obj["value"].get<double>();
  spec.validate();
  return spec;
}

inline std::vector<EstimatorSpec> load_estimator_config(const std::string& path) {
  nlohmann::json doc = nlohmann::json::parse(detail::read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("estimators") ||
      !doc["estimators"].is_object())
    throw ParseError(path + ": expected {\"estimators\": {name: spec, ...}}");
  std::vector<EstimatorSpec> specs;
  for (const auto& [name, obj] : doc["estimators"].items())
    specs.push_back(estimator_spec_from_json(name, obj));
  return specs;
}

// Materializes one estimator. Relative resource paths resolve against
// base_dir. Stochastic estimators take spec.seed if set, otherwise a
// per-name stream derived from global_seed.
inline EstimateBuild build_estimator(const EstimatorSpec& spec, const TestSet& ts,
                                     const std::string& base_dir = ".",
                                     std::optional<std::uint64_t> global_seed = std::nullopt,
                                     int workers = 1) {
  spec.validate();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    if (fp.is_absolute()) return p;
    return (std::filesystem::path(base_dir) / fp).string();
  };

  EstimateBuild out;
  switch (spec.kind) {
    case EstimatorKind::text_length:
      out = estimate_text_length(ts, spec.tokenizer, workers);
      break;
    case EstimatorKind::word_rarity: {
      auto lexicon = load_frequency_lexicon(resolve(spec.lexicon_path), spec.oov_floor);
      out = estimate_word_rarity(ts, lexicon, spec.tokenizer, spec.paper_literal, workers);
      break;
    }
    case EstimatorKind::syntactic_complexity: {
      auto parses = load_parses(resolve(spec.parses_path));
      out = estimate_syntactic_complexity(ts, parses, spec.height_aggregate, workers);
      for (const auto& d : parses.diagnostics) out.warnings.push_back(d);
      break;
    }
    case EstimatorKind::external: {
      auto table = load_scores(resolve(spec.table_path), spec.name, spec.orientation);
      out.estimate = canonicalize(table);
      break;
    }
    case EstimatorKind::crowd_aggregate: {
      std::vector<ScoreTable> tables;
      tables.reserve(spec.table_paths.size());
      for (const auto& p : spec.table_paths) {
        tables.push_back(load_scores(resolve(p), std::filesystem::path(p).stem().string(),
                                     Orientation::quality_like));
      }
      std::vector<const ScoreTable*> ptrs;
      for (const auto& t : tables) ptrs.push_back(&t);
      out = crowd_aggregate(spec.name, ptrs, ts, spec.crowd_mode);
      break;
    }
    case EstimatorKind::oracle_full:
      out.estimate = oracle_estimate(ts, OracleLevel::full);
      break;
    case EstimatorKind::oracle_src_lang:
      out.estimate = oracle_estimate(ts, OracleLevel::src_lang);
      break;
    case EstimatorKind::oracle_src:
      out.estimate = oracle_estimate(ts, OracleLevel::src);
      break;
    case EstimatorKind::random_uniform: {
      std::uint64_t seed;
      if (spec.seed) {
        seed = *spec.seed;
      } else if (global_seed) {
        seed = detail::splitmix64(*global_seed ^ detail::fnv1a64(spec.name));
      } else {
        throw ValidationError("estimator '" + spec.name + "': random estimator needs a seed");
      }
      out.estimate = random_estimate(ts, seed);
      break;
    }
    case EstimatorKind::constant:
      out.estimate = constant_estimate(ts, spec.constant_value);
      break;
  }
  // The configured name wins over the builder's default.
  if (out.estimate.name() != spec.name && !spec.name.empty()) {
    DifficultyEstimate renamed(spec.name);
    for (const auto& [key, score] : out.estimate.table().entries())
      renamed.set(key.segment_id, key.target_lang, key.system_id, score);
    out.estimate = std::move(renamed);
  }
  return out;
}

}  // namespace mtdiff
