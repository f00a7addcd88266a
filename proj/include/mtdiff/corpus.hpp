#pragma once

// Data model for annotated MT test sets: source segments, per-system
// translations with human quality annotations, and the loaders that build
// validated in-memory test sets from JSONL/TSV rows. Everything is
// immutable after construction and safe to share across threads.

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mtdiff/detail/io.hpp"
#include "mtdiff/detail/numfmt.hpp"
#include "mtdiff/errors.hpp"
#include "mtdiff/score_table.hpp"
#include "mtdiff/text.hpp"

namespace mtdiff {

enum class Protocol { esa, mqm, other };

inline std::string_view protocol_name(Protocol p) {
  switch (p) {
    case Protocol::esa: return "ESA";
    case Protocol::mqm: return "MQM";
    default: return "other";
  }
}

inline std::optional<Protocol> parse_protocol(std::string_view s) {
  if (s == "ESA" || s == "esa") return Protocol::esa;
  if (s == "MQM" || s == "mqm") return Protocol::mqm;
  if (s == "other" || s == "OTHER" || s.empty()) return Protocol::other;
  return std::nullopt;
}

struct LangPair {
  std::string src;
  std::string tgt;

  auto operator<=>(const LangPair&) const = default;
  std::string str() const { return src + "-" + tgt; }
};

struct SourceSegment {
  std::string segment_id;
  std::string doc_id;
  std::string source_lang;
  std::string text;
  std::string domain;
  std::optional<long long> source_error_count;

  friend bool operator==(const SourceSegment&, const SourceSegment&) = default;
};

struct Translation {
  std::string segment_id;
  std::string target_lang;
  std::string system_id;
  std::string text;
  std::optional<double> human_score;
  Protocol protocol = Protocol::other;
  bool is_human = false;

  friend bool operator==(const Translation&, const Translation&) = default;
};

namespace detail {

inline std::optional<std::string> check_score_range(Protocol protocol,
                                                    std::optional<double> score) {
  if (protocol != Protocol::other && !score)
    return std::string("protocol ") + std::string(protocol_name(protocol)) +
           " requires a human_score";
  if (!score) return std::nullopt;
  if (!std::isfinite(*score)) return std::string("non-finite human_score");
  if (protocol == Protocol::esa && (*score < 0.0 || *score > 100.0))
    return "ESA score " + format_double(*score) + " outside [0, 100]";
  if (protocol == Protocol::mqm && *score > 0.0)
    return "MQM score " + format_double(*score) + " must be <= 0";
  return std::nullopt;
}

}  // namespace detail

class TestSet {
 public:
  TestSet() = default;

  // Validates every type invariant; throws ValidationError on the first
  // violation. Text fields are NFC-normalized here, so programmatically
  // built sets behave exactly like loaded ones.
  static TestSet build(std::vector<SourceSegment> segments,
                       std::vector<Translation> translations) {
    TestSet ts;
    for (auto& seg : segments) {
      seg.segment_id = nfc(seg.segment_id);
      seg.doc_id = nfc(seg.doc_id);
      seg.source_lang = nfc(seg.source_lang);
      seg.text = nfc(seg.text);
      seg.domain = nfc(seg.domain);
      if (trim_whitespace(seg.text).empty())
        throw ValidationError("segment '" + seg.segment_id + "': empty source text");
      if (seg.segment_id.empty()) throw ValidationError("segment with empty id");
      if (seg.source_error_count && *seg.source_error_count < 0)
        throw ValidationError("segment '" + seg.segment_id + "': negative source_error_count");
    }
    std::sort(segments.begin(), segments.end(),
              [](const auto& a, const auto& b) { return a.segment_id < b.segment_id; });
    for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
      if (segments[i].segment_id == segments[i + 1].segment_id)
        throw ValidationError("duplicate segment_id '" + segments[i].segment_id + "'");
    }
    ts.segments_ = std::move(segments);
    for (std::size_t i = 0; i < ts.segments_.size(); ++i) {
      ts.segment_index_.emplace(ts.segments_[i].segment_id, i);
      ts.domains_.insert(ts.segments_[i].domain);
    }

    for (auto& tr : translations) {
      tr.segment_id = nfc(tr.segment_id);
      tr.target_lang = nfc(tr.target_lang);
      tr.system_id = nfc(tr.system_id);
      tr.text = nfc(tr.text);
      auto it = ts.segment_index_.find(tr.segment_id);
      if (it == ts.segment_index_.end())
        throw ValidationError("translation references unknown segment '" + tr.segment_id + "'");
      if (tr.target_lang.empty() || tr.system_id.empty())
        throw ValidationError("translation of '" + tr.segment_id +
                              "': empty target_lang or system_id");
      if (auto err = detail::check_score_range(tr.protocol, tr.human_score))
        throw ValidationError("translation (" + tr.segment_id + ", " + tr.target_lang +
                              ", " + tr.system_id + "): " + *err);
    }
    std::sort(translations.begin(), translations.end(), [](const auto& a, const auto& b) {
      return std::tie(a.segment_id, a.target_lang, a.system_id) <
             std::tie(b.segment_id, b.target_lang, b.system_id);
    });
    for (std::size_t i = 0; i + 1 < translations.size(); ++i) {
      const auto& a = translations[i];
      const auto& b = translations[i + 1];
      if (a.segment_id == b.segment_id && a.target_lang == b.target_lang &&
          a.system_id == b.system_id)
        throw ValidationError("duplicate translation key (" + a.segment_id + ", " +
                              a.target_lang + ", " + a.system_id + ")");
    }
    ts.translations_ = std::move(translations);

    for (std::size_t i = 0; i < ts.translations_.size(); ++i) {
      const auto& tr = ts.translations_[i];
      const auto& seg = ts.segments_[ts.segment_index_.at(tr.segment_id)];
      LangPair pair{seg.source_lang, tr.target_lang};
      ts.languages_.insert(pair);
      ts.systems_[pair].insert(tr.system_id);
      ts.cells_[{pair, tr.system_id}].push_back(i);
      ts.item_cells_[{pair, tr.segment_id}].push_back(i);
      if (tr.is_human) ts.human_systems_.insert(tr.system_id);
    }
    // Cell vectors are already segment-ordered because translations_ is
    // sorted by (segment, lang, system).
    return ts;
  }

  const std::vector<SourceSegment>& segments() const { return segments_; }
  const std::vector<Translation>& translations() const { return translations_; }
  const std::set<LangPair>& languages() const { return languages_; }
  const std::map<LangPair, std::set<std::string>>& systems_per_language() const {
    return systems_;
  }
  const std::set<std::string>& domains() const { return domains_; }
  const std::set<std::string>& human_systems() const { return human_systems_; }

  const SourceSegment* segment(std::string_view id) const {
    auto it = segment_index_.find(std::string(id));
    return it == segment_index_.end() ? nullptr : &segments_[it->second];
  }

  // Translation indices for one (language pair, system) cell, segment-ordered.
  const std::vector<std::size_t>* cell(const LangPair& pair, const std::string& system) const {
    auto it = cells_.find({pair, system});
    return it == cells_.end() ? nullptr : &it->second;
  }

  // Translation indices for one (language pair, segment) item, system-ordered.
  const std::vector<std::size_t>* item(const LangPair& pair, const std::string& segment) const {
    auto it = item_cells_.find({pair, segment});
    return it == item_cells_.end() ? nullptr : &it->second;
  }

  const std::map<std::pair<LangPair, std::string>, std::vector<std::size_t>>& cells() const {
    return cells_;
  }
  const std::map<std::pair<LangPair, std::string>, std::vector<std::size_t>>& items() const {
    return item_cells_;
  }

  const Translation& translation(std::size_t index) const { return translations_[index]; }

  bool all_scored() const {
    return std::all_of(translations_.begin(), translations_.end(),
                       [](const Translation& t) { return t.human_score.has_value(); });
  }

  friend bool operator==(const TestSet& a, const TestSet& b) {
    return a.segments_ == b.segments_ && a.translations_ == b.translations_;
  }

 private:
  std::vector<SourceSegment> segments_;        // sorted by segment_id
  std::vector<Translation> translations_;      // sorted by (segment, lang, system)
  std::map<std::string, std::size_t> segment_index_;
  std::set<LangPair> languages_;
  std::map<LangPair, std::set<std::string>> systems_;
  std::set<std::string> domains_;
  std::set<std::string> human_systems_;
  std::map<std::pair<LangPair, std::string>, std::vector<std::size_t>> cells_;
  std::map<std::pair<LangPair, std::string>, std::vector<std::size_t>> item_cells_;
};

enum class TestSetFormat { jsonl, tsv };

namespace detail {

struct RowData {
  SourceSegment segment;
  Translation translation;
};

inline const std::vector<std::string>& testset_columns() {
  static const std::vector<std::string> cols = {
      "segment_id", "doc_id", "source_lang", "target_lang", "domain",
      "source_text", "system_id", "is_human", "translation", "human_score",
      "protocol", "source_error_count"};
  return cols;
}

// Accumulates parsed rows, enforcing row-local and cross-row invariants
// with line-number diagnostics before TestSet::build seals the result.
class TestSetAssembler {
 public:
  explicit TestSetAssembler(const std::string& path)
      : errors_(path), parse_errors_(path) {}

  void add_row(std::size_t lineno, RowData row) {
    auto& seg = row.segment;
    auto& tr = row.translation;
    seg.segment_id = nfc(seg.segment_id);
    seg.doc_id = nfc(seg.doc_id);
    seg.source_lang = nfc(seg.source_lang);
    seg.text = nfc(seg.text);
    seg.domain = nfc(seg.domain);
    tr.segment_id = seg.segment_id;
    tr.target_lang = nfc(tr.target_lang);
    tr.system_id = nfc(tr.system_id);
    tr.text = nfc(tr.text);

    bool ok = true;
    if (seg.segment_id.empty()) {
      errors_.add(lineno, "empty segment_id");
      ok = false;
    }
    if (trim_whitespace(seg.text).empty()) {
      errors_.add(lineno, "empty source_text for segment '" + seg.segment_id + "'");
      ok = false;
    }
    if (seg.source_lang.empty() || tr.target_lang.empty()) {
      errors_.add(lineno, "empty source_lang or target_lang");
      ok = false;
    }
    if (tr.system_id.empty()) {
      errors_.add(lineno, "empty system_id");
      ok = false;
    }
    if (seg.source_error_count && *seg.source_error_count < 0) {
      errors_.add(lineno, "negative source_error_count");
      ok = false;
    }
    if (auto err = check_score_range(tr.protocol, tr.human_score)) {
      errors_.add(lineno, *err);
      ok = false;
    }
    if (!ok) return;

    auto [sit, fresh] = first_seen_.emplace(seg.segment_id, lineno);
    if (fresh) {
      segments_.push_back(seg);
      seg_by_id_.emplace(seg.segment_id, segments_.size() - 1);
    } else {
      const auto& prev = segments_[seg_by_id_.at(seg.segment_id)];
      if (prev != seg) {
        errors_.add(lineno, "segment '" + seg.segment_id +
                                "' metadata conflicts with line " +
                                std::to_string(sit->second));
        return;
      }
    }

    auto [tit, tfresh] = translation_lines_.emplace(
        std::make_tuple(tr.segment_id, tr.target_lang, tr.system_id), lineno);
    if (!tfresh) {
      errors_.add(lineno, "duplicate (segment, target_lang, system) key, first seen at line " +
                              std::to_string(tit->second));
      return;
    }
    translations_.push_back(std::move(tr));
  }

  void add_parse_error(std::size_t lineno, const std::string& message) {
    parse_errors_.add(lineno, message);
  }

  TestSet finish() {
    if (!parse_errors_.empty()) parse_errors_.raise<ParseError>();
    errors_.raise_validation_if_any();
    return TestSet::build(std::move(segments_), std::move(translations_));
  }

 private:
  detail::ErrorCollector errors_;
  detail::ErrorCollector parse_errors_;
  std::vector<SourceSegment> segments_;
  std::vector<Translation> translations_;
  std::map<std::string, std::size_t> seg_by_id_;
  std::map<std::string, std::size_t> first_seen_;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> translation_lines_;
};

inline std::optional<RowData> parse_jsonl_row(const nlohmann::json& obj, std::string* error) {
  auto fail = [&](std::string msg) {
    *error = std::move(msg);
    return std::optional<RowData>{};
  };
  if (!obj.is_object()) return fail("row is not a JSON object");

  auto str_field = [&](const char* name, bool required,
                       std::optional<std::string>* out) -> bool {
    auto it = obj.find(name);
    if (it == obj.end() || it->is_null()) {
      if (required) {
        *error = std::string("missing field '") + name + "'";
        return false;
      }
      *out = std::nullopt;
      return true;
    }
    if (!it->is_string()) {
      *error = std::string("field '") + name + "' is not a string";
      return false;
    }
    *out = it->get<std::string>();
    return true;
  };

  RowData row;
  std::optional<std::string> s;
  if (!str_field("segment_id", true, &s)) return std::nullopt;
  row.segment.segment_id = *s;
  if (!str_field("doc_id", true, &s)) return std::nullopt;
  row.segment.doc_id = *s;
  if (!str_field("source_lang", true, &s)) return std::nullopt;
  row.segment.source_lang = *s;
  if (!str_field("target_lang", true, &s)) return std::nullopt;
  row.translation.target_lang = *s;
  if (!str_field("domain", true, &s)) return std::nullopt;
  row.segment.domain = *s;
  if (!str_field("source_text", true, &s)) return std::nullopt;
  row.segment.text = *s;
  if (!str_field("system_id", true, &s)) return std::nullopt;
  row.translation.system_id = *s;
  if (!str_field("translation", true, &s)) return std::nullopt;
  row.translation.text = *s;

  auto ih = obj.find("is_human");
  if (ih == obj.end() || !ih->is_boolean()) return fail("missing or non-boolean 'is_human'");
  row.translation.is_human = ih->get<bool>();

  auto hs = obj.find("human_score");
  if (hs != obj.end() && !hs->is_null()) {
    if (!hs->is_number()) return fail("'human_score' is not a number");
    row.translation.human_score = hs->get<double>();
  }

  if (!str_field("protocol", false, &s)) return std::nullopt;
  if (s) {
    auto p = parse_protocol(*s);
    if (!p) return fail("unknown protocol '" + *s + "'");
    row.translation.protocol = *p;
  }

  auto ec = obj.find("source_error_count");
  if (ec != obj.end() && !ec->is_null()) {
    if (!ec->is_number_integer()) return fail("'source_error_count' is not an integer");
    row.segment.source_error_count = ec->get<long long>();
  }
  return row;
}

}  // namespace detail

inline TestSet load_testset(const std::string& path, TestSetFormat format) {
  auto in = detail::open_input(path);
  detail::TestSetAssembler assembler(path);

  if (format == TestSetFormat::jsonl) {
    detail::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
      if (trim_whitespace(line).empty()) return;
      nlohmann::json obj = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (obj.is_discarded()) {
        assembler.add_parse_error(lineno, "invalid JSON");
        return;
      }
      std::string error;
      auto row = detail::parse_jsonl_row(obj, &error);
      if (!row) {
        assembler.add_parse_error(lineno, error);
        return;
      }
      assembler.add_row(lineno, std::move(*row));
    });
    return assembler.finish();
  }

  // TSV: header row required, columns may appear in any order.
  std::map<std::string, std::size_t> col;
  bool have_header = false;
  detail::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    if (!have_header) {
      auto fields = detail::split_tsv(line);
      for (std::size_t i = 0; i < fields.size(); ++i) {
        std::string name(fields[i]);
        const auto& known = detail::testset_columns();
        if (std::find(known.begin(), known.end(), name) == known.end())
          throw ParseError(detail::at_line(path, lineno) + "unknown column '" + name + "'");
        if (!col.emplace(name, i).second)
          throw ParseError(detail::at_line(path, lineno) + "duplicate column '" + name + "'");
      }
      for (const auto& required :
           {"segment_id", "doc_id", "source_lang", "target_lang", "domain", "source_text",
            "system_id", "is_human", "translation"}) {
        if (!col.count(required))
          throw ParseError(detail::at_line(path, lineno) + "missing required column '" +
                           std::string(required) + "'");
      }
      have_header = true;
      return;
    }
    if (line.empty()) return;
    auto fields = detail::split_tsv(line);
    auto get = [&](const std::string& name) -> std::optional<std::string_view> {
      auto it = col.find(name);
      if (it == col.end() || it->second >= fields.size()) return std::nullopt;
      return fields[it->second];
    };
    if (fields.size() < col.size()) {
      assembler.add_parse_error(lineno, "expected " + std::to_string(col.size()) +
                                            " fields, got " + std::to_string(fields.size()));
      return;
    }

    detail::RowData row;
    row.segment.segment_id = std::string(*get("segment_id"));
    row.segment.doc_id = std::string(*get("doc_id"));
    row.segment.source_lang = std::string(*get("source_lang"));
    row.translation.target_lang = std::string(*get("target_lang"));
    row.segment.domain = std::string(*get("domain"));
    row.segment.text = std::string(*get("source_text"));
    row.translation.system_id = std::string(*get("system_id"));
    row.translation.text = std::string(*get("translation"));

    auto is_human = *get("is_human");
    if (is_human == "true" || is_human == "1") {
      row.translation.is_human = true;
    } else if (is_human == "false" || is_human == "0") {
      row.translation.is_human = false;
    } else {
      assembler.add_parse_error(lineno, "bad is_human value '" + std::string(is_human) + "'");
      return;
    }

    if (auto hs = get("human_score"); hs && !hs->empty()) {
      auto v = detail::parse_double(*hs);
      if (!v) {
        assembler.add_parse_error(lineno, "bad human_score '" + std::string(*hs) + "'");
        return;
      }
      row.translation.human_score = *v;
    }
    if (auto pr = get("protocol"); pr && !pr->empty()) {
      auto p = parse_protocol(*pr);
      if (!p) {
        assembler.add_parse_error(lineno, "unknown protocol '" + std::string(*pr) + "'");
        return;
      }
      row.translation.protocol = *p;
    }
    if (auto sec = get("source_error_count"); sec && !sec->empty()) {
      auto v = detail::parse_int(*sec);
      if (!v) {
        assembler.add_parse_error(lineno, "bad source_error_count '" + std::string(*sec) + "'");
        return;
      }
      row.segment.source_error_count = *v;
    }
    assembler.add_row(lineno, std::move(row));
  });
  if (!have_header) throw ParseError(path + ": empty TSV (header row required)");
  return assembler.finish();
}

// Canonical serialization: one row per translation, sorted by
// (segment, target_lang, system); JSON objects carry alphabetically ordered
// keys. load(save(ts)) == ts.
inline void save_testset(const TestSet& ts, const std::string& path, TestSetFormat format) {
  auto out = detail::open_output(path);
  if (format == TestSetFormat::jsonl) {
    for (const auto& tr : ts.translations()) {
      const auto* seg = ts.segment(tr.segment_id);
      nlohmann::json obj;
      obj["segment_id"] = seg->segment_id;
      obj["doc_id"] = seg->doc_id;
      obj["source_lang"] = seg->source_lang;
      obj["target_lang"] = tr.target_lang;
      obj["domain"] = seg->domain;
      obj["source_text"] = seg->text;
      obj["system_id"] = tr.system_id;
      obj["is_human"] = tr.is_human;
      obj["translation"] = tr.text;
      if (tr.human_score) obj["human_score"] = *tr.human_score;
      obj["protocol"] = std::string(protocol_name(tr.protocol));
      if (seg->source_error_count) obj["source_error_count"] = *seg->source_error_count;
      out << obj.dump() << '\n';
    }
    return;
  }

  auto check_field = [](const std::string& value) -> const std::string& {
    if (value.find('\t') != std::string::npos || value.find('\n') != std::string::npos)
      throw ValidationError("field contains tab or newline, not representable in TSV: '" +
                            value + "'");
    return value;
  };
  const auto& cols = detail::testset_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "\t" : "") << cols[i];
  out << '\n';
  for (const auto& tr : ts.translations()) {
    const auto* seg = ts.segment(tr.segment_id);
    out << check_field(seg->segment_id) << '\t' << check_field(seg->doc_id) << '\t'
        << check_field(seg->source_lang) << '\t' << check_field(tr.target_lang) << '\t'
        << check_field(seg->domain) << '\t' << check_field(seg->text) << '\t'
        << check_field(tr.system_id) << '\t' << (tr.is_human ? "true" : "false") << '\t'
        << check_field(tr.text) << '\t'
        << (tr.human_score ? detail::format_double(*tr.human_score) : "") << '\t'
        << protocol_name(tr.protocol) << '\t'
        << (seg->source_error_count ? std::to_string(*seg->source_error_count) : "") << '\n';
  }
}

// JSONL: {"segment_id", "target_lang", "system_id", "vector": [...]}.
inline EmbeddingTable load_embeddings(const std::string& path) {
  EmbeddingTable table;
  auto in = detail::open_input(path);
  detail::ErrorCollector errors(path);
  detail::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    if (trim_whitespace(line).empty()) return;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      errors.add(lineno, "invalid JSON row");
      return;
    }
    if (!obj.contains("segment_id") || !obj.contains("target_lang") ||
        !obj.contains("system_id") || !obj.contains("vector") ||
        !obj["vector"].is_array()) {
      errors.add(lineno, "row must carry segment_id, target_lang, system_id, vector");
      return;
    }
    std::vector<double> vec;
    vec.reserve(obj["vector"].size());
    for (const auto& v : obj["vector"]) {
      if (!v.is_number() || !std::isfinite(v.get<double>())) {
        errors.add(lineno, "non-numeric or non-finite vector component");
        return;
      }
      vec.push_back(v.get<double>());
    }
    if (vec.empty()) {
      errors.add(lineno, "empty vector");
      return;
    }
    if (table.dimension == 0) {
      table.dimension = vec.size();
    } else if (vec.size() != table.dimension) {
      errors.add(lineno, "vector dimension " + std::to_string(vec.size()) +
                             " != expected " + std::to_string(table.dimension));
      return;
    }
    EmbeddingKey key{nfc(obj["segment_id"].get<std::string>()),
                     nfc(obj["target_lang"].get<std::string>()),
                     nfc(obj["system_id"].get<std::string>())};
    if (!table.entries.emplace(std::move(key), std::move(vec)).second)
      errors.add(lineno, "duplicate embedding key");
  });
  errors.raise_validation_if_any();
  return table;
}

}  // namespace mtdiff
