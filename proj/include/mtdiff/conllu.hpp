#pragma once

// CoNLL-U ingestion for the syntactic-complexity estimator. Only the tree
// shape is needed: token forms and head indices. Sentences attach to
// segments via "# segment_id = ..." comments; a segment may span several
// sentences. Bad trees (multi-root, cyclic, gapped ids) reject the whole
// segment with a diagnostic instead of failing the load.

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

struct DepSentence {
  std::vector<std::string> forms;
  std::vector<int> heads;  // head[i] for token i+1; 0 = virtual root
};

// Height of a single dependency tree, counted in edges from the virtual
// root (a one-token sentence has height 1). Returns an error message for
// structures that are not single-rooted acyclic trees over ids 1..n.
inline std::optional<int> tree_height(const DepSentence& sent, std::string* error) {
  const int n = static_cast<int>(sent.heads.size());
  if (n == 0) {
    if (error) *error = "empty sentence";
    return std::nullopt;
  }
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    if (sent.heads[i] < 0 || sent.heads[i] > n) {
      if (error) *error = "head index " + std::to_string(sent.heads[i]) + " out of range";
      return std::nullopt;
    }
    if (sent.heads[i] == 0) ++roots;
  }
  if (roots != 1) {
    if (error) *error = std::to_string(roots) + " roots (expected exactly 1)";
    return std::nullopt;
  }
  // depth[i] = edges from the virtual root to token i+1; -1 = unvisited.
  // Walk head chains; a chain longer than n nodes can only mean a cycle.
  std::vector<int> depth(static_cast<std::size_t>(n), -1);
  int height = 0;
  for (int i = 0; i < n; ++i) {
    if (depth[i] >= 0) continue;
    std::vector<int> chain;
    int cur = i;
    int base = 0;
    while (true) {
      if (depth[cur] >= 0) {
        base = depth[cur];
        break;
      }
      chain.push_back(cur);
      if (static_cast<int>(chain.size()) > n) {
        if (error) *error = "cycle detected";
        return std::nullopt;
      }
      const int head = sent.heads[cur];
      if (head == 0) {
        base = 0;  // chain.back() is the root token, depth 1
        break;
      }
      cur = head - 1;
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) depth[*it] = ++base;
    if (base > height) height = base;
  }
  return height;
}

struct ParseTable {
  // Per segment, the per-sentence heights in file order.
  std::map<std::string, std::vector<int>> sentence_heights;
  std::map<std::string, std::vector<DepSentence>> trees;
  std::vector<std::string> diagnostics;  // one entry per rejected segment / stray sentence

  bool has(std::string_view segment) const {
    return sentence_heights.count(std::string(segment)) > 0;
  }

  // Height of the tallest sentence tree of the segment.
  std::optional<int> max_height(std::string_view segment) const {
    auto it = sentence_heights.find(std::string(segment));
    if (it == sentence_heights.end() || it->second.empty()) return std::nullopt;
    int h = it->second.front();
    for (int v : it->second) h = std::max(h, v);
    return h;
  }

  std::optional<double> mean_height(std::string_view segment) const {
    auto it = sentence_heights.find(std::string(segment));
    if (it == sentence_heights.end() || it->second.empty()) return std::nullopt;
    double sum = 0.0;
    for (int v : it->second) sum += v;
    return sum / static_cast<double>(it->second.size());
  }
};

namespace detail {

struct PendingSentence {
  std::string segment_id;
  DepSentence sent;
  std::size_t first_line = 0;
  std::vector<long long> ids;
  bool skipped_tokens = false;  // saw multiword ranges or empty nodes
};

inline void flush_sentence(PendingSentence& pending, ParseTable& table,
                           std::map<std::string, std::string>& rejected,
                           const std::string& path) {
  if (pending.sent.forms.empty() && pending.segment_id.empty()) return;
  if (pending.segment_id.empty()) {
    table.diagnostics.push_back(path + ":" + std::to_string(pending.first_line) +
                                ": sentence without '# segment_id = ...' comment, skipped");
    pending = {};
    return;
  }
  std::string reason;
  bool ok = true;
  // Ids must be exactly 1..n: node count equals token count.
  for (std::size_t i = 0; i < pending.ids.size(); ++i) {
    if (pending.ids[i] != static_cast<long long>(i + 1)) {
      reason = "token ids are not sequential 1..n";
      ok = false;
      break;
    }
  }
  if (ok) {
    std::string err;
    auto h = tree_height(pending.sent, &err);
    if (!h) {
      reason = err;
      ok = false;
    } else {
      table.sentence_heights[pending.segment_id].push_back(*h);
      table.trees[pending.segment_id].push_back(std::move(pending.sent));
    }
  }
  if (!ok) rejected.emplace(pending.segment_id, reason);
  pending = {};
}

}  // namespace detail

inline ParseTable load_parses(const std::string& path) {
  ParseTable table;
  auto in = detail::open_input(path);
  detail::PendingSentence pending;
  std::map<std::string, std::string> rejected;  // segment -> first reason
  detail::ErrorCollector hard_errors(path);

  detail::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    if (line.empty()) {
      detail::flush_sentence(pending, table, rejected, path);
      return;
    }
    if (line.front() == '#') {
      std::string_view rest = line.substr(1);
      rest = trim_whitespace(rest);
      constexpr std::string_view kTag = "segment_id";
      if (rest.substr(0, kTag.size()) == kTag) {
        rest.remove_prefix(kTag.size());
        rest = trim_whitespace(rest);
        if (!rest.empty() && rest.front() == '=') {
          rest.remove_prefix(1);
          // A segment_id comment opens a new sentence group.
          if (!pending.sent.forms.empty() || !pending.segment_id.empty())
            detail::flush_sentence(pending, table, rejected, path);
          pending.segment_id = nfc(trim_whitespace(rest));
          pending.first_line = lineno;
        }
      }
      return;
    }
    auto fields = detail::split_tsv(line);
    if (fields.size() < 8) {
      hard_errors.add(lineno, "CoNLL-U token line with fewer than 8 columns");
      return;
    }
    std::string_view id = fields[0];
    // Multiword token ranges ("3-4") and empty nodes ("5.1") are not part
    // of the basic tree.
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) {
      pending.skipped_tokens = true;
      return;
    }
    auto idv = detail::parse_int(id);
    auto head = detail::parse_int(fields[6]);
    if (!idv || !head) {
      hard_errors.add(lineno, "unparseable ID or HEAD column");
      return;
    }
    if (pending.sent.forms.empty() && pending.first_line == 0) pending.first_line = lineno;
    pending.ids.push_back(*idv);
    pending.sent.forms.push_back(nfc(fields[1]));
    pending.sent.heads.push_back(static_cast<int>(*head));
  });
  detail::flush_sentence(pending, table, rejected, path);
  if (!hard_errors.empty()) hard_errors.raise<ParseError>();

  // A rejected sentence poisons its whole segment.
  for (const auto& [seg, reason] : rejected) {
    table.sentence_heights.erase(seg);
    table.trees.erase(seg);
    table.diagnostics.push_back("segment '" + seg + "' rejected: " + reason);
  }
  return table;
}

}  // namespace mtdiff
