#pragma once

// Deterministic synthetic test sets for calibration and significance
// checks: freely sized grids of segments x systems x language pairs with
// i.i.d. integer ESA scores.

#include <random>
#include <string>
#include <vector>

#include "mtdiff/corpus.hpp"

namespace synthetic {

struct GridConfig {
  std::size_t segments = 500;
  std::size_t systems = 10;
  std::size_t languages = 3;
  std::uint64_t seed = 1234;
  bool with_error_counts = true;
};

inline std::string seg_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%05zu", i);
  return buf;
}

inline mtdiff::TestSet make_grid(const GridConfig& cfg = {}) {
  std::mt19937_64 gen(cfg.seed);
  auto rint = [&](long long lo, long long hi) {
    return static_cast<long long>(lo + static_cast<long long>(gen() % static_cast<std::uint64_t>(
                                           hi - lo + 1)));
  };

  static const char* kWords[] = {"river", "stone", "bright", "harbor", "letter",
                                 "train",  "cloud", "meadow", "signal", "copper"};
  std::vector<mtdiff::SourceSegment> segments;
  for (std::size_t i = 0; i < cfg.segments; ++i) {
    mtdiff::SourceSegment seg;
    seg.segment_id = seg_name(i);
    seg.doc_id = "d" + std::to_string(i / 10);
    seg.source_lang = "en";
    seg.domain = (i % 2 == 0) ? "news" : "social";
    const auto words = static_cast<std::size_t>(rint(1, 40));
    std::string text;
    for (std::size_t w = 0; w < words; ++w) {
      if (w) text += ' ';
      text += kWords[gen() % 10];
    }
    seg.text = text + ".";
    if (cfg.with_error_counts) seg.source_error_count = rint(0, 5);
    segments.push_back(std::move(seg));
  }

  std::vector<mtdiff::Translation> translations;
  for (std::size_t l = 0; l < cfg.languages; ++l) {
    const std::string tgt = "l" + std::to_string(l);
    for (std::size_t m = 0; m < cfg.systems; ++m) {
      const std::string system = "sys" + std::to_string(m);
      for (std::size_t i = 0; i < cfg.segments; ++i) {
        mtdiff::Translation tr;
        tr.segment_id = seg_name(i);
        tr.target_lang = tgt;
        tr.system_id = system;
        tr.text = "t " + tgt + " " + system + " " + std::to_string(gen() % 7);
        tr.human_score = static_cast<double>(rint(0, 100));
        tr.protocol = mtdiff::Protocol::esa;
        tr.is_human = false;
        translations.push_back(std::move(tr));
      }
    }
  }
  return mtdiff::TestSet::build(std::move(segments), std::move(translations));
}

}  // namespace synthetic
