#pragma once

#include "mtdiff/analysis.hpp"
#include "mtdiff/chrf.hpp"
#include "mtdiff/conllu.hpp"
#include "mtdiff/corpus.hpp"
#include "mtdiff/errors.hpp"
#include "mtdiff/estimate.hpp"
#include "mtdiff/estimators.hpp"
#include "mtdiff/parallel.hpp"
#include "mtdiff/rank_stats.hpp"
#include "mtdiff/score_table.hpp"
#include "mtdiff/selection.hpp"
#include "mtdiff/significance.hpp"
#include "mtdiff/text.hpp"

namespace mtdiff {
inline constexpr std::string_view kVersion = "0.1.0";
}
