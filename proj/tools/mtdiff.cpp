// mtdiff: difficulty estimation, meta-evaluation (DEC), significance
// ranking, difficult-benchmark selection and pitfall analysis for MT test
// sets. Subcommands: score, evaluate, rank, select, analyze, scan, chrf.
//
// Every run is deterministic given (inputs, config, seed): randomness
// flows from --seed only, reductions are order-fixed, and each output
// directory gets a manifest with input fingerprints for exact reruns.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtdiff/mtdiff.hpp"
#include "mtdiff/detail/hash.hpp"
#include "mtdiff/detail/numfmt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUndefined = 1;  // computation produced only undefined results
constexpr int kExitUsage = 2;      // usage or validation error

struct CommonOptions {
  std::string testset_path;
  std::string config_path;
  std::vector<std::string> estimator_filter;  // names to keep from the config
  std::vector<std::string> score_args;        // name=path[:orientation]
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string format = "tsv";
};

mtdiff::TestSetFormat testset_format_of(const std::string& path) {
  if (path.ends_with(".tsv")) return mtdiff::TestSetFormat::tsv;
  return mtdiff::TestSetFormat::jsonl;
}

std::string fingerprint_file(const std::string& path) {
  const std::string bytes = mtdiff::detail::read_file(path);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv64:%016llx",
                static_cast<unsigned long long>(mtdiff::detail::fnv1a64(bytes)));
  return buf;
}

class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir) {
    fs::create_directories(dir_);
  }

  std::ofstream open(const std::string& name) {
    outputs_.push_back(name);
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw mtdiff::ParseError("cannot write " + (dir_ / name).string());
    return out;
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void write_manifest(const std::string& command, const CommonOptions& opts,
                      const std::vector<std::string>& input_paths) {
    json manifest;
    manifest["command"] = command;
    manifest["version"] = std::string(mtdiff::kVersion);
    if (opts.seed) {
      manifest["seed"] = *opts.seed;
    } else {
      manifest["seed"] = nullptr;
    }
    json inputs = json::object();
    for (const auto& p : input_paths) {
      if (!p.empty()) inputs[p] = fingerprint_file(p);
    }
    manifest["inputs"] = inputs;
    std::sort(outputs_.begin(), outputs_.end());
    manifest["outputs"] = outputs_;
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::vector<std::string> outputs_;
};

struct NamedEstimate {
  mtdiff::EstimatorSpec spec;
  mtdiff::DifficultyEstimate estimate;
  std::vector<std::string> warnings;
};

// Assembles the estimator list from --config (optionally narrowed by
// --estimator) plus any --scores name=path[:orientation] tables.
std::vector<NamedEstimate> build_estimators(const CommonOptions& opts,
                                            const mtdiff::TestSet& ts,
                                            std::vector<std::string>* input_paths) {
  std::vector<mtdiff::EstimatorSpec> specs;
  std::string base_dir = ".";
  if (!opts.config_path.empty()) {
    specs = mtdiff::load_estimator_config(opts.config_path);
    base_dir = fs::path(opts.config_path).parent_path().string();
    if (base_dir.empty()) base_dir = ".";
    input_paths->push_back(opts.config_path);
  }
  if (!opts.estimator_filter.empty()) {
    std::vector<mtdiff::EstimatorSpec> kept;
    for (const auto& want : opts.estimator_filter) {
      auto it = std::find_if(specs.begin(), specs.end(),
                             [&](const auto& s) { return s.name == want; });
      if (it == specs.end())
        throw mtdiff::ValidationError("estimator '" + want + "' not found in config");
      kept.push_back(*it);
    }
    specs = std::move(kept);
  }
  for (const auto& arg : opts.score_args) {
    auto eq = arg.find('=');
    if (eq == std::string::npos)
      throw mtdiff::ValidationError("--scores expects name=path[:orientation], got '" + arg +
                                    "'");
    mtdiff::EstimatorSpec spec;
    spec.name = arg.substr(0, eq);
    spec.kind = mtdiff::EstimatorKind::external;
    std::string rest = arg.substr(eq + 1);
    auto colon = rest.rfind(':');
    if (colon != std::string::npos &&
        (rest.substr(colon + 1) == "quality_like" ||
         rest.substr(colon + 1) == "difficulty_like")) {
      spec.orientation = mtdiff::parse_orientation(rest.substr(colon + 1));
      rest = rest.substr(0, colon);
    }
    spec.table_path = rest;
    specs.push_back(std::move(spec));
  }
  if (specs.empty())
    throw mtdiff::ValidationError("no estimators: give --config and/or --scores");

  std::vector<NamedEstimate> out;
  std::set<std::string> seen;
  for (const auto& spec : specs) {
    if (!seen.insert(spec.name).second)
      throw mtdiff::ValidationError("duplicate estimator name '" + spec.name + "'");
    auto built = mtdiff::build_estimator(spec, ts, base_dir, opts.seed, opts.workers);
    for (const auto& w : built.warnings) std::cerr << "warning: " << w << '\n';
    // Record resource files in the manifest.
    auto resolve = [&](const std::string& p) {
      fs::path fp(p);
      return fp.is_absolute() ? p : (fs::path(base_dir) / fp).string();
    };
    if (!spec.lexicon_path.empty()) input_paths->push_back(resolve(spec.lexicon_path));
    if (!spec.parses_path.empty()) input_paths->push_back(resolve(spec.parses_path));
    if (!spec.table_path.empty()) input_paths->push_back(resolve(spec.table_path));
    for (const auto& p : spec.table_paths) input_paths->push_back(resolve(p));
    out.push_back({spec, std::move(built.estimate), std::move(built.warnings)});
  }
  return out;
}

mtdiff::TestSet load_testset_checked(const CommonOptions& opts,
                                     std::vector<std::string>* input_paths) {
  if (opts.testset_path.empty())
    throw mtdiff::ValidationError("--testset is required");
  input_paths->push_back(opts.testset_path);
  return mtdiff::load_testset(opts.testset_path, testset_format_of(opts.testset_path));
}

std::string fmt_opt(const std::optional<double>& v, int digits) {
  return v ? mtdiff::detail::format_fixed(*v, digits) : "undef";
}

json json_opt(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

void require_seed_for_stochastic(const CommonOptions& opts,
                                 const std::vector<NamedEstimate>& estimators) {
  for (const auto& e : estimators) {
    if (e.spec.stochastic() && !e.spec.seed && !opts.seed)
      throw mtdiff::ValidationError("estimator '" + e.spec.name +
                                    "' is stochastic: --seed is required");
  }
}

// ---------------------------------------------------------------- score --

int cmd_score(const CommonOptions& opts) {
  std::vector<std::string> inputs;
  auto ts = load_testset_checked(opts, &inputs);
  auto estimators = build_estimators(opts, ts, &inputs);
  require_seed_for_stochastic(opts, estimators);

  OutputDir out(opts.out_dir);
  for (const auto& e : estimators) {
    auto f = out.open("scores_" + e.spec.name + ".tsv");
    for (const auto& [key, score] : e.estimate.table().entries()) {
      f << key.segment_id << '\t' << key.target_lang << '\t' << key.system_id << '\t'
        << mtdiff::detail::format_double(score) << '\n';
    }
  }
  out.write_manifest("score", opts, inputs);
  return kExitOk;
}

// -------------------------------------------------------------- evaluate --

int cmd_evaluate(const CommonOptions& opts, const std::string& grouping_name,
                 const std::string& skip_name) {
  std::vector<std::string> inputs;
  auto ts = load_testset_checked(opts, &inputs);
  auto estimators = build_estimators(opts, ts, &inputs);
  require_seed_for_stochastic(opts, estimators);

  const auto grouping = grouping_name == "item" ? mtdiff::Grouping::by_item
                                                : mtdiff::Grouping::by_system;
  const auto skip = skip_name == "zero" ? mtdiff::SkipPolicy::zero
                                        : mtdiff::SkipPolicy::skip_and_report;

  OutputDir out(opts.out_dir);
  json summary;
  summary["grouping"] = std::string(mtdiff::grouping_name(grouping));
  summary["skip_policy"] = skip == mtdiff::SkipPolicy::zero ? "zero" : "skip_and_report";
  json methods = json::array();

  auto tsv = out.open("dec_summary.tsv");
  tsv << "method\tdec\tcells_used\tcells_skipped\texcluded_rows\n";

  bool any_defined = false;
  for (const auto& e : estimators) {
    auto report = mtdiff::dec(e.estimate, ts, grouping, skip, opts.workers);
    if (report.dec) any_defined = true;

    tsv << e.spec.name << '\t' << fmt_opt(report.dec, 4) << '\t' << report.cells_used << '\t'
        << report.skipped.size() << '\t' << report.total_excluded << '\n';

    auto cells = out.open("cells_" + e.spec.name + ".tsv");
    cells << "lang\tgroup\tn\tconcordant\tdiscordant\tties_gold_only\tties_hyp_only\t"
             "ties_both\ttau\tstatus\treason\n";
    for (const auto& [key, tau] : report.per_cell) {
      cells << key.lang.str() << '\t' << key.group << '\t' << tau.n << '\t' << tau.concordant
            << '\t' << tau.discordant << '\t' << tau.ties_gold_only << '\t'
            << tau.ties_hyp_only << '\t' << tau.ties_both << '\t' << fmt_opt(tau.value, 6)
            << '\t' << (tau.value ? "ok" : "skipped") << '\t'
            << (tau.value ? "" : "tau undefined (a tie denominator factor is 0)") << '\n';
    }
    for (const auto& skipped : report.skipped) {
      if (report.per_cell.count(skipped.cell)) continue;  // already listed above
      cells << skipped.cell.lang.str() << '\t' << skipped.cell.group
            << "\t0\t0\t0\t0\t0\t0\tundef\tskipped\t" << skipped.reason << '\n';
    }

    json method;
    method["method"] = e.spec.name;
    method["dec"] = json_opt(report.dec);
    method["cells_used"] = report.cells_used;
    method["cells_skipped"] = report.skipped.size();
    method["excluded_rows"] = report.total_excluded;
    json per_lang = json::object();
    for (const auto& [lang, value] : report.per_language) per_lang[lang.str()] = json_opt(value);
    method["per_language"] = per_lang;
    methods.push_back(method);
  }
  summary["methods"] = methods;
  auto js = out.open("dec_summary.json");
  js << summary.dump(2) << '\n';
  out.write_manifest("evaluate", opts, inputs);
  return any_defined ? kExitOk : kExitUndefined;
}

// ------------------------------------------------------------------ rank --

int cmd_rank(const CommonOptions& opts, double alpha, int resamples,
             const std::string& grouping_name, const std::string& skip_name) {
  std::vector<std::string> inputs;
  auto ts = load_testset_checked(opts, &inputs);
  auto estimators = build_estimators(opts, ts, &inputs);

  mtdiff::PermTestConfig cfg;
  cfg.resamples = resamples;
  cfg.seed = *opts.seed;  // enforced required by CLI11
  cfg.grouping = grouping_name == "item" ? mtdiff::Grouping::by_item
                                         : mtdiff::Grouping::by_system;
  cfg.skip_policy = skip_name == "zero" ? mtdiff::SkipPolicy::zero
                                        : mtdiff::SkipPolicy::skip_and_report;
  cfg.workers = opts.workers;

  std::vector<const mtdiff::DifficultyEstimate*> ptrs;
  for (const auto& e : estimators) ptrs.push_back(&e.estimate);
  auto result = mtdiff::rank_clusters(ptrs, ts, alpha, cfg);

  OutputDir out(opts.out_dir);
  {
    // Rank table rows ordered by (rank, dec descending, name).
    std::vector<std::size_t> order(result.estimators.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (result.ranks[a] != result.ranks[b]) return result.ranks[a] < result.ranks[b];
      const double da = result.dec_values[a].value_or(-2.0);
      const double db = result.dec_values[b].value_or(-2.0);
      if (da != db) return da > db;
      return result.estimators[a] < result.estimators[b];
    });
    auto f = out.open("rank_table.tsv");
    f << "rank\tmethod\tdec\n";
    for (std::size_t i : order) {
      f << result.ranks[i] << '\t' << result.estimators[i] << '\t'
        << fmt_opt(result.dec_values[i], 4) << '\n';
    }
  }
  {
    auto f = out.open("p_matrix.tsv");
    f << "method";
    for (const auto& name : result.estimators) f << '\t' << name;
    f << '\n';
    for (std::size_t i = 0; i < result.estimators.size(); ++i) {
      f << result.estimators[i];
      for (std::size_t j = 0; j < result.estimators.size(); ++j)
        f << '\t' << mtdiff::detail::format_fixed(result.p_values[i][j], 6);
      f << '\n';
    }
  }
  out.write_manifest("rank", opts, inputs);
  return kExitOk;
}

// ---------------------------------------------------------------- select --

int cmd_select(const CommonOptions& opts, double budget_fraction, long long budget_count,
               const std::string& scope_name, bool sweep, const std::string& sweep_grid,
               bool domains) {
  std::vector<std::string> inputs;
  auto ts = load_testset_checked(opts, &inputs);
  auto estimators = build_estimators(opts, ts, &inputs);
  require_seed_for_stochastic(opts, estimators);
  if (estimators.size() != 1)
    throw mtdiff::ValidationError("select needs exactly one estimator (use --estimator)");
  const auto& est = estimators.front().estimate;
  const std::string& name = estimators.front().spec.name;

  const auto scope = scope_name == "per-target-lang" ? mtdiff::SelectionScope::per_target_lang
                                                     : mtdiff::SelectionScope::src;
  std::size_t budget;
  if (budget_count > 0) {
    budget = static_cast<std::size_t>(budget_count);
  } else {
    budget = mtdiff::budget_from_fraction(budget_fraction, ts.segments().size());
  }

  auto results = mtdiff::select_top(est, ts, budget, scope);

  OutputDir out(opts.out_dir);
  json metrics;
  metrics["estimator"] = name;
  metrics["budget"] = budget;
  metrics["scope"] = scope_name;
  json per_scope = json::array();
  for (const auto& r : results) {
    const std::string suffix = r.scope_lang ? "_" + r.scope_lang->str() : "";
    auto f = out.open("selection_" + name + suffix + ".tsv");
    f << "rank\tsegment_id\tscore\n";
    for (std::size_t i = 0; i < r.selected.size(); ++i) {
      f << (i + 1) << '\t' << r.selected[i].first << '\t'
        << mtdiff::detail::format_double(r.selected[i].second) << '\n';
    }
    json rj;
    rj["scope_lang"] = r.scope_lang ? json(r.scope_lang->str()) : json(nullptr);
    rj["selected"] = r.selected.size();
    rj["macro_avg_score"] = json_opt(r.macro_avg_score);
    rj["macro_pct_perfect"] = json_opt(r.macro_pct_perfect);
    json per_lang = json::object();
    for (const auto& [pair, m] : r.per_language) {
      per_lang[pair.str()] = {{"avg_score", m.avg_score},
                              {"pct_perfect", m.pct_perfect},
                              {"segments", m.segments},
                              {"cells", m.cells}};
    }
    rj["per_language"] = per_lang;
    rj["warnings"] = r.diag.warnings;
    per_scope.push_back(rj);
    for (const auto& w : r.diag.warnings) std::cerr << "warning: " << w << '\n';
  }
  metrics["results"] = per_scope;
  auto mj = out.open("metrics_" + name + ".json");
  mj << metrics.dump(2) << '\n';

  if (sweep) {
    std::vector<double> grid;
    if (sweep_grid.empty()) {
      grid = mtdiff::default_budget_grid();
    } else {
      std::string item;
      std::istringstream ss(sweep_grid);
      while (std::getline(ss, item, ',')) {
        auto v = mtdiff::detail::parse_double(item);
        if (!v) throw mtdiff::ValidationError("bad --sweep-grid entry '" + item + "'");
        grid.push_back(*v);
      }
    }
    auto points = mtdiff::budget_sweep(est, ts, grid);
    auto f = out.open("sweep_" + name + ".tsv");
    f << "fraction\tbudget\tmacro_avg_score\tmacro_pct_perfect\n";
    for (const auto& p : points) {
      f << mtdiff::detail::format_double(p.fraction) << '\t' << p.budget << '\t'
        << fmt_opt(p.macro_avg_score, 4) << '\t' << fmt_opt(p.macro_pct_perfect, 4) << '\n';
    }
  }

  if (domains) {
    const double fraction = budget_count > 0
                                ? static_cast<double>(budget) /
                                      static_cast<double>(ts.segments().size())
                                : budget_fraction;
    auto breakdown = mtdiff::domain_breakdown(est, ts, fraction);
    auto f = out.open("domains_" + name + ".tsv");
    f << "domain\tbudget\tselected\tmacro_avg_score\tmacro_pct_perfect\n";
    for (const auto& [domain, r] : breakdown) {
      f << domain << '\t' << r.budget << '\t' << r.selected.size() << '\t'
        << fmt_opt(r.macro_avg_score, 4) << '\t' << fmt_opt(r.macro_pct_perfect, 4) << '\n';
      for (const auto& w : r.diag.warnings) std::cerr << "warning: " << w << '\n';
    }
  }

  out.write_manifest("select", opts, inputs);
  return kExitOk;
}

// --------------------------------------------------------------- analyze --

int cmd_analyze(const CommonOptions& opts, const std::string& embeddings_path,
                const std::string& aggregation_name, double histogram_width,
                const std::string& histogram_pair) {
  std::vector<std::string> inputs;
  auto ts = load_testset_checked(opts, &inputs);
  auto estimators = build_estimators(opts, ts, &inputs);
  require_seed_for_stochastic(opts, estimators);

  std::optional<mtdiff::EmbeddingTable> embeddings;
  if (!embeddings_path.empty()) {
    embeddings = mtdiff::load_embeddings(embeddings_path);
    inputs.push_back(embeddings_path);
  }

  auto variables = mtdiff::source_variables(ts, embeddings ? &*embeddings : nullptr, {},
                                            {}, opts.workers);
  for (const auto& note : variables.notes) std::cerr << "note: " << note << '\n';

  const auto aggregation = aggregation_name == "pooled"
                               ? mtdiff::PitfallAggregation::pooled
                               : mtdiff::PitfallAggregation::per_language_mean;
  std::vector<const mtdiff::DifficultyEstimate*> ptrs;
  for (const auto& e : estimators) ptrs.push_back(&e.estimate);
  auto report = mtdiff::pitfall_correlations(ptrs, ts, variables, aggregation);

  OutputDir out(opts.out_dir);
  {
    auto f = out.open("pitfalls.tsv");
    f << "estimator";
    for (auto v : mtdiff::kPitfallVariables) f << '\t' << v;
    f << '\n';
    for (const auto& e : estimators) {  // keep the configured order
      const auto& row = report.rows.at(e.spec.name);
      f << e.spec.name;
      for (auto v : mtdiff::kPitfallVariables) f << '\t' << fmt_opt(row.at(std::string(v)).r, 4);
      f << '\n';
    }
  }
  {
    auto f = out.open("variables.tsv");
    f << "segment_id";
    for (auto v : mtdiff::kPitfallVariables) f << '\t' << v;
    f << '\n';
    for (const auto& [seg, vars] : variables.per_segment) {
      f << seg;
      for (auto v : mtdiff::kPitfallVariables) {
        auto value = vars.get(v);
        f << '\t' << (value ? mtdiff::detail::format_double(*value) : "undef");
      }
      f << '\n';
    }
  }

  std::optional<mtdiff::LangPair> pair_filter;
  if (!histogram_pair.empty()) {
    auto dash = histogram_pair.find('-');
    if (dash == std::string::npos)
      throw mtdiff::ValidationError("--histogram-pair expects src-tgt, e.g. en-de");
    pair_filter = mtdiff::LangPair{histogram_pair.substr(0, dash),
                                   histogram_pair.substr(dash + 1)};
  }
  for (auto view : {mtdiff::HistogramViewKind::all,
                    mtdiff::HistogramViewKind::top_model_per_language,
                    mtdiff::HistogramViewKind::top_translation_per_source}) {
    auto hist = mtdiff::score_histogram(ts, pair_filter, view, histogram_width);
    auto f = out.open("histogram_" + std::string(mtdiff::histogram_view_name(view)) + ".tsv");
    f << "bin_lower\tbin_upper\tcount\n";
    for (const auto& bin : hist.bins) {
      f << mtdiff::detail::format_double(bin.lower) << '\t'
        << mtdiff::detail::format_double(bin.upper) << '\t' << bin.count << '\n';
    }
  }

  out.write_manifest("analyze", opts, inputs);
  return kExitOk;
}

// ------------------------------------------------------------------ scan --

int cmd_scan(const CommonOptions& opts, const std::string& input_path, long long top_k) {
  if (top_k <= 0) throw mtdiff::ValidationError("--top must be positive");

  // Source-only text estimators are the only streamable kinds.
  mtdiff::EstimatorSpec spec;
  spec.name = "text_length";
  spec.kind = mtdiff::EstimatorKind::text_length;
  std::string base_dir = ".";
  std::vector<std::string> inputs{input_path};
  if (!opts.config_path.empty()) {
    auto specs = mtdiff::load_estimator_config(opts.config_path);
    base_dir = fs::path(opts.config_path).parent_path().string();
    if (base_dir.empty()) base_dir = ".";
    inputs.push_back(opts.config_path);
    if (opts.estimator_filter.size() > 1)
      throw mtdiff::ValidationError("scan takes a single --estimator");
    if (!opts.estimator_filter.empty()) {
      auto it = std::find_if(specs.begin(), specs.end(), [&](const auto& s) {
        return s.name == opts.estimator_filter.front();
      });
      if (it == specs.end())
        throw mtdiff::ValidationError("estimator '" + opts.estimator_filter.front() +
                                      "' not found in config");
      spec = *it;
    } else if (specs.size() == 1) {
      spec = specs.front();
    } else {
      throw mtdiff::ValidationError("scan config has several estimators; pick one with "
                                    "--estimator");
    }
  }
  if (spec.kind != mtdiff::EstimatorKind::text_length &&
      spec.kind != mtdiff::EstimatorKind::word_rarity) {
    throw mtdiff::ValidationError(
        "scan supports only the source-only text estimators (text_length, word_rarity); '" +
        spec.name + "' needs resources or human scores that a raw stream does not have");
  }
  mtdiff::FrequencyLexicon lexicon;
  if (spec.kind == mtdiff::EstimatorKind::word_rarity) {
    const auto path = fs::path(spec.lexicon_path).is_absolute()
                          ? spec.lexicon_path
                          : (fs::path(base_dir) / spec.lexicon_path).string();
    lexicon = mtdiff::load_frequency_lexicon(path, spec.oov_floor);
    inputs.push_back(path);
  }

  struct Entry {
    double score;
    std::string id;
    std::string text;
  };
  // Max-heap on (score, id): the top is the weakest kept candidate, so the
  // structure stays bounded at K entries however long the stream is.
  auto weaker = [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.id < b.id;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(weaker)> heap(weaker);

  auto in = mtdiff::detail::open_input(input_path);
  std::size_t lines = 0;
  mtdiff::detail::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    ++lines;
    const std::string text = mtdiff::nfc(line);
    if (mtdiff::trim_whitespace(text).empty()) return;
    double score;
    if (spec.kind == mtdiff::EstimatorKind::text_length) {
      score = mtdiff::text_length_score(text, spec.tokenizer);
    } else {
      score = mtdiff::word_rarity_score(text, lexicon, spec.tokenizer, spec.paper_literal);
    }
    char id[16];
    std::snprintf(id, sizeof(id), "line%08zu", lineno);
    Entry e{score, id, text};
    if (heap.size() < static_cast<std::size_t>(top_k)) {
      heap.push(std::move(e));
    } else if (weaker(e, heap.top())) {
      heap.pop();
      heap.push(std::move(e));
    }
  });

  std::vector<Entry> ranked;
  while (!heap.empty()) {
    ranked.push_back(heap.top());
    heap.pop();
  }
  std::reverse(ranked.begin(), ranked.end());  // hardest first

  auto emit = [&](std::ostream& f) {
    f << "rank\tsegment_id\tscore\ttext\n";
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      f << (i + 1) << '\t' << ranked[i].id << '\t'
        << mtdiff::detail::format_double(ranked[i].score) << '\t' << ranked[i].text << '\n';
    }
  };
  if (!opts.out_dir.empty()) {
    OutputDir out(opts.out_dir);
    auto f = out.open("topk_" + spec.name + ".tsv");
    emit(f);
    out.write_manifest("scan", opts, inputs);
  } else {
    emit(std::cout);
  }
  return kExitOk;
}

// ------------------------------------------------------------------ chrf --

int cmd_chrf(const CommonOptions& opts, const std::string& hyp_path,
             const std::string& ref_path, int max_n, double beta, bool whitespace_included) {
  mtdiff::ChrfConfig config;
  config.max_n = max_n;
  config.beta = beta;
  config.whitespace_included = whitespace_included;
  config.validate();

  std::vector<std::string> hyp_lines, ref_lines;
  {
    auto in = mtdiff::detail::open_input(hyp_path);
    mtdiff::detail::for_each_line(
        in, [&](std::size_t, std::string_view line) { hyp_lines.emplace_back(line); });
  }
  {
    auto in = mtdiff::detail::open_input(ref_path);
    mtdiff::detail::for_each_line(
        in, [&](std::size_t, std::string_view line) { ref_lines.emplace_back(line); });
  }
  if (hyp_lines.size() != ref_lines.size())
    throw mtdiff::ValidationError("chrf: line counts differ (" +
                                  std::to_string(hyp_lines.size()) + " vs " +
                                  std::to_string(ref_lines.size()) + ")");

  mtdiff::detail::NeumaierSum sum;
  std::size_t defined = 0;
  auto emit = [&](std::ostream& f) {
    f << "line\tchrf\n";
    for (std::size_t i = 0; i < hyp_lines.size(); ++i) {
      auto score = mtdiff::chrf(hyp_lines[i], ref_lines[i], config);
      if (score) {
        sum.add(*score);
        ++defined;
      }
      f << (i + 1) << '\t' << (score ? mtdiff::detail::format_fixed(*score, 4) : "undef")
        << '\n';
    }
    auto mean = sum.mean();
    f << "mean\t" << (mean ? mtdiff::detail::format_fixed(*mean, 4) : "undef") << '\n';
  };
  if (!opts.out_dir.empty()) {
    OutputDir out(opts.out_dir);
    std::vector<std::string> inputs{hyp_path, ref_path};
    auto f = out.open("chrf.tsv");
    emit(f);
    out.write_manifest("chrf", opts, inputs);
  } else {
    emit(std::cout);
  }
  if (defined == 0 && !hyp_lines.empty()) return kExitUndefined;
  return kExitOk;
}

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_testset, bool needs_out) {
  if (needs_testset)
    cmd->add_option("--testset", opts.testset_path, "Test set file (.jsonl or .tsv)")
        ->required();
  cmd->add_option("--config", opts.config_path, "Estimator config JSON");
  cmd->add_option("--estimator", opts.estimator_filter,
                  "Estimator name(s) from the config to use");
  cmd->add_option("--scores", opts.score_args,
                  "Ingest a score table as an estimator: name=path[:orientation]");
  auto* out = cmd->add_option("--out", opts.out_dir, "Output directory");
  if (needs_out) out->required();
  cmd->add_option("--seed", opts.seed, "Seed for stochastic estimators / tests");
  cmd->add_option("--workers", opts.workers, "Worker threads (results are identical "
                                             "for any value)")
      ->check(CLI::Range(1, 256));
  cmd->add_option("--format", opts.format, "Summary format")
      ->check(CLI::IsMember({"tsv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"difficulty estimation toolkit for machine translation test sets"};
  app.require_subcommand(1);

  CommonOptions score_opts, eval_opts, rank_opts, select_opts, analyze_opts, scan_opts,
      chrf_opts;

  auto* score = app.add_subcommand("score", "Materialize estimators as score tables");
  add_common(score, score_opts, true, true);

  auto* evaluate = app.add_subcommand("evaluate", "DEC meta-evaluation report");
  add_common(evaluate, eval_opts, true, true);
  std::string grouping = "system", skip_policy = "skip";
  evaluate->add_option("--grouping", grouping, "Correlation grouping")
      ->check(CLI::IsMember({"system", "item"}));
  evaluate->add_option("--skip-policy", skip_policy, "Undefined-cell policy")
      ->check(CLI::IsMember({"skip", "zero"}));

  auto* rank = app.add_subcommand("rank", "Significance-cluster ranks (PERM-BOTH)");
  add_common(rank, rank_opts, true, true);
  double alpha = 0.05;
  int resamples = 1000;
  std::string rank_grouping = "system", rank_skip = "skip";
  rank->add_option("--alpha", alpha, "Significance level");
  rank->add_option("--resamples", resamples, "Permutation resamples")
      ->check(CLI::Range(1, 10000000));
  rank->add_option("--grouping", rank_grouping)->check(CLI::IsMember({"system", "item"}));
  rank->add_option("--skip-policy", rank_skip)->check(CLI::IsMember({"skip", "zero"}));
  // Stochastic by construction: the seed is not optional here.
  rank->get_option("--seed")->required();

  auto* select = app.add_subcommand("select", "Top-B difficult subset + metrics");
  add_common(select, select_opts, true, true);
  double budget = 0.25;
  long long budget_count = 0;
  std::string scope = "src", sweep_grid;
  bool sweep = false, domains = false;
  select->add_option("--budget", budget, "Budget as a fraction of the segment pool");
  select->add_option("--budget-count", budget_count, "Budget as an absolute segment count");
  select->add_option("--scope", scope)->check(CLI::IsMember({"src", "per-target-lang"}));
  select->add_flag("--sweep", sweep, "Also emit a budget-sweep curve");
  select->add_option("--sweep-grid", sweep_grid, "Comma-separated fractions for --sweep");
  select->add_flag("--domains", domains, "Also emit a per-domain breakdown");

  auto* analyze = app.add_subcommand("analyze", "Pitfall correlations + histograms");
  add_common(analyze, analyze_opts, true, true);
  std::string embeddings_path, aggregation = "per-language", histogram_pair;
  double histogram_width = 15.0;
  analyze->add_option("--embeddings", embeddings_path, "Embedding table (JSONL)");
  analyze->add_option("--aggregation", aggregation)
      ->check(CLI::IsMember({"per-language", "pooled"}));
  analyze->add_option("--histogram-width", histogram_width, "Histogram bin width");
  analyze->add_option("--histogram-pair", histogram_pair,
                      "Restrict histograms to one language pair (src-tgt)");

  auto* scan = app.add_subcommand("scan", "Stream a raw corpus, keep the top-K hardest lines");
  add_common(scan, scan_opts, false, false);
  std::string scan_input;
  long long top_k = 100;
  scan->add_option("--input", scan_input, "Line-delimited corpus")->required();
  scan->add_option("--top", top_k, "How many segments to keep");

  auto* chrf_cmd = app.add_subcommand("chrf", "Line-aligned chrF between two files");
  add_common(chrf_cmd, chrf_opts, false, false);
  std::string hyp_path, ref_path;
  int max_n = 6;
  double beta = 2.0;
  bool whitespace_included = false;
  chrf_cmd->add_option("--hypothesis", hyp_path, "Hypothesis file")->required();
  chrf_cmd->add_option("--reference", ref_path, "Reference file")->required();
  chrf_cmd->add_option("--max-n", max_n, "Maximum n-gram order");
  chrf_cmd->add_option("--beta", beta, "Recall weight");
  chrf_cmd->add_flag("--whitespace-included", whitespace_included,
                     "Keep whitespace as characters");

  CLI11_PARSE(app, argc, argv);

  try {
    if (score->parsed()) return cmd_score(score_opts);
    if (evaluate->parsed()) return cmd_evaluate(eval_opts, grouping, skip_policy);
    if (rank->parsed()) return cmd_rank(rank_opts, alpha, resamples, rank_grouping, rank_skip);
    if (select->parsed())
      return cmd_select(select_opts, budget, budget_count, scope, sweep, sweep_grid, domains);
    if (analyze->parsed())
      return cmd_analyze(analyze_opts, embeddings_path, aggregation, histogram_width,
                         histogram_pair);
    if (scan->parsed()) return cmd_scan(scan_opts, scan_input, top_k);
    if (chrf_cmd->parsed())
      return cmd_chrf(chrf_opts, hyp_path, ref_path, max_n, beta, whitespace_included);
  } catch (const mtdiff::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const mtdiff::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}
