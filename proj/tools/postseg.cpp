#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "postseg/corpus.h"
#include "postseg/csv.h"
#include "postseg/errors.h"
#include "postseg/metrics.h"
#include "postseg/nifti.h"
#include "postseg/parallel.h"
#include "postseg/policy.h"
#include "postseg/radiomics.h"
#include "postseg/ranking.h"
#include "postseg/synth.h"

namespace fs = std::filesystem;
using namespace postseg;

namespace {

enum ExitCode { kOk = 0, kUnexpected = 1, kConfig = 2, kIo = 3, kValidation = 4 };

struct MetricFlags {
  std::string task = "gli-pre";
  std::vector<std::string> regions;
  std::vector<double> tolerances{0.5, 1.0};
  int dilation = 3;

  void add(CLI::App* sub) {
    sub->add_option("--task", task, "gli-pre, gli-post or ssa; sets the default regions")
        ->check(CLI::IsMember({"gli-pre", "gli-post", "ssa"}))
        ->capture_default_str();
    sub->add_option("--regions", regions, "Override the task's region list (ET TC WT NETC SNFH RC)");
    sub->add_option("--tolerances", tolerances, "NSD tolerances in mm")->capture_default_str();
    sub->add_option("--dilation", dilation, "Lesion dilation iterations")->capture_default_str();
  }

  MetricSettings settings() const {
    MetricSettings m;
    m.regions = task_regions(task);
    if (!regions.empty()) {
      m.regions.clear();
      for (const auto& r : regions) m.regions.push_back(parse_region(r));
    }
    if (tolerances.empty()) throw ConfigError("at least one NSD tolerance is required");
    for (double t : tolerances)
      if (!(t > 0.0)) throw ConfigError("NSD tolerances must be positive");
    m.tolerances = tolerances;
    if (dilation < 0) throw ConfigError("dilation must be non-negative");
    m.lesion.dilation_iters = dilation;
    return m;
  }
};

struct Options {
  unsigned threads = 1;

  // synth
  fs::path synth_out;
  std::size_t cases = 40;
  std::uint64_t seed = 0;
  int size = 64;
  int island_min = 3;
  int island_max = 8;
  double compact_prob = 0.3;
  double swap_trigger = 0.035;
  bool no_swap = false;
  double jitter = 0.0;
  int rc_max = 0;

  // shared
  fs::path corpus;
  fs::path pred_dir;
  fs::path out;

  // fit-policy
  fs::path features_csv;
  std::vector<std::size_t> pcc_grid{0, 10, 20, 50, 75, 100, 150, 200, 300, 500, 750, 1000};
  std::vector<double> cutoff_grid;
  std::size_t top_n = 2;
  int k_min = 2;
  int k_max = 10;
  int restarts = 10;
  int silhouette_folds = 0;
  double pca_variance = 0.90;

  // apply
  fs::path policy;

  // evaluate
  fs::path gt_dir;

  // rank
  std::vector<fs::path> metric_csvs;

  MetricFlags metrics;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// The flags a subcommand ran with, after defaults and config file. Thread
// count is left out so the echo is identical for any --threads.
std::string effective_config(const CLI::App* sub) {
  std::ostringstream os;
  os << "[" << sub->get_name() << "]\n";
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) {
      if (opt->get_positional()) {
        os << opt->get_name(true) << " = [";
        auto res = opt->reduced_results();
        for (std::size_t i = 0; i < res.size(); ++i) os << (i ? ", " : "") << '"' << res[i] << '"';
        os << "]\n";
      }
      continue;
    }
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "threads" || name == "config") continue;
    auto res = opt->reduced_results();
    if (opt->get_type_size() == 0) {
      os << name << " = " << (opt->count() > 0 ? "true" : "false") << "\n";
      continue;
    }
    std::string value;
    if (res.empty()) {
      value = opt->get_default_str();
    } else if (res.size() == 1) {
      value = res.front();
    } else {
      value = "[";
      for (std::size_t i = 0; i < res.size(); ++i) value += (i ? ", " : "") + res[i];
      value += "]";
    }
    os << name << " = " << value << "\n";
  }
  return os.str();
}

int run_synth(const Options& o, const CLI::App* sub) {
  SynthConfig cfg;
  cfg.seed = o.seed;
  cfg.dims = {o.size, o.size, o.size};
  cfg.compact_probability = o.compact_prob;
  for (auto& s : cfg.islands) s.size = {o.island_min, o.island_max};
  cfg.swap.enabled = !o.no_swap;
  cfg.swap.trigger = o.swap_trigger;
  cfg.jitter_probability = o.jitter;
  cfg.rc_count = {0, o.rc_max};
  CorpusLayout layout{o.synth_out};
  if (o.cases == 0) std::cerr << "warning: --cases 0 writes an empty corpus\n";
  write_synth_corpus(layout, cfg, o.cases, o.threads);
  write_text(o.synth_out / "effective_config.ini", effective_config(sub));
  std::cout << "wrote " << o.cases << " cases to " << o.synth_out.string() << "\n";
  return kOk;
}

FeatureMatrix extract_corpus_features(const CorpusLayout& layout, const fs::path& pred_dir,
                                      const std::vector<std::string>& ids,
                                      const RadiomicsSettings& settings, unsigned threads) {
  FeatureMatrix fm;
  fm.names = feature_names(settings);
  fm.case_ids = ids;
  fm.rows.resize(ids.size());
  std::vector<char> degenerate(ids.size(), 0);
  parallel_for(ids.size(), threads, [&](std::size_t i) {
    CaseBundle b = load_case(layout, ids[i], false, settings.sequences, pred_dir);
    FeatureVector f = extract_case_features(b, settings);
    fm.rows[i] = std::move(f.values);
    degenerate[i] = f.degenerate;
  });
  fm.degenerate.assign(degenerate.begin(), degenerate.end());
  return fm;
}

fs::path prediction_dir(const Options& o) {
  return o.pred_dir.empty() ? CorpusLayout{o.corpus}.pred_dir() : o.pred_dir;
}

int run_extract(const Options& o, const CLI::App* sub) {
  CorpusLayout layout{o.corpus};
  const fs::path pred = prediction_dir(o);
  auto ids = list_segmentations(pred);
  RadiomicsSettings rs;
  FeatureMatrix fm = extract_corpus_features(layout, pred, ids, rs, o.threads);
  ensure_dir(o.out);
  save_feature_csv(fm, o.out / "features.csv");
  write_text(o.out / "feature_manifest.json", feature_manifest_json(rs));
  write_text(o.out / "effective_config.ini", effective_config(sub));
  std::size_t degenerate = std::count(fm.degenerate.begin(), fm.degenerate.end(), true);
  std::cout << "extracted " << fm.names.size() << " features for " << ids.size() << " cases";
  if (degenerate) std::cout << " (" << degenerate << " with fewer than two tumour voxels)";
  std::cout << "\n";
  return kOk;
}

int run_fit(const Options& o, const CLI::App* sub) {
  if (o.k_min < 2 || o.k_max < o.k_min)
    throw ConfigError("k range must satisfy 2 <= k-min <= k-max");
  CorpusLayout layout{o.corpus};
  const fs::path pred = prediction_dir(o);
  auto ids = list_segmentations(pred);
  if (ids.empty()) throw postseg::ValidationError("no predictions found in " + pred.string());

  PolicyFitSettings ps;
  ps.task = o.metrics.task;
  ps.metrics = o.metrics.settings();
  ps.pca_variance = o.pca_variance;
  ps.kmeans.k_min = o.k_min;
  ps.kmeans.k_max = o.k_max;
  ps.kmeans.restarts = o.restarts;
  ps.kmeans.seed = o.seed;
  ps.kmeans.silhouette_folds = o.silhouette_folds;
  ps.fit.pcc_grid = o.pcc_grid;
  if (!o.cutoff_grid.empty()) ps.fit.cutoff_grid = o.cutoff_grid;
  ps.fit.top_n = o.top_n;
  ps.fit.threads = o.threads;

  std::vector<LabeledCase> cases(ids.size());
  parallel_for(ids.size(), o.threads, [&](std::size_t i) {
    cases[i] = {ids[i], load_segmentation(pred, ids[i]), load_segmentation(layout.gt_dir(), ids[i])};
  });

  FeatureMatrix fm;
  if (!o.features_csv.empty()) {
    FeatureMatrix all = load_feature_csv(o.features_csv);
    if (all.names != feature_names(ps.radiomics))
      throw postseg::ValidationError(o.features_csv.string() + ": feature columns do not match");
    fm.names = all.names;
    for (const auto& id : ids) {
      auto it = std::find(all.case_ids.begin(), all.case_ids.end(), id);
      if (it == all.case_ids.end())
        throw postseg::ValidationError(id + ": missing from " + o.features_csv.string());
      auto r = static_cast<std::size_t>(it - all.case_ids.begin());
      fm.case_ids.push_back(id);
      fm.rows.push_back(all.rows[r]);
      fm.degenerate.push_back(all.degenerate[r]);
    }
  } else {
    fm = extract_corpus_features(layout, pred, ids, ps.radiomics, o.threads);
  }

  PolicyFitResult result = fit_policy(cases, fm, ps);
  ensure_dir(o.out);
  save_policy(result.policy, o.out / "policy.json");
  write_text(o.out / "report.txt", result.report());
  save_confusion_csv(result.confusion, o.out / "confusion_matrix.csv");
  csv::Table assignments{{"case_id", "cluster"}, {}};
  for (std::size_t i = 0; i < ids.size(); ++i)
    assignments.rows.push_back({ids[i], std::to_string(result.case_clusters[i])});
  csv::write(assignments, o.out / "cluster_assignments.csv");
  write_text(o.out / "effective_config.ini", effective_config(sub));
  std::cout << result.report();
  return kOk;
}

int run_apply(const Options& o, const CLI::App* sub) {
  if (!fs::exists(o.policy)) throw IoError("policy file not found: " + o.policy.string());
  PostProcessPolicy policy = load_policy(o.policy);
  CorpusLayout layout{o.corpus};
  const fs::path pred = prediction_dir(o);
  auto ids = list_segmentations(pred);
  ensure_dir(o.out);
  std::vector<ApplyTrace> traces(ids.size());
  const std::vector<Sequence> needed =
      policy.cluster_count() > 1 ? policy.radiomics.sequences : std::vector<Sequence>{};
  parallel_for(ids.size(), o.threads, [&](std::size_t i) {
    CaseBundle b = load_case(layout, ids[i], false, needed, pred);
    LabelMap out = apply_policy(policy, b, &traces[i]);
    save_nifti(out, o.out / (ids[i] + "-seg.nii.gz"));
  });
  csv::Table log{{"case_id", "cluster", "degenerate", "removed_NETC", "removed_SNFH",
                  "removed_ET", "removed_RC", "rules_fired"},
                 {}};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& t = traces[i];
    std::string fired;
    for (const auto& r : t.fired)
      fired += (fired.empty() ? "" : ";") + std::to_string(r.src) + ">" + std::to_string(r.dst);
    log.rows.push_back({ids[i], std::to_string(t.cluster), t.degenerate ? "1" : "0",
                        std::to_string(t.removed_voxels[0]), std::to_string(t.removed_voxels[1]),
                        std::to_string(t.removed_voxels[2]), std::to_string(t.removed_voxels[3]),
                        fired});
  }
  csv::write(log, o.out / "apply_log.csv");
  write_text(o.out / "effective_config.ini", effective_config(sub));
  std::cout << "post-processed " << ids.size() << " cases into " << o.out.string() << "\n";
  return kOk;
}

int run_evaluate(const Options& o, const CLI::App* sub) {
  MetricSettings ms = o.metrics.settings();
  auto ids = list_segmentations(o.pred_dir);
  std::vector<CaseMetrics> rows(ids.size());
  parallel_for(ids.size(), o.threads, [&](std::size_t i) {
    rows[i] = evaluate_case(load_segmentation(o.pred_dir, ids[i]),
                            load_segmentation(o.gt_dir, ids[i]), ms, ids[i]);
  });
  MetricTable table = make_metric_table(rows, ms);
  if (o.out.has_parent_path()) ensure_dir(o.out.parent_path());
  save_metric_csv(table, o.out);
  write_text(fs::path(o.out.string() + ".config.ini"), effective_config(sub));
  auto means = table.column_means();
  std::cout << "evaluated " << ids.size() << " cases\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    std::cout << "  mean " << table.columns[c] << " = " << csv::format_double(means[c]) << "\n";
  return kOk;
}

int run_rank(const Options& o, const CLI::App* sub) {
  std::vector<Candidate> candidates;
  for (const auto& p : o.metric_csvs) candidates.push_back({p.stem().string(), load_metric_csv(p)});
  RankingResult r = rank_candidates(candidates);
  if (o.out.has_parent_path()) ensure_dir(o.out.parent_path());
  save_ranking_csv(r, o.out);
  write_text(fs::path(o.out.string() + ".config.ini"), effective_config(sub));
  for (std::size_t i = 0; i < r.candidate_ids.size(); ++i)
    std::cout << r.candidate_ids[i] << "\t" << csv::format_double(r.scores[i]) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive post-processing of brain tumour segmentations"};
  app.set_config("--config", "", "INI/TOML file with option values; flags override it");
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--threads", o.threads, "Worker threads (never changes outputs)")
      ->check(CLI::Range(1u, 256u))
      ->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic corpus");
  synth->add_option("--out", o.synth_out, "Corpus directory")->required();
  synth->add_option("--cases", o.cases, "Number of cases")->capture_default_str();
  synth->add_option("--seed", o.seed, "Corpus seed")->capture_default_str();
  synth->add_option("--size", o.size, "Cubic grid edge in voxels")->capture_default_str();
  synth->add_option("--island-min", o.island_min, "Smallest FP island")->capture_default_str();
  synth->add_option("--island-max", o.island_max, "Largest FP island")->capture_default_str();
  synth->add_option("--compact-prob", o.compact_prob, "Share of compact-core cases")
      ->capture_default_str();
  synth->add_option("--swap-trigger", o.swap_trigger, "ET/WT ratio below which ET is predicted as NETC")
      ->capture_default_str();
  synth->add_flag("--no-swap", o.no_swap, "Disable the label swap");
  synth->add_option("--jitter", o.jitter, "Boundary jitter probability")->capture_default_str();
  synth->add_option("--rc-max", o.rc_max, "Maximum resection-cavity blobs per case")
      ->capture_default_str();

  auto* extract = app.add_subcommand("extract-features", "Radiomic features of each predicted WT");
  extract->add_option("--corpus", o.corpus, "Corpus directory")->required();
  extract->add_option("--pred-dir", o.pred_dir, "Prediction directory (default <corpus>/pred)");
  extract->add_option("--out", o.out, "Output directory")->required();

  auto* fit = app.add_subcommand("fit-policy", "Fit clusters, size thresholds and relabel rules");
  fit->add_option("--corpus", o.corpus, "Corpus directory with gt/")->required();
  fit->add_option("--pred-dir", o.pred_dir, "Prediction directory (default <corpus>/pred)");
  fit->add_option("--features", o.features_csv, "Precomputed features.csv");
  fit->add_option("--out", o.out, "Output directory")->required();
  fit->add_option("--seed", o.seed, "k-means seed")->capture_default_str();
  fit->add_option("--pcc-grid", o.pcc_grid, "Candidate minimum component sizes")
      ->capture_default_str();
  fit->add_option("--cutoff-grid", o.cutoff_grid, "Candidate relabel cutoffs (default 0..0.25 step 0.005)");
  fit->add_option("--top-n", o.top_n, "Confusions considered for relabel rules")
      ->capture_default_str();
  fit->add_option("--k-min", o.k_min, "Smallest cluster count")->capture_default_str();
  fit->add_option("--k-max", o.k_max, "Largest cluster count")->capture_default_str();
  fit->add_option("--restarts", o.restarts, "k-means restarts per k")->capture_default_str();
  fit->add_option("--silhouette-folds", o.silhouette_folds,
                  "0 = silhouette on all cases, F >= 2 = mean over F training folds")
      ->capture_default_str();
  fit->add_option("--pca-variance", o.pca_variance, "Retained explained variance")
      ->capture_default_str();
  o.metrics.add(fit);

  auto* apply = app.add_subcommand("apply", "Post-process predictions with a fitted policy");
  apply->add_option("--policy", o.policy, "policy.json")->required();
  apply->add_option("--corpus", o.corpus, "Corpus directory")->required();
  apply->add_option("--pred-dir", o.pred_dir, "Prediction directory (default <corpus>/pred)");
  apply->add_option("--out", o.out, "Output directory for masks")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Lesion-wise Dice and NSD per case");
  evaluate->add_option("--pred", o.pred_dir, "Prediction directory")->required();
  evaluate->add_option("--gt", o.gt_dir, "Ground-truth directory")->required();
  evaluate->add_option("--out", o.out, "Metrics CSV")->required();
  o.metrics.add(evaluate);

  auto* rank = app.add_subcommand("rank", "Rank candidates from their metric CSVs");
  rank->add_option("metrics", o.metric_csvs, "Metric CSVs, one per candidate")->required();
  rank->add_option("--out", o.out, "Ranking CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*synth) return run_synth(o, synth);
    if (*extract) return run_extract(o, extract);
    if (*fit) return run_fit(o, fit);
    if (*apply) return run_apply(o, apply);
    if (*evaluate) return run_evaluate(o, evaluate);
    if (*rank) return run_rank(o, rank);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const postseg::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUnexpected;
  }
  return kUnexpected;
}
