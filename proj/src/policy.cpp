#include "postseg/policy.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <map>
#include <optional>

#include "postseg/parallel.h"
#include "postseg/ranking.h"

namespace postseg {
namespace {

// Two independent 64-bit digests of a mask; used as a cache key without
// keeping the mask itself around.
std::pair<std::uint64_t, std::uint64_t> mask_digest(const Mask& mask) {
  const auto& bytes = mask.raw();
  std::uint64_t a = std::hash<std::string_view>{}(
      std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  std::uint64_t b = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < bytes.size(); ++i)
    if (bytes[i]) b = (b ^ i) * 0x100000001b3ULL;
  return {a, b};
}

void check_label(std::uint8_t label) {
  if (label < 1 || label > kMaxLabel) throw ValidationError("label must be in 1..4");
}

bool within_wt(std::uint8_t label) { return label >= 1 && label <= 3; }

std::vector<std::vector<std::size_t>> members_by_cluster(const std::vector<int>& clusters, int k) {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (clusters[i] < 0 || clusters[i] >= k) throw ValidationError("cluster id out of range");
    out[static_cast<std::size_t>(clusters[i])].push_back(i);
  }
  return out;
}

// Doubled rank sums are exact integers, so tie detection never depends on
// floating-point rounding of the mean.
RankingResult rank_rows(const std::vector<std::string>& ids, const std::vector<std::string>& columns,
                        const std::vector<std::string>& case_ids,
                        std::vector<std::vector<std::vector<double>>> rows) {
  std::vector<Candidate> candidates;
  for (std::size_t c = 0; c < ids.size(); ++c) {
    Candidate cand;
    cand.id = ids[c];
    cand.metrics.columns = columns;
    cand.metrics.case_ids = case_ids;
    cand.metrics.rows = std::move(rows[c]);
    candidates.push_back(std::move(cand));
  }
  return rank_candidates(candidates);
}

template <typename T>
std::vector<T> sorted_grid(std::vector<T> grid, const char* what) {
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty() || grid.front() != T{0})
    throw ConfigError(std::string(what) + " grid must contain 0 and no negative values");
  return grid;
}

std::string label_name(std::uint8_t label) {
  switch (label) {
    case 0: return "BG";
    case 1: return "NETC";
    case 2: return "SNFH";
    case 3: return "ET";
    case 4: return "RC";
  }
  return std::to_string(label);
}

}  // namespace

void ConfusionMatrix::add(const LabelMap& prediction, const LabelMap& ground_truth) {
  if (!prediction.geometry().congruent(ground_truth.geometry()))
    throw ValidationError("confusion_matrix: prediction and ground truth grids differ");
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    std::uint8_t g = ground_truth[i], p = prediction[i];
    if (g > kMaxLabel || p > kMaxLabel) throw ValidationError("confusion_matrix: label out of range");
    ++counts[g][p];
  }
}

ConfusionMatrix confusion_matrix(const std::vector<LabelMap>& predictions,
                                 const std::vector<LabelMap>& ground_truths) {
  if (predictions.size() != ground_truths.size())
    throw ValidationError("confusion_matrix: prediction and ground truth counts differ");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predictions.size(); ++i) cm.add(predictions[i], ground_truths[i]);
  return cm;
}

std::vector<LabelPair> top_confusions(const ConfusionMatrix& cm, std::size_t n) {
  if (n < 1) throw ConfigError("top_confusions: n must be at least 1");
  struct Entry {
    std::uint64_t count;
    std::uint8_t row, col;
  };
  std::vector<Entry> entries;
  for (std::uint8_t g = 1; g <= kMaxLabel; ++g)
    for (std::uint8_t p = 1; p <= kMaxLabel; ++p)
      if (g != p && cm.counts[g][p] > 0) entries.push_back({cm.counts[g][p], g, p});
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.count > b.count; });
  std::vector<LabelPair> out;
  for (std::size_t i = 0; i < std::min(n, entries.size()); ++i)
    out.push_back({entries[i].col, entries[i].row});
  return out;
}

void RelabelRule::validate() const {
  if (src < 1 || src > kMaxLabel || dst < 1 || dst > kMaxLabel)
    throw ValidationError("relabel rule labels must be in 1..4");
  if (src == dst) throw ValidationError("relabel rule must change the label");
  if (!(cutoff >= 0.0 && cutoff <= 1.0)) throw ValidationError("relabel cutoff must be in [0, 1]");
  if (cluster < 0) throw ValidationError("relabel rule cluster must be non-negative");
}

std::size_t ComponentThresholds::get(int cluster, std::uint8_t label) const {
  check_label(label);
  if (cluster < 0 || static_cast<std::size_t>(cluster) >= by_cluster.size())
    throw ValidationError("no thresholds for cluster " + std::to_string(cluster));
  return by_cluster[static_cast<std::size_t>(cluster)][label - 1];
}

ComponentThresholds ComponentThresholds::zeros(int clusters) {
  ComponentThresholds t;
  t.by_cluster.assign(static_cast<std::size_t>(std::max(clusters, 0)), {0, 0, 0, 0});
  return t;
}

std::vector<double> default_cutoff_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 50; ++i) grid.push_back(i * 0.005);
  return grid;
}

LabelMap apply_component_thresholds(const LabelMap& seg,
                                    const std::array<std::size_t, kTumorLabels>& min_sizes,
                                    Connectivity conn) {
  LabelMap out = seg;
  for (std::uint8_t label = 1; label <= kMaxLabel; ++label) {
    const std::size_t min_size = min_sizes[label - 1];
    if (min_size == 0) continue;
    ComponentLabeling cc = connected_components(label_mask(seg, label), conn);
    for (std::size_t i = 0; i < seg.size(); ++i) {
      std::int32_t id = cc.labels[i];
      if (id > 0 && cc.size_of(id) < min_size) out[i] = 0;
    }
  }
  return out;
}

double label_ratio(const LabelMap& seg, std::uint8_t label) {
  check_label(label);
  std::size_t wt = 0, n = 0;
  for (std::uint8_t v : seg.values()) {
    wt += within_wt(v);
    n += v == label;
  }
  if (wt == 0) return -1.0;
  return static_cast<double>(n) / static_cast<double>(wt);
}

bool relabel_fires(const LabelMap& seg, const RelabelRule& rule) {
  double ratio = label_ratio(seg, rule.src);
  return ratio >= 0.0 && ratio < rule.cutoff;
}

LabelMap apply_relabel_rules(const LabelMap& seg, const std::vector<RelabelRule>& rules,
                             std::vector<RelabelRule>* fired) {
  LabelMap out = seg;
  for (const RelabelRule& rule : rules) {
    rule.validate();
    if (!relabel_fires(out, rule)) continue;
    const bool wt_preserving = within_wt(rule.src) && within_wt(rule.dst);
    Mask wt_before;
    if (wt_preserving) wt_before = region_mask(out, Region::WT);
    for (auto& v : out.values())
      if (v == rule.src) v = rule.dst;
    if (wt_preserving && !(region_mask(out, Region::WT) == wt_before))
      throw std::logic_error("relabel rule changed the whole-tumour mask");
    if (fired) fired->push_back(rule);
  }
  return out;
}

std::vector<RelabelRule> PostProcessPolicy::rules_for(int cluster) const {
  std::vector<RelabelRule> out;
  for (const auto& r : rules)
    if (r.cluster == cluster) out.push_back(r);
  return out;
}

void PostProcessPolicy::validate() const {
  if (version != kPolicyVersion) throw ValidationError("unsupported policy version: " + version);
  const int k = cluster_count();
  if (k < 1) throw ValidationError("policy has no clusters");
  if (thresholds.by_cluster.size() != static_cast<std::size_t>(k))
    throw ValidationError("policy thresholds do not cover every cluster");
  for (const auto& r : rules) {
    r.validate();
    if (r.cluster >= k) throw ValidationError("relabel rule refers to an unknown cluster");
  }
  if (k > 1) {
    const auto d = static_cast<Eigen::Index>(feature_names.size());
    const auto& cl = clusterer;
    if (cl.standardizer.mean.size() != d || cl.standardizer.stddev.size() != d ||
        cl.pca.mean.size() != d || cl.pca.components.cols() != d ||
        cl.pca.components.rows() != static_cast<Eigen::Index>(cl.pca.retained) ||
        cl.clusters.centroids.rows() != k ||
        cl.clusters.centroids.cols() != static_cast<Eigen::Index>(cl.pca.retained))
      throw ValidationError("policy model dimensions are inconsistent");
  }
}

PostProcessPolicy identity_policy(const std::string& task, const RadiomicsSettings& radiomics) {
  PostProcessPolicy p;
  p.task = task;
  p.radiomics = radiomics;
  p.clusterer.clusters.k = 1;
  p.thresholds = ComponentThresholds::zeros(1);
  p.metrics.regions = task_regions(task);
  return p;
}

int assign_policy_cluster(const PostProcessPolicy& policy, const FeatureVector& features) {
  if (policy.cluster_count() <= 1) return 0;
  if (features.names != policy.feature_names)
    throw ValidationError("case features do not match the policy feature manifest");
  return policy.clusterer.assign(features.values);
}

LabelMap apply_policy_to_cluster(const PostProcessPolicy& policy, const LabelMap& prediction,
                                 int cluster, ApplyTrace* trace) {
  if (cluster < 0 || cluster >= policy.cluster_count())
    throw ValidationError("cluster id out of range for policy");
  const auto& min_sizes = policy.thresholds.by_cluster.at(static_cast<std::size_t>(cluster));
  LabelMap cleaned =
      apply_component_thresholds(prediction, min_sizes, policy.metrics.lesion.connectivity);
  std::vector<RelabelRule> fired;
  LabelMap out = apply_relabel_rules(cleaned, policy.rules_for(cluster), &fired);
  if (trace) {
    trace->cluster = cluster;
    for (std::uint8_t l = 1; l <= kMaxLabel; ++l)
      trace->removed_voxels[l - 1] = count_label(prediction, l) - count_label(cleaned, l);
    trace->fired = std::move(fired);
  }
  return out;
}

LabelMap apply_policy(const PostProcessPolicy& policy, const CaseBundle& bundle,
                      ApplyTrace* trace) {
  policy.validate();
  bundle.validate();
  validate_labels(bundle.prediction);
  int cluster = 0;
  bool degenerate = false;
  if (policy.cluster_count() > 1) {
    FeatureVector f = extract_case_features(bundle, policy.radiomics);
    degenerate = f.degenerate;
    cluster = assign_policy_cluster(policy, f);
  }
  LabelMap out = apply_policy_to_cluster(policy, bundle.prediction, cluster, trace);
  if (trace) trace->degenerate = degenerate;
  return out;
}

struct CaseEvaluator::Memo {
  std::vector<std::optional<GroundTruthLesions>> gt;
  std::vector<std::map<std::pair<std::uint64_t, std::uint64_t>, RegionScores>> cache;
  std::size_t evaluations = 0;
};

CaseEvaluator::CaseEvaluator(const std::vector<LabeledCase>& cases, MetricSettings settings)
    : cases_(cases), settings_(std::move(settings)), memos_(cases.size()) {
  for (auto& m : memos_) {
    m.gt.resize(settings_.regions.size());
    m.cache.resize(settings_.regions.size());
  }
}

CaseEvaluator::~CaseEvaluator() = default;

std::vector<double> CaseEvaluator::row(std::size_t case_index, const LabelMap& prediction) {
  Memo& memo = memos_.at(case_index);
  const LabeledCase& c = cases_[case_index];
  CaseMetrics metrics;
  metrics.case_id = c.case_id;
  for (std::size_t r = 0; r < settings_.regions.size(); ++r) {
    const Region region = settings_.regions[r];
    if (!memo.gt[r]) memo.gt[r] = prepare_ground_truth(region_mask(c.ground_truth, region),
                                                        settings_.lesion);
    Mask mask = region_mask(prediction, region);
    auto key = mask_digest(mask);
    auto it = memo.cache[r].find(key);
    if (it == memo.cache[r].end()) {
      it = memo.cache[r].emplace(key, evaluate_region(*memo.gt[r], mask, region, settings_)).first;
      ++memo.evaluations;
    }
    metrics.regions.push_back(it->second);
  }
  return metric_row(metrics, settings_);
}

std::size_t CaseEvaluator::evaluations() const {
  std::size_t n = 0;
  for (const auto& m : memos_) n += m.evaluations;
  return n;
}

ComponentThresholds fit_component_thresholds(const std::vector<LabeledCase>& cases,
                                             const std::vector<int>& clusters, int k,
                                             const FitSettings& settings,
                                             CaseEvaluator& evaluator,
                                             std::vector<ThresholdSearch>* searches) {
  if (clusters.size() != cases.size()) throw ValidationError("one cluster id per case required");
  const auto grid = sorted_grid(settings.pcc_grid, "p_cc");
  const auto members = members_by_cluster(clusters, k);
  const auto columns = evaluator.columns();
  const Connectivity conn = evaluator.settings().lesion.connectivity;
  ComponentThresholds out = ComponentThresholds::zeros(k);

  for (int c = 0; c < k; ++c) {
    const auto& idx = members[static_cast<std::size_t>(c)];
    if (idx.empty()) continue;
    std::vector<std::string> case_ids;
    for (auto i : idx) case_ids.push_back(cases[i].case_id);
    for (std::uint8_t label = 1; label <= kMaxLabel; ++label) {
      // rows[g][j]: metric row of case idx[j] under grid value g.
      std::vector<std::vector<std::vector<double>>> rows(
          grid.size(), std::vector<std::vector<double>>(idx.size()));
      parallel_for(idx.size(), settings.threads, [&](std::size_t j) {
        const LabelMap& pred = cases[idx[j]].prediction;
        ComponentLabeling cc = connected_components(label_mask(pred, label), conn);
        for (std::size_t g = 0; g < grid.size(); ++g) {
          LabelMap cand = pred;
          for (std::size_t v = 0; v < pred.size(); ++v) {
            std::int32_t id = cc.labels[v];
            if (id > 0 && cc.size_of(id) < grid[g]) cand[v] = 0;
          }
          rows[g][j] = evaluator.row(idx[j], cand);
        }
      });
      ThresholdSearch search{c, label, grid, {}, 0};
      std::size_t best = 0;
      if (grid.size() > 1) {
        std::vector<std::string> ids;
        for (auto t : grid) ids.push_back(std::to_string(t));
        RankingResult ranked = rank_rows(ids, columns, case_ids, std::move(rows));
        search.scores = ranked.scores;
        for (std::size_t g = 1; g < grid.size(); ++g)
          if (ranked.doubled_rank_sums[g] < ranked.doubled_rank_sums[best]) best = g;
      } else {
        search.scores = {1.0};
      }
      search.selected = grid[best];
      out.by_cluster[static_cast<std::size_t>(c)][label - 1] = grid[best];
      if (searches) searches->push_back(std::move(search));
    }
  }
  return out;
}

std::vector<RelabelRule> fit_relabel_rules(const std::vector<LabeledCase>& cases,
                                           const std::vector<int>& clusters, int k,
                                           const std::vector<LabelPair>& candidates,
                                           const FitSettings& settings,
                                           CaseEvaluator& evaluator,
                                           std::vector<CutoffSearch>* searches) {
  if (clusters.size() != cases.size()) throw ValidationError("one cluster id per case required");
  const auto grid = sorted_grid(settings.cutoff_grid, "cutoff");
  if (grid.back() > 1.0) throw ConfigError("cutoff grid values must be at most 1");
  const auto members = members_by_cluster(clusters, k);
  const auto columns = evaluator.columns();
  std::vector<RelabelRule> rules;

  for (int c = 0; c < k; ++c) {
    const auto& idx = members[static_cast<std::size_t>(c)];
    if (idx.empty()) continue;
    std::vector<std::string> case_ids;
    std::vector<LabelMap> current;
    for (auto i : idx) {
      case_ids.push_back(cases[i].case_id);
      current.push_back(cases[i].prediction);
    }
    for (const LabelPair& pair : candidates) {
      std::vector<std::vector<std::vector<double>>> rows(
          grid.size(), std::vector<std::vector<double>>(idx.size()));
      parallel_for(idx.size(), settings.threads, [&](std::size_t j) {
        const double ratio = label_ratio(current[j], pair.src);
        LabelMap swapped = apply_relabel_rules(current[j], {{c, pair.src, pair.dst, 1.0}});
        for (std::size_t g = 0; g < grid.size(); ++g) {
          bool fires = ratio >= 0.0 && ratio < grid[g];
          rows[g][j] = evaluator.row(idx[j], fires ? swapped : current[j]);
        }
      });
      CutoffSearch search{c, pair, grid, {}, 0.0};
      double selected = 0.0;
      if (grid.size() > 1) {
        std::vector<std::string> ids;
        for (double t : grid) ids.push_back(std::to_string(t));
        RankingResult ranked = rank_rows(ids, columns, case_ids, std::move(rows));
        search.scores = ranked.scores;
        const auto best = *std::min_element(ranked.doubled_rank_sums.begin(),
                                            ranked.doubled_rank_sums.end());
        std::vector<double> tied;
        for (std::size_t g = 0; g < grid.size(); ++g)
          if (ranked.doubled_rank_sums[g] == best) tied.push_back(grid[g]);
        selected = tied.front() == 0.0 ? 0.0 : tied[(tied.size() - 1) / 2];
      } else {
        search.scores = {1.0};
      }
      search.selected = selected;
      if (searches) searches->push_back(search);
      if (selected > 0.0) {
        RelabelRule rule{c, pair.src, pair.dst, selected};
        rules.push_back(rule);
        for (auto& m : current) m = apply_relabel_rules(m, {rule});
      }
    }
  }
  return rules;
}

PolicyFitResult fit_policy(const std::vector<LabeledCase>& cases, const FeatureMatrix& features,
                           const PolicyFitSettings& settings) {
  if (cases.empty()) throw ValidationError("fit_policy: no cases");
  if (features.rows.size() != cases.size() || features.degenerate.size() != cases.size())
    throw ValidationError("fit_policy: feature rows do not match cases");
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (features.case_ids[i] != cases[i].case_id)
      throw ValidationError("fit_policy: feature row order does not match cases at " +
                            cases[i].case_id);
    if (!cases[i].prediction.geometry().congruent(cases[i].ground_truth.geometry()))
      throw ValidationError(cases[i].case_id + ": prediction and ground truth grids differ");
    validate_labels(cases[i].prediction);
    validate_labels(cases[i].ground_truth);
  }

  PolicyFitResult result;
  PostProcessPolicy& policy = result.policy;
  policy.task = settings.task;
  policy.radiomics = settings.radiomics;
  policy.feature_names = features.names;
  policy.metrics = settings.metrics;

  std::vector<std::vector<double>> fit_rows;
  for (std::size_t i = 0; i < cases.size(); ++i)
    if (!features.degenerate[i]) fit_rows.push_back(features.rows[i]);
  if (fit_rows.size() < 3)
    throw ValidationError("fit_policy: at least three cases with a non-trivial tumour are needed");
  const Eigen::MatrixXd x = to_matrix(fit_rows);
  policy.clusterer.standardizer = fit_standardizer(x);
  const Eigen::MatrixXd z = policy.clusterer.standardizer.transform(x);
  policy.clusterer.pca = fit_pca(z, settings.pca_variance);
  policy.clusterer.clusters = fit_kmeans(policy.clusterer.pca.project(z), settings.kmeans);
  const int k = policy.clusterer.clusters.k;

  for (std::size_t i = 0; i < cases.size(); ++i) {
    result.case_ids.push_back(cases[i].case_id);
    result.case_clusters.push_back(policy.clusterer.assign(features.rows[i]));
  }
  // Training assignments cover every case, degenerate ones included.
  policy.clusterer.clusters.assignments = result.case_clusters;

  CaseEvaluator evaluator(cases, settings.metrics);
  policy.thresholds = fit_component_thresholds(cases, result.case_clusters, k, settings.fit,
                                               evaluator, &result.threshold_searches);

  std::vector<LabeledCase> cleaned(cases.size());
  parallel_for(cases.size(), settings.fit.threads, [&](std::size_t i) {
    cleaned[i].case_id = cases[i].case_id;
    cleaned[i].ground_truth = cases[i].ground_truth;
    cleaned[i].prediction = apply_component_thresholds(
        cases[i].prediction,
        policy.thresholds.by_cluster[static_cast<std::size_t>(result.case_clusters[i])],
        settings.metrics.lesion.connectivity);
  });
  for (const auto& c : cleaned) result.confusion.add(c.prediction, c.ground_truth);
  result.candidates = top_confusions(result.confusion, settings.fit.top_n);
  policy.rules = fit_relabel_rules(cleaned, result.case_clusters, k, result.candidates,
                                   settings.fit, evaluator, &result.cutoff_searches);

  std::vector<std::vector<std::vector<double>>> rows(2, std::vector<std::vector<double>>(cases.size()));
  parallel_for(cases.size(), settings.fit.threads, [&](std::size_t i) {
    rows[0][i] = evaluator.row(i, apply_policy_to_cluster(policy, cases[i].prediction,
                                                          result.case_clusters[i]));
    rows[1][i] = evaluator.row(i, cases[i].prediction);
  });
  RankingResult ranked =
      rank_rows({"fitted", "identity"}, evaluator.columns(), result.case_ids, std::move(rows));
  result.fitted_score = ranked.scores[0];
  result.identity_score = ranked.scores[1];
  policy.validate();
  return result;
}

std::string PolicyFitResult::report() const {
  std::ostringstream os;
  const int k = policy.cluster_count();
  os << "Post-processing policy fit (task " << policy.task << ")\n\n";
  os << "Clusters: k = " << k << ", silhouette = " << policy.clusterer.clusters.silhouette
     << ", PCA components retained = " << policy.clusterer.pca.retained << "\n";
  os << "Silhouette by k:";
  for (const auto& [kk, s] : policy.clusterer.clusters.silhouette_by_k) os << "  k=" << kk << ": " << s;
  os << "\n";
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int c : case_clusters) ++sizes[static_cast<std::size_t>(c)];
  os << "Cases per cluster:";
  for (int c = 0; c < k; ++c) os << "  " << c << ": " << sizes[static_cast<std::size_t>(c)];
  os << "\n\n";

  os << "Confusion matrix after small-component removal (rows = reference, columns = prediction)\n";
  os << std::setw(6) << "";
  for (std::uint8_t p = 0; p <= kMaxLabel; ++p) os << std::setw(12) << label_name(p);
  os << "\n";
  for (std::uint8_t g = 0; g <= kMaxLabel; ++g) {
    os << std::setw(6) << label_name(g);
    for (std::uint8_t p = 0; p <= kMaxLabel; ++p) os << std::setw(12) << confusion.at(g, p);
    os << "\n";
  }
  os << "Relabel candidates:";
  if (candidates.empty()) os << " none";
  for (const auto& c : candidates)
    os << "  " << label_name(c.src) << " -> " << label_name(c.dst);
  os << "\n\n";

  os << "Minimum component size (voxels)\n";
  os << std::setw(8) << "cluster";
  for (std::uint8_t l = 1; l <= kMaxLabel; ++l) os << std::setw(8) << label_name(l);
  os << "\n";
  for (int c = 0; c < k; ++c) {
    os << std::setw(8) << c;
    for (std::uint8_t l = 1; l <= kMaxLabel; ++l) os << std::setw(8) << policy.thresholds.get(c, l);
    os << "\n";
  }
  os << "\nRelabel cutoffs (rule fires when volume(src) / volume(WT) < cutoff)\n";
  os << std::setw(8) << "cluster" << std::setw(8) << "src" << std::setw(8) << "dst"
     << std::setw(10) << "cutoff" << "\n";
  for (const auto& s : cutoff_searches)
    os << std::setw(8) << s.cluster << std::setw(8) << label_name(s.pair.src) << std::setw(8)
       << label_name(s.pair.dst) << std::setw(10) << s.selected
       << (s.selected > 0.0 ? "" : "  (no rule)") << "\n";
  os << "\nRanking score on the fitting corpus (lower is better): fitted " << fitted_score
     << ", identity " << identity_score << "\n";
  return os.str();
}

}  // namespace postseg
