#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "postseg/clustering.h"
#include "postseg/metrics.h"
#include "postseg/radiomics.h"
#include "postseg/volume.h"

namespace postseg {

inline constexpr const char* kPolicyVersion = "postseg-policy/1";
inline constexpr std::size_t kTumorLabels = 4;

/// Voxel counts: rows are ground-truth labels 0..4, columns predicted labels.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, 5>, 5> counts{};

  std::uint64_t at(std::uint8_t gt, std::uint8_t pred) const { return counts[gt][pred]; }
  void add(const LabelMap& prediction, const LabelMap& ground_truth);
};

ConfusionMatrix confusion_matrix(const std::vector<LabelMap>& predictions,
                                 const std::vector<LabelMap>& ground_truths);

/// Relabel candidate: predicted `src` voxels should have been `dst`.
struct LabelPair {
  std::uint8_t src = 0;
  std::uint8_t dst = 0;

  bool operator==(const LabelPair&) const = default;
};

/// The n largest nonzero off-diagonal entries among labels 1..4; entry
/// (g, p) yields src = p, dst = g. Equal counts keep (row, col) order.
std::vector<LabelPair> top_confusions(const ConfusionMatrix& cm, std::size_t n);

struct RelabelRule {
  int cluster = 0;
  std::uint8_t src = 0;
  std::uint8_t dst = 0;
  double cutoff = 0.0;

  void validate() const;
  bool operator==(const RelabelRule&) const = default;
};

/// Minimum component size per cluster and raw label (index label - 1).
struct ComponentThresholds {
  std::vector<std::array<std::size_t, kTumorLabels>> by_cluster;

  std::size_t get(int cluster, std::uint8_t label) const;
  static ComponentThresholds zeros(int clusters);
};

/// Removes components of each label smaller than that label's threshold;
/// removed voxels become background.
LabelMap apply_component_thresholds(const LabelMap& seg,
                                    const std::array<std::size_t, kTumorLabels>& min_sizes,
                                    Connectivity conn = Connectivity::Vertex26);

/// volume(label) / volume(WT) on the mask as given; -1 when WT is empty.
double label_ratio(const LabelMap& seg, std::uint8_t label);

bool relabel_fires(const LabelMap& seg, const RelabelRule& rule);

/// Applies the rules in order, each on the mask as left by the previous one.
/// Rules that only move voxels within WT are checked to leave WT unchanged.
LabelMap apply_relabel_rules(const LabelMap& seg, const std::vector<RelabelRule>& rules,
                             std::vector<RelabelRule>* fired = nullptr);

struct PostProcessPolicy {
  std::string version = kPolicyVersion;
  std::string task = "gli-pre";
  std::vector<std::string> feature_names;
  RadiomicsSettings radiomics;
  CaseClusterer clusterer;
  ComponentThresholds thresholds;
  std::vector<RelabelRule> rules;  // ordered
  MetricSettings metrics;

  int cluster_count() const { return clusterer.clusters.k; }
  std::vector<RelabelRule> rules_for(int cluster) const;
  void validate() const;
};

/// The policy that changes nothing: one cluster, zero thresholds, no rules.
PostProcessPolicy identity_policy(const std::string& task, const RadiomicsSettings& radiomics);

struct ApplyTrace {
  int cluster = 0;
  bool degenerate = false;
  std::array<std::size_t, kTumorLabels> removed_voxels{};
  std::vector<RelabelRule> fired;
};

int assign_policy_cluster(const PostProcessPolicy& policy, const FeatureVector& features);

/// Post-processes a prediction already assigned to `cluster`.
LabelMap apply_policy_to_cluster(const PostProcessPolicy& policy, const LabelMap& prediction,
                                 int cluster, ApplyTrace* trace = nullptr);

/// Feature extraction, cluster assignment, threshold removal, relabelling.
LabelMap apply_policy(const PostProcessPolicy& policy, const CaseBundle& bundle,
                      ApplyTrace* trace = nullptr);

/// Prediction and reference segmentation of one fitting case.
struct LabeledCase {
  std::string case_id;
  LabelMap prediction;
  LabelMap ground_truth;
};

/// Memoized per-case metric rows. Region scores are cached by region mask,
/// so candidates that leave a region unchanged are never re-scored.
class CaseEvaluator {
 public:
  CaseEvaluator(const std::vector<LabeledCase>& cases, MetricSettings settings);
  ~CaseEvaluator();
  CaseEvaluator(const CaseEvaluator&) = delete;
  CaseEvaluator& operator=(const CaseEvaluator&) = delete;

  const MetricSettings& settings() const { return settings_; }
  std::vector<std::string> columns() const { return metric_columns(settings_); }
  /// Safe to call concurrently for distinct case indices.
  std::vector<double> row(std::size_t case_index, const LabelMap& prediction);
  std::size_t evaluations() const;

 private:
  struct Memo;
  const std::vector<LabeledCase>& cases_;
  MetricSettings settings_;
  std::vector<Memo> memos_;
};

struct ThresholdSearch {
  int cluster = 0;
  std::uint8_t label = 0;
  std::vector<std::size_t> grid;
  std::vector<double> scores;
  std::size_t selected = 0;
};

struct CutoffSearch {
  int cluster = 0;
  LabelPair pair;
  std::vector<double> grid;
  std::vector<double> scores;
  double selected = 0.0;
};

/// 0, 0.005, ..., 0.25.
std::vector<double> default_cutoff_grid();

struct FitSettings {
  std::vector<std::size_t> pcc_grid{0, 10, 20, 50, 75, 100, 150, 200, 300, 500, 750, 1000};
  std::vector<double> cutoff_grid = default_cutoff_grid();
  std::size_t top_n = 2;
  unsigned threads = 1;
};

/// Per cluster and label, the grid threshold whose candidate predictions rank
/// best over the cluster's cases; ties go to the smaller threshold.
ComponentThresholds fit_component_thresholds(const std::vector<LabeledCase>& cases,
                                             const std::vector<int>& clusters, int k,
                                             const FitSettings& settings,
                                             CaseEvaluator& evaluator,
                                             std::vector<ThresholdSearch>* searches = nullptr);

/// Per cluster and candidate pair (fitted in candidate order, each on the
/// output of the previous), the best-ranked cutoff. Among tied cutoffs 0 wins
/// when present, otherwise the lower median of the tied values. Only
/// cutoffs above 0 become rules.
std::vector<RelabelRule> fit_relabel_rules(const std::vector<LabeledCase>& cases,
                                           const std::vector<int>& clusters, int k,
                                           const std::vector<LabelPair>& candidates,
                                           const FitSettings& settings,
                                           CaseEvaluator& evaluator,
                                           std::vector<CutoffSearch>* searches = nullptr);

struct PolicyFitSettings {
  std::string task = "gli-pre";
  RadiomicsSettings radiomics;
  double pca_variance = 0.90;
  KMeansSettings kmeans;
  FitSettings fit;
  MetricSettings metrics;
};

struct PolicyFitResult {
  PostProcessPolicy policy;
  std::vector<std::string> case_ids;
  std::vector<int> case_clusters;
  ConfusionMatrix confusion;  // after small-component removal
  std::vector<LabelPair> candidates;
  std::vector<ThresholdSearch> threshold_searches;
  std::vector<CutoffSearch> cutoff_searches;
  double fitted_score = 0.0;    // fitted vs identity, ranked together
  double identity_score = 0.0;

  std::string report() const;
};

/// Fits the full policy. `features` rows must follow `cases` order.
PolicyFitResult fit_policy(const std::vector<LabeledCase>& cases, const FeatureMatrix& features,
                           const PolicyFitSettings& settings);

void save_policy(const PostProcessPolicy& policy, const std::filesystem::path& path);
PostProcessPolicy load_policy(const std::filesystem::path& path);
std::string policy_to_json(const PostProcessPolicy& policy);
PostProcessPolicy policy_from_json(const std::string& text);

void save_confusion_csv(const ConfusionMatrix& cm, const std::filesystem::path& path);

}  // namespace postseg
