#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "postseg/morphology.h"
#include "postseg/volume.h"

namespace postseg {

/// Evaluation regions. Raw labels: NETC=1, SNFH=2, ET=3, RC=4.
/// Composites: TC = ET + NETC, WT = ET + SNFH + NETC.
enum class Region { ET, TC, WT, NETC, SNFH, RC };

struct RegionSpec {
  Region region;
  std::string_view name;
  std::vector<std::uint8_t> labels;

  bool contains(std::uint8_t label) const;
};

const RegionSpec& region_spec(Region region);
Region parse_region(std::string_view name);
std::string_view region_name(Region region);

Mask region_mask(const LabelMap& seg, Region region);

struct LesionSettings {
  int dilation_iters = 3;
  Connectivity connectivity = Connectivity::Vertex26;
};

/// One ground-truth lesion: GT components merged through their dilations,
/// together with the prediction components assigned to it.
struct LesionRecord {
  std::int32_t lesion_id = 0;
  std::vector<std::int32_t> gt_components;
  std::vector<std::int32_t> pred_components;
  std::size_t gt_voxels = 0;
  std::size_t pred_voxels = 0;
  std::size_t intersection = 0;
  double dice = 0.0;
  // Sorted distances (mm) from each surface voxel to the other surface.
  std::vector<double> gt_surface_distances;
  std::vector<double> pred_surface_distances;

  double nsd(double tolerance_mm) const;
};

struct LesionMatchResult {
  std::vector<LesionRecord> lesions;
  std::vector<std::int32_t> fp_components;
  std::vector<std::size_t> fp_sizes;

  std::size_t num_gt_lesions() const { return lesions.size(); }
  std::size_t num_fp() const { return fp_components.size(); }
};

/// GT-side work of lesion matching, reusable across many predictions.
struct GroundTruthLesions {
  Mask gt;
  ComponentLabeling components;
  ComponentGrid lesion_ids;  // dilated lesion territory, 0 outside
  std::vector<std::vector<std::int32_t>> lesion_components;

  std::size_t lesion_count() const { return lesion_components.size(); }
};

GroundTruthLesions prepare_ground_truth(const Mask& gt, const LesionSettings& settings = {});

LesionMatchResult match_lesions(const GroundTruthLesions& gt, const Mask& pred,
                                const LesionSettings& settings = {});
LesionMatchResult match_lesions(const Mask& gt, const Mask& pred,
                                const LesionSettings& settings = {});

/// Mean per-lesion Dice over GT lesions and FP components (FPs score 0).
/// Both masks empty gives 1.0.
double lesionwise_dice(const LesionMatchResult& match);
/// Same aggregation as lesionwise_dice with per-lesion normalized surface
/// distance at `tolerance_mm`.
double lesionwise_nsd(const LesionMatchResult& match, double tolerance_mm);

struct MetricSettings {
  std::vector<Region> regions{Region::ET, Region::TC, Region::WT};
  std::vector<double> tolerances{0.5, 1.0};
  LesionSettings lesion;
};

/// Default region set per task: gli-pre, gli-post (adds RC), ssa.
std::vector<Region> task_regions(std::string_view task);

struct RegionScores {
  Region region;
  double dice = 0.0;
  std::vector<double> nsd;  // per configured tolerance
};

struct CaseMetrics {
  std::string case_id;
  std::vector<RegionScores> regions;
};

RegionScores evaluate_region(const GroundTruthLesions& gt, const Mask& pred, Region region,
                             const MetricSettings& settings);

CaseMetrics evaluate_case(const LabelMap& pred, const LabelMap& gt,
                          const MetricSettings& settings, std::string case_id = {});

/// Tolerance label used in column names: 0.5 -> "0.5", 1 -> "1.0".
std::string format_tolerance(double tolerance_mm);

/// Column order: LW_Dice_<region> for every region, then
/// LW_NSD@<tol>_<region> for every tolerance and region.
std::vector<std::string> metric_columns(const MetricSettings& settings);
std::vector<double> metric_row(const CaseMetrics& metrics, const MetricSettings& settings);

/// Rows of per-case metric values sharing one column list.
struct MetricTable {
  std::vector<std::string> columns;
  std::vector<std::string> case_ids;
  std::vector<std::vector<double>> rows;

  std::vector<double> column_means() const;
};

MetricTable make_metric_table(const std::vector<CaseMetrics>& cases,
                              const MetricSettings& settings);
void save_metric_csv(const MetricTable& table, const std::filesystem::path& path);
MetricTable load_metric_csv(const std::filesystem::path& path);

}  // namespace postseg
