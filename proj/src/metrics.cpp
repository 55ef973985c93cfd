#include "postseg/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "postseg/csv.h"

namespace postseg {
namespace {

const std::vector<RegionSpec>& all_regions() {
  static const std::vector<RegionSpec> specs{
      {Region::ET, "ET", {3}},         {Region::TC, "TC", {1, 3}},
      {Region::WT, "WT", {1, 2, 3}},   {Region::NETC, "NETC", {1}},
      {Region::SNFH, "SNFH", {2}},     {Region::RC, "RC", {4}},
  };
  return specs;
}

double mean_over_lesions(const LesionMatchResult& m, auto&& per_lesion) {
  std::size_t denom = m.num_gt_lesions() + m.num_fp();
  if (denom == 0) return 1.0;
  double sum = 0.0;
  for (const auto& l : m.lesions) sum += per_lesion(l);
  return sum / static_cast<double>(denom);
}

// Distances from every surface voxel of `from` to the surface of `to`,
// evaluated in the crop `box` (padded so the crop edge is either grid edge
// or background for both masks).
void surface_distances(const Mask& gt_crop, const Mask& pred_crop, LesionRecord& rec) {
  Mask gt_surface = boundary_voxels(gt_crop, Connectivity::Face6);
  Mask pred_surface = boundary_voxels(pred_crop, Connectivity::Face6);
  const Spacing& sp = gt_crop.spacing();
  auto collect = [&](const Mask& from, const Mask& to, std::vector<double>& out) {
    out.clear();
    if (count_nonzero(to) == 0) {
      for (auto v : from.values())
        if (v) out.push_back(std::numeric_limits<double>::infinity());
      return;
    }
    DistanceMap dist = euclidean_distance_transform(to, sp);
    for (std::size_t i = 0; i < from.size(); ++i)
      if (from[i]) out.push_back(dist[i]);
    std::sort(out.begin(), out.end());
  };
  collect(gt_surface, pred_surface, rec.gt_surface_distances);
  collect(pred_surface, gt_surface, rec.pred_surface_distances);
}

}  // namespace

bool RegionSpec::contains(std::uint8_t label) const {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

const RegionSpec& region_spec(Region region) {
  return all_regions()[static_cast<std::size_t>(region)];
}

std::string_view region_name(Region region) { return region_spec(region).name; }

Region parse_region(std::string_view name) {
  for (const auto& r : all_regions())
    if (r.name == name) return r.region;
  throw ConfigError("unknown region '" + std::string(name) + "'");
}

std::vector<Region> task_regions(std::string_view task) {
  if (task == "gli-pre")
    return {Region::ET, Region::TC, Region::WT, Region::NETC, Region::SNFH};
  if (task == "gli-post")
    return {Region::ET, Region::TC, Region::WT, Region::NETC, Region::SNFH, Region::RC};
  if (task == "ssa") return {Region::ET, Region::TC, Region::WT};
  throw ConfigError("unknown task '" + std::string(task) + "' (gli-pre, gli-post, ssa)");
}

Mask region_mask(const LabelMap& seg, Region region) {
  const RegionSpec& spec = region_spec(region);
  bool member[256] = {};
  for (auto l : spec.labels) member[l] = true;
  Mask m = Mask::like(seg, 0);
  for (std::size_t i = 0; i < seg.size(); ++i) m[i] = member[seg[i]];
  return m;
}

double LesionRecord::nsd(double tolerance_mm) const {
  std::size_t total = gt_surface_distances.size() + pred_surface_distances.size();
  if (total == 0) return 0.0;
  auto within = [&](const std::vector<double>& d) {
    return static_cast<std::size_t>(
        std::upper_bound(d.begin(), d.end(), tolerance_mm) - d.begin());
  };
  return static_cast<double>(within(gt_surface_distances) + within(pred_surface_distances)) /
         static_cast<double>(total);
}

GroundTruthLesions prepare_ground_truth(const Mask& gt, const LesionSettings& settings) {
  GroundTruthLesions out;
  out.gt = gt;
  out.components = connected_components(gt, settings.connectivity);
  Mask grown = dilate(gt, settings.dilation_iters, settings.connectivity);
  ComponentLabeling territories = connected_components(grown, settings.connectivity);
  out.lesion_ids = std::move(territories.labels);

  // Territories with no GT voxel cannot occur (each grew from GT), but the
  // lesion list only contains territories that own GT components.
  std::vector<std::int32_t> comp_lesion(out.components.count + 1, 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    std::int32_t c = out.components.labels[i];
    if (c != 0) comp_lesion[static_cast<std::size_t>(c)] = out.lesion_ids[i];
  }
  out.lesion_components.assign(territories.count, {});
  for (std::size_t c = 1; c <= out.components.count; ++c)
    out.lesion_components[static_cast<std::size_t>(comp_lesion[c] - 1)].push_back(
        static_cast<std::int32_t>(c));
  return out;
}

LesionMatchResult match_lesions(const GroundTruthLesions& gt, const Mask& pred,
                                const LesionSettings& settings) {
  if (!gt.gt.geometry().congruent(pred.geometry()))
    throw ValidationError("match_lesions: prediction and ground truth grids differ");
  const Dims& d = pred.dims();
  ComponentLabeling pcc = connected_components(pred, settings.connectivity);

  // Overlap of each prediction component with each dilated lesion territory.
  std::vector<std::map<std::int32_t, std::size_t>> overlap(pcc.count + 1);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    std::int32_t c = pcc.labels[i];
    std::int32_t l = gt.lesion_ids[i];
    if (c != 0 && l != 0) ++overlap[static_cast<std::size_t>(c)][l];
  }
  const std::size_t nl = gt.lesion_count();
  std::vector<std::int32_t> assigned(pcc.count + 1, 0);
  LesionMatchResult out;
  out.lesions.resize(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    out.lesions[l].lesion_id = static_cast<std::int32_t>(l + 1);
    out.lesions[l].gt_components = gt.lesion_components[l];
  }
  for (std::size_t c = 1; c <= pcc.count; ++c) {
    std::int32_t best = 0;
    std::size_t best_count = 0;
    for (const auto& [l, n] : overlap[c]) {
      if (n > best_count) {
        best = l;
        best_count = n;
      }
    }
    assigned[c] = best;
    if (best == 0) {
      out.fp_components.push_back(static_cast<std::int32_t>(c));
      out.fp_sizes.push_back(pcc.sizes[c - 1]);
    } else {
      out.lesions[static_cast<std::size_t>(best - 1)].pred_components.push_back(
          static_cast<std::int32_t>(c));
    }
  }

  // Voxel counts and bounding boxes per lesion.
  std::vector<Box> boxes(nl);
  std::size_t i = 0;
  for (std::int64_t z = 0; z < d.nz; ++z)
    for (std::int64_t y = 0; y < d.ny; ++y)
      for (std::int64_t x = 0; x < d.nx; ++x, ++i) {
        std::int32_t lg = gt.gt[i] ? gt.lesion_ids[i] : 0;
        std::int32_t pc = pcc.labels[i];
        std::int32_t lp = pc ? assigned[static_cast<std::size_t>(pc)] : 0;
        if (lg) {
          auto& rec = out.lesions[static_cast<std::size_t>(lg - 1)];
          ++rec.gt_voxels;
          boxes[static_cast<std::size_t>(lg - 1)].include(x, y, z);
          if (lp == lg) ++rec.intersection;
        }
        if (lp) {
          ++out.lesions[static_cast<std::size_t>(lp - 1)].pred_voxels;
          boxes[static_cast<std::size_t>(lp - 1)].include(x, y, z);
        }
      }

  for (std::size_t l = 0; l < nl; ++l) {
    LesionRecord& rec = out.lesions[l];
    rec.dice = rec.pred_voxels == 0
                   ? 0.0
                   : 2.0 * static_cast<double>(rec.intersection) /
                         static_cast<double>(rec.gt_voxels + rec.pred_voxels);
    Box box = boxes[l].padded(1, d);
    Dims ext = box.extent();
    Mask gt_crop(ext, pred.spacing(), 0);
    Mask pred_crop(ext, pred.spacing(), 0);
    const auto lid = static_cast<std::int32_t>(l + 1);
    for (std::int64_t z = 0; z < ext.nz; ++z)
      for (std::int64_t y = 0; y < ext.ny; ++y)
        for (std::int64_t x = 0; x < ext.nx; ++x) {
          std::size_t g = d.index(x + box.lo[0], y + box.lo[1], z + box.lo[2]);
          if (gt.gt[g] && gt.lesion_ids[g] == lid) gt_crop.at(x, y, z) = 1;
          std::int32_t pc = pcc.labels[g];
          if (pc && assigned[static_cast<std::size_t>(pc)] == lid) pred_crop.at(x, y, z) = 1;
        }
    surface_distances(gt_crop, pred_crop, rec);
  }
  return out;
}

LesionMatchResult match_lesions(const Mask& gt, const Mask& pred,
                                const LesionSettings& settings) {
  return match_lesions(prepare_ground_truth(gt, settings), pred, settings);
}

double lesionwise_dice(const LesionMatchResult& match) {
  return mean_over_lesions(match, [](const LesionRecord& l) { return l.dice; });
}

double lesionwise_nsd(const LesionMatchResult& match, double tolerance_mm) {
  if (!(tolerance_mm > 0.0)) throw ConfigError("NSD tolerance must be positive");
  return mean_over_lesions(match,
                           [&](const LesionRecord& l) { return l.nsd(tolerance_mm); });
}

RegionScores evaluate_region(const GroundTruthLesions& gt, const Mask& pred, Region region,
                             const MetricSettings& settings) {
  LesionMatchResult m = match_lesions(gt, pred, settings.lesion);
  RegionScores s{region, lesionwise_dice(m), {}};
  for (double tol : settings.tolerances) s.nsd.push_back(lesionwise_nsd(m, tol));
  return s;
}

CaseMetrics evaluate_case(const LabelMap& pred, const LabelMap& gt,
                          const MetricSettings& settings, std::string case_id) {
  if (!pred.geometry().congruent(gt.geometry()))
    throw ValidationError("evaluate_case " + case_id + ": grid mismatch");
  CaseMetrics out{std::move(case_id), {}};
  for (Region r : settings.regions) {
    GroundTruthLesions g = prepare_ground_truth(region_mask(gt, r), settings.lesion);
    out.regions.push_back(evaluate_region(g, region_mask(pred, r), r, settings));
  }
  return out;
}

std::string format_tolerance(double tolerance_mm) {
  std::string s = csv::format_double(tolerance_mm);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::vector<std::string> metric_columns(const MetricSettings& settings) {
  std::vector<std::string> cols;
  for (Region r : settings.regions) cols.push_back("LW_Dice_" + std::string(region_name(r)));
  for (double tol : settings.tolerances)
    for (Region r : settings.regions)
      cols.push_back("LW_NSD@" + format_tolerance(tol) + "_" + std::string(region_name(r)));
  return cols;
}

std::vector<double> metric_row(const CaseMetrics& metrics, const MetricSettings& settings) {
  if (metrics.regions.size() != settings.regions.size())
    throw ValidationError("metric_row: region count mismatch");
  std::vector<double> row;
  for (const auto& r : metrics.regions) row.push_back(r.dice);
  for (std::size_t t = 0; t < settings.tolerances.size(); ++t)
    for (const auto& r : metrics.regions) row.push_back(r.nsd.at(t));
  return row;
}

std::vector<double> MetricTable::column_means() const {
  std::vector<double> means(columns.size(), 0.0);
  if (rows.empty()) return means;
  for (const auto& r : rows)
    for (std::size_t c = 0; c < columns.size(); ++c) means[c] += r[c];
  for (auto& m : means) m /= static_cast<double>(rows.size());
  return means;
}

MetricTable make_metric_table(const std::vector<CaseMetrics>& cases,
                              const MetricSettings& settings) {
  MetricTable t;
  t.columns = metric_columns(settings);
  for (const auto& c : cases) {
    t.case_ids.push_back(c.case_id);
    t.rows.push_back(metric_row(c, settings));
  }
  return t;
}

void save_metric_csv(const MetricTable& table, const std::filesystem::path& path) {
  csv::Table out;
  out.header.push_back("case_id");
  out.header.insert(out.header.end(), table.columns.begin(), table.columns.end());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    std::vector<std::string> row{table.case_ids[i]};
    for (double v : table.rows[i]) row.push_back(csv::format_double(v));
    out.rows.push_back(std::move(row));
  }
  csv::write(out, path);
}

MetricTable load_metric_csv(const std::filesystem::path& path) {
  csv::Table in = csv::read(path);
  if (in.header.empty() || in.header[0] != "case_id")
    throw ValidationError(path.string() + ": first column must be case_id");
  MetricTable t;
  t.columns.assign(in.header.begin() + 1, in.header.end());
  for (const auto& r : in.rows) {
    t.case_ids.push_back(r[0]);
    std::vector<double> vals;
    for (std::size_t c = 1; c < r.size(); ++c) {
      double v = csv::parse_double(r[c]);
      if (!std::isfinite(v)) throw ValidationError(path.string() + ": non-finite metric value");
      vals.push_back(v);
    }
    t.rows.push_back(std::move(vals));
  }
  return t;
}

}  // namespace postseg
