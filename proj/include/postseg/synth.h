#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "postseg/random.h"
#include "postseg/volume.h"

namespace postseg {

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// False-positive islands of one label.
struct IslandSpec {
  std::uint8_t label = 2;
  IntRange count{1, 2};
  IntRange size{3, 8};
};

/// If volume(src) / volume(WT) of the ground truth is below `trigger`, every
/// src voxel is predicted as dst.
struct SwapSpec {
  bool enabled = true;
  std::uint8_t src = 3;
  std::uint8_t dst = 1;
  double trigger = 0.035;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  Dims dims{64, 64, 64};
  Spacing spacing{};
  IntRange lesion_count{1, 1};
  RealRange wt_radius{15.0, 18.0};     // voxels, before per-axis scaling
  RealRange axis_scale{0.9, 1.1};
  RealRange tc_fraction{0.60, 0.70};   // TC radius / WT radius
  RealRange et_fraction{0.35, 0.45};   // ET radius / WT radius
  /// Probability of the compact-core subtype: a small ET core with no NETC
  /// ring and brighter oedema.
  double compact_probability = 0.3;
  RealRange compact_et_fraction{0.27, 0.30};
  double compact_snfh_gain = 1.35;
  IntRange rc_count{0, 0};
  RealRange rc_radius{3.0, 5.0};
  std::vector<IslandSpec> islands{{2, {1, 2}, {3, 8}}, {3, {0, 1}, {3, 8}}};
  int island_margin = 7;  // Chebyshev distance from any ground-truth voxel
  SwapSpec swap;
  double jitter_probability = 0.0;  // per WT boundary voxel
  double noise_sigma = 12.0;

  void validate() const;
};

struct IslandRecord {
  std::uint8_t label = 0;
  std::vector<std::size_t> voxels;  // sorted linear indices
};

struct CaseInventory {
  std::string case_id;
  bool compact_core = false;
  bool swap_applied = false;
  std::uint8_t swap_src = 0;
  std::uint8_t swap_dst = 0;
  double swap_ratio = -1.0;  // ground-truth volume(src) / volume(WT), -1 if WT empty
  std::vector<std::size_t> swap_voxels;
  std::vector<IslandRecord> islands;
  std::size_t jitter_voxels = 0;
  std::size_t min_true_component = 0;  // smallest per-label GT component, 0 if none

  std::size_t island_voxel_count() const;
};

struct Corruption {
  LabelMap prediction;
  CaseInventory inventory;
};

/// Format "SYN-00007".
std::string synth_case_id(std::size_t index);

/// Ground truth only (labels 1-3 shells, optional RC blobs).
LabelMap generate_ground_truth(const SynthConfig& cfg, Rng& rng, bool* compact_core = nullptr);

/// Label swap, then islands, then boundary jitter. The inventory records
/// exactly what changed.
Corruption corrupt_prediction(const LabelMap& gt, const SynthConfig& cfg, Rng& rng);

/// Full case: ground truth, four sequences and the corrupted prediction.
/// Deterministic per (cfg.seed, index).
CaseBundle generate_case(const SynthConfig& cfg, std::size_t index,
                         CaseInventory* inventory = nullptr);

std::string inventory_to_json(const std::vector<CaseInventory>& cases, const SynthConfig& cfg);
std::vector<CaseInventory> load_inventory(const std::filesystem::path& path);

}  // namespace postseg
