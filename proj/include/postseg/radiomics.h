#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "postseg/morphology.h"
#include "postseg/volume.h"

namespace postseg {

/// Discretization and neighbourhood settings for feature extraction.
struct RadiomicsSettings {
  double bin_width = 25.0;  // first-order entropy / uniformity histogram
  int bin_count = 32;       // texture matrices
  Connectivity connectivity = Connectivity::Vertex26;  // zones, dependence, NGTDM
  std::vector<Sequence> sequences{kAllSequences.begin(), kAllSequences.end()};
};

inline constexpr std::size_t kShapeFeatureCount = 14;
inline constexpr std::size_t kFirstOrderFeatureCount = 18;
inline constexpr std::size_t kGlcmFeatureCount = 24;
inline constexpr std::size_t kGlrlmFeatureCount = 16;
inline constexpr std::size_t kGlszmFeatureCount = 16;
inline constexpr std::size_t kGldmFeatureCount = 14;
inline constexpr std::size_t kNgtdmFeatureCount = 5;
inline constexpr std::size_t kPerSequenceFeatureCount =
    kFirstOrderFeatureCount + kGlcmFeatureCount + kGlrlmFeatureCount + kGlszmFeatureCount +
    kGldmFeatureCount + kNgtdmFeatureCount;
static_assert(kPerSequenceFeatureCount == 93);
static_assert(kShapeFeatureCount + 4 * kPerSequenceFeatureCount == 386);

struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;
  bool degenerate = false;

  void append(const std::string& prefix, const FeatureVector& other);
  double get(const std::string& name) const;
};

const std::vector<std::string>& shape_feature_names();
const std::vector<std::string>& firstorder_feature_names();
const std::vector<std::string>& glcm_feature_names();
const std::vector<std::string>& glrlm_feature_names();
const std::vector<std::string>& glszm_feature_names();
const std::vector<std::string>& gldm_feature_names();
const std::vector<std::string>& ngtdm_feature_names();

/// Geometry of a binary mask in physical units (mm, mm^2, mm^3). Surface
/// area counts exposed voxel faces; diameters and axes use voxel centres.
FeatureVector shape_features(const Mask& mask, const Spacing& spacing);

FeatureVector firstorder_features(const ScalarVolume& image, const Mask& mask,
                                  double bin_width);

// ---- texture matrices -------------------------------------------------

struct LevelTag;
/// Discretized gray levels: 1..bin_count inside the ROI, 0 outside.
using LevelGrid = Grid<std::int32_t, LevelTag>;

LevelGrid discretize_bin_count(const ScalarVolume& image, const Mask& mask, int bin_count);

/// The 13 unique unit offsets of a 3D 26-neighbourhood.
const std::vector<std::array<int, 3>>& texture_directions();

/// Sparse (level, level) co-occurrence counts for one offset.
using CooccurrenceCounts = std::map<std::pair<int, int>, double>;
/// Sparse (level, size) counts: run lengths, zone sizes or dependence sizes.
using LevelSizeCounts = std::map<std::pair<int, std::size_t>, double>;

CooccurrenceCounts glcm_counts(const LevelGrid& levels, const std::array<int, 3>& offset,
                               bool symmetric = true);
LevelSizeCounts glrlm_counts(const LevelGrid& levels, const std::array<int, 3>& direction);
LevelSizeCounts glszm_counts(const LevelGrid& levels, Connectivity conn);
LevelSizeCounts gldm_counts(const LevelGrid& levels, Connectivity conn);

struct NgtdmTable {
  std::map<int, double> count;       // n_i: ROI voxels of level i with >=1 neighbour
  std::map<int, double> difference;  // s_i: sum of |i - neighbourhood mean|
};
NgtdmTable ngtdm_table(const LevelGrid& levels, Connectivity conn);

/// GLCM features for one normalised matrix.
FeatureVector glcm_matrix_features(const CooccurrenceCounts& counts);
/// GLCM features averaged over the offsets that produce at least one pair.
FeatureVector glcm_features(const LevelGrid& levels,
                            const std::vector<std::array<int, 3>>& offsets);

enum class TextureFamily { GLRLM, GLSZM, GLDM, NGTDM };

FeatureVector texture_family_features(const LevelGrid& levels, TextureFamily family,
                                      Connectivity conn = Connectivity::Vertex26);

// ---- case signature -----------------------------------------------------

/// Ordered feature names: shape/<name> then <seq>/<family>/<name>.
std::vector<std::string> feature_names(const RadiomicsSettings& settings);

/// 14 shape features of the predicted whole tumour plus 93 intensity and
/// texture features per configured sequence inside it. A whole tumour with
/// fewer than two voxels yields an all-zero vector flagged degenerate.
FeatureVector extract_case_features(const CaseBundle& bundle,
                                    const RadiomicsSettings& settings = {});

struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::string> case_ids;
  std::vector<std::vector<double>> rows;
  std::vector<bool> degenerate;
};

/// `case_id` plus one column per feature, full round-trip precision.
void save_feature_csv(const FeatureMatrix& features, const std::filesystem::path& path);
FeatureMatrix load_feature_csv(const std::filesystem::path& path);

/// Feature names and extraction settings as JSON text.
std::string feature_manifest_json(const RadiomicsSettings& settings);

}  // namespace postseg
