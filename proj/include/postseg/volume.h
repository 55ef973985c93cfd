#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "postseg/errors.h"

namespace postseg {

/// Voxel counts along x, y, z. Storage is row-major with x fastest.
struct Dims {
  std::int64_t nx = 0;
  std::int64_t ny = 0;
  std::int64_t nz = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  std::size_t index(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return static_cast<std::size_t>(x + nx * (y + ny * z));
  }
  bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < nx && y < ny && z < nz;
  }
  std::array<std::int64_t, 3> coords(std::size_t i) const {
    auto idx = static_cast<std::int64_t>(i);
    return {idx % nx, (idx / nx) % ny, idx / (nx * ny)};
  }
  bool operator==(const Dims&) const = default;
};

/// Voxel edge lengths in millimetres.
struct Spacing {
  double dx = 1.0;
  double dy = 1.0;
  double dz = 1.0;

  bool valid() const;
  double voxel_volume() const { return dx * dy * dz; }
  bool operator==(const Spacing&) const = default;
};

/// NIfTI orientation fields. Carried through load/save untouched; no
/// computation uses them.
struct Orientation {
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 1;
  float qfac = 1.0f;
  std::array<float, 3> quatern{0.0f, 0.0f, 0.0f};
  std::array<float, 3> qoffset{0.0f, 0.0f, 0.0f};
  std::array<std::array<float, 4>, 3> srow{};
  bool has_srow = false;
  bool operator==(const Orientation&) const = default;
};

struct Geometry {
  Dims dims;
  Spacing spacing;
  Orientation orientation;

  /// Same voxel grid (dims and spacing); orientation is not compared.
  bool congruent(const Geometry& other) const {
    return dims == other.dims && spacing == other.spacing;
  }
};

template <typename T, typename Tag>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  explicit Grid(Dims dims, Spacing spacing = {}, T fill = T{})
      : geometry_{dims, spacing, {}}, data_(dims.size(), fill) {}
  Grid(Geometry geometry, std::vector<T> data)
      : geometry_(geometry), data_(std::move(data)) {
    if (data_.size() != geometry_.dims.size())
      throw ValidationError("grid data length does not match dims");
  }
  /// Empty grid sharing `other`'s geometry.
  template <typename U, typename OtherTag>
  static Grid like(const Grid<U, OtherTag>& other, T fill = T{}) {
    Grid g;
    g.geometry_ = other.geometry();
    g.data_.assign(other.size(), fill);
    return g;
  }

  const Geometry& geometry() const { return geometry_; }
  Geometry& geometry() { return geometry_; }
  const Dims& dims() const { return geometry_.dims; }
  const Spacing& spacing() const { return geometry_.spacing; }
  std::size_t size() const { return data_.size(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(std::int64_t x, std::int64_t y, std::int64_t z) {
    return data_[geometry_.dims.index(x, y, z)];
  }
  const T& at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return data_[geometry_.dims.index(x, y, z)];
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& raw() { return data_; }
  const std::vector<T>& raw() const { return data_; }

  bool operator==(const Grid& other) const {
    return geometry_.congruent(other.geometry_) && data_ == other.data_;
  }

 private:
  Geometry geometry_;
  std::vector<T> data_;
};

struct ScalarTag;
struct LabelTag;
struct MaskTag;

using ScalarVolume = Grid<float, ScalarTag>;
/// Segmentation labels: 0 background, 1 NETC, 2 SNFH, 3 ET, 4 RC.
using LabelMap = Grid<std::uint8_t, LabelTag>;
/// Binary mask, 0 or 1 per voxel.
using Mask = Grid<std::uint8_t, MaskTag>;

inline constexpr std::uint8_t kMaxLabel = 4;

/// Throws ValidationError if any voxel is outside {0..4}.
void validate_labels(const LabelMap& labels);
/// Throws ValidationError if any voxel is NaN or infinite.
void validate_finite(const ScalarVolume& volume);

std::size_t count_nonzero(const Mask& mask);
std::size_t count_label(const LabelMap& labels, std::uint8_t label);
Mask label_mask(const LabelMap& labels, std::uint8_t label);

/// MRI sequences in canonical order, with their corpus file suffixes.
enum class Sequence { T1 = 0, T1CE = 1, T2 = 2, FLAIR = 3 };
inline constexpr std::array<Sequence, 4> kAllSequences{
    Sequence::T1, Sequence::T1CE, Sequence::T2, Sequence::FLAIR};
std::string_view sequence_suffix(Sequence seq);  // t1n, t1c, t2w, t2f
Sequence parse_sequence(std::string_view suffix);

struct CaseBundle {
  std::string case_id;
  std::map<Sequence, ScalarVolume> sequences;
  LabelMap prediction;
  std::optional<LabelMap> ground_truth;

  /// Throws ValidationError unless every present grid shares dims and spacing.
  void validate() const;
};

}  // namespace postseg
