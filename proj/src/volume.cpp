#include "postseg/volume.h"

#include <cmath>

namespace postseg {

bool Spacing::valid() const {
  return std::isfinite(dx) && std::isfinite(dy) && std::isfinite(dz) &&
         dx > 0.0 && dy > 0.0 && dz > 0.0;
}

void validate_labels(const LabelMap& labels) {
  for (auto v : labels.values()) {
    if (v > kMaxLabel)
      throw ValidationError("label value " + std::to_string(v) +
                            " outside {0..4}");
  }
}

void validate_finite(const ScalarVolume& volume) {
  for (auto v : volume.values()) {
    if (!std::isfinite(v)) throw ValidationError("non-finite voxel value");
  }
}

std::size_t count_nonzero(const Mask& mask) {
  std::size_t n = 0;
  for (auto v : mask.values()) n += v != 0;
  return n;
}

std::size_t count_label(const LabelMap& labels, std::uint8_t label) {
  std::size_t n = 0;
  for (auto v : labels.values()) n += v == label;
  return n;
}

Mask label_mask(const LabelMap& labels, std::uint8_t label) {
  Mask m = Mask::like(labels);
  for (std::size_t i = 0; i < labels.size(); ++i) m[i] = labels[i] == label;
  return m;
}

std::string_view sequence_suffix(Sequence seq) {
  switch (seq) {
    case Sequence::T1: return "t1n";
    case Sequence::T1CE: return "t1c";
    case Sequence::T2: return "t2w";
    case Sequence::FLAIR: return "t2f";
  }
  return "";
}

Sequence parse_sequence(std::string_view suffix) {
  for (auto s : kAllSequences)
    if (sequence_suffix(s) == suffix) return s;
  throw ConfigError("unknown sequence '" + std::string(suffix) +
                    "' (expected t1n, t1c, t2w or t2f)");
}

void CaseBundle::validate() const {
  const Geometry& ref = prediction.geometry();
  if (!ref.spacing.valid())
    throw ValidationError(case_id + ": invalid voxel spacing");
  auto check = [&](const Geometry& g, std::string_view what) {
    if (!g.congruent(ref))
      throw ValidationError(case_id + ": " + std::string(what) +
                            " grid does not match the prediction grid");
  };
  for (const auto& [seq, vol] : sequences) check(vol.geometry(), sequence_suffix(seq));
  if (ground_truth) check(ground_truth->geometry(), "ground truth");
}

}  // namespace postseg
