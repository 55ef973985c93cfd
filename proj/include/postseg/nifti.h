#pragma once

#include <filesystem>
#include <variant>

#include "postseg/volume.h"

namespace postseg {

enum class VolumeKind { Label, Scalar };

/// Reads a single-frame NIfTI-1 file (.nii or .nii.gz). Spacing comes from
/// pixdim[1..3]; orientation fields are kept for a later save. Label loads
/// accept any numeric datatype but every voxel must be an integer in 0..4.
std::variant<ScalarVolume, LabelMap> load_nifti(const std::filesystem::path& path,
                                                 VolumeKind kind);
ScalarVolume load_scalar_nifti(const std::filesystem::path& path);
LabelMap load_label_nifti(const std::filesystem::path& path);

/// Scalars are written as float32, labels as uint8. A ".gz" extension
/// selects gzip compression; output bytes depend only on the volume.
void save_nifti(const ScalarVolume& volume, const std::filesystem::path& path);
void save_nifti(const LabelMap& labels, const std::filesystem::path& path);

}  // namespace postseg
