#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "postseg/radiomics.h"

namespace postseg {

const std::vector<std::string>& shape_feature_names() {
  static const std::vector<std::string> names{
      "Elongation",          "Flatness",
      "LeastAxisLength",     "MajorAxisLength",
      "MinorAxisLength",     "Maximum2DDiameterColumn",
      "Maximum2DDiameterRow", "Maximum2DDiameterSlice",
      "Maximum3DDiameter",   "Sphericity",
      "SurfaceArea",         "SurfaceVolumeRatio",
      "VoxelCount",          "VoxelVolume",
  };
  return names;
}

FeatureVector shape_features(const Mask& mask, const Spacing& sp) {
  FeatureVector out;
  out.names = shape_feature_names();
  out.values.assign(out.names.size(), 0.0);
  const Dims& d = mask.dims();

  std::size_t count = 0;
  double area = 0.0;
  const double face_area[3] = {sp.dy * sp.dz, sp.dx * sp.dz, sp.dx * sp.dy};
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  std::vector<std::array<std::int64_t, 3>> surface;
  std::size_t i = 0;
  for (std::int64_t z = 0; z < d.nz; ++z)
    for (std::int64_t y = 0; y < d.ny; ++y)
      for (std::int64_t x = 0; x < d.nx; ++x, ++i) {
        if (!mask[i]) continue;
        ++count;
        sum += Eigen::Vector3d(x * sp.dx, y * sp.dy, z * sp.dz);
        bool exposed = false;
        for (const auto& o : neighbor_offsets(Connectivity::Face6)) {
          std::int64_t nx = x + o[0], ny = y + o[1], nz = z + o[2];
          if (d.contains(nx, ny, nz) && mask.at(nx, ny, nz)) continue;
          exposed = true;
          area += face_area[o[0] != 0 ? 0 : o[1] != 0 ? 1 : 2];
        }
        if (exposed) surface.push_back({x, y, z});
      }
  if (count == 0) return out;

  const double volume = static_cast<double>(count) * sp.voxel_volume();
  const Eigen::Vector3d mean = sum / static_cast<double>(count);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  i = 0;
  for (std::int64_t z = 0; z < d.nz; ++z)
    for (std::int64_t y = 0; y < d.ny; ++y)
      for (std::int64_t x = 0; x < d.nx; ++x, ++i) {
        if (!mask[i]) continue;
        Eigen::Vector3d p(x * sp.dx, y * sp.dy, z * sp.dz);
        Eigen::Vector3d c = p - mean;
        cov += c * c.transpose();
      }
  cov /= static_cast<double>(count);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov, Eigen::EigenvaluesOnly);
  // Ascending order: least, minor, major.
  double least = std::max(0.0, eig.eigenvalues()[0]);
  double minor = std::max(0.0, eig.eigenvalues()[1]);
  double major = std::max(0.0, eig.eigenvalues()[2]);

  double max3 = 0.0, max_slice = 0.0, max_column = 0.0, max_row = 0.0;
  for (std::size_t a = 0; a < surface.size(); ++a) {
    const auto& p = surface[a];
    for (std::size_t b = a + 1; b < surface.size(); ++b) {
      const auto& q = surface[b];
      double ex = static_cast<double>(p[0] - q[0]) * sp.dx;
      double ey = static_cast<double>(p[1] - q[1]) * sp.dy;
      double ez = static_cast<double>(p[2] - q[2]) * sp.dz;
      double d2 = ex * ex + ey * ey + ez * ez;
      max3 = std::max(max3, d2);
      if (p[2] == q[2]) max_slice = std::max(max_slice, d2);
      if (p[1] == q[1]) max_column = std::max(max_column, d2);
      if (p[0] == q[0]) max_row = std::max(max_row, d2);
    }
  }

  auto& v = out.values;
  v[0] = major > 0.0 ? std::sqrt(minor / major) : 0.0;
  v[1] = major > 0.0 ? std::sqrt(least / major) : 0.0;
  v[2] = 4.0 * std::sqrt(least);
  v[3] = 4.0 * std::sqrt(major);
  v[4] = 4.0 * std::sqrt(minor);
  v[5] = std::sqrt(max_column);
  v[6] = std::sqrt(max_row);
  v[7] = std::sqrt(max_slice);
  v[8] = std::sqrt(max3);
  v[9] = std::cbrt(36.0 * std::numbers::pi * volume * volume) / area;
  v[10] = area;
  v[11] = area / volume;
  v[12] = static_cast<double>(count);
  v[13] = volume;
  return out;
}

}  // namespace postseg
