#pragma once

#include <cstdint>
#include <vector>

#include "postseg/volume.h"

namespace postseg {

enum class Connectivity { Face6 = 6, Vertex26 = 26 };

Connectivity parse_connectivity(int value);

struct ComponentTag;
struct DistanceTag;
using ComponentGrid = Grid<std::int32_t, ComponentTag>;
using DistanceMap = Grid<double, DistanceTag>;

/// Neighbour offsets (dx, dy, dz) for a connectivity, excluding the centre.
const std::vector<std::array<int, 3>>& neighbor_offsets(Connectivity conn);

/// Component ids over a binary mask: 0 is background, components are
/// numbered 1..count by their first voxel in scan order.
struct ComponentLabeling {
  ComponentGrid labels;
  std::vector<std::size_t> sizes;  // sizes[id - 1]
  std::size_t count = 0;

  std::size_t size_of(std::int32_t id) const { return sizes[static_cast<std::size_t>(id - 1)]; }
};

ComponentLabeling connected_components(const Mask& mask,
                                       Connectivity conn = Connectivity::Vertex26);

/// Keeps components with at least `min_size` voxels. min_size 0 is identity.
Mask remove_small_components(const Mask& mask, std::size_t min_size,
                             Connectivity conn = Connectivity::Vertex26);

/// Applies `iterations` rounds of neighbourhood dilation.
Mask dilate(const Mask& mask, int iterations, Connectivity conn = Connectivity::Vertex26);

/// Foreground voxels with at least one background neighbour under `conn`;
/// voxels outside the grid count as background.
Mask boundary_voxels(const Mask& mask, Connectivity conn = Connectivity::Face6);

/// Exact Euclidean distance (mm) from every voxel centre to the nearest
/// foreground voxel centre, using separable lower envelopes of parabolas.
/// Foreground voxels get 0; an empty mask gives +inf everywhere.
DistanceMap euclidean_distance_transform(const Mask& mask, const Spacing& spacing);

/// Axis-aligned inclusive box of voxel indices.
struct Box {
  std::array<std::int64_t, 3> lo{0, 0, 0};
  std::array<std::int64_t, 3> hi{-1, -1, -1};

  bool empty() const { return hi[0] < lo[0]; }
  void include(std::int64_t x, std::int64_t y, std::int64_t z);
  void include(const Box& other);
  Box padded(std::int64_t pad, const Dims& bounds) const;
  Dims extent() const { return {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1}; }
};

Box bounding_box(const Mask& mask);

/// Copies the voxels of `box` into a new grid (spacing kept).
template <typename T, typename Tag>
Grid<T, Tag> crop(const Grid<T, Tag>& grid, const Box& box) {
  Dims ext = box.extent();
  Grid<T, Tag> out(ext, grid.spacing());
  for (std::int64_t z = 0; z < ext.nz; ++z)
    for (std::int64_t y = 0; y < ext.ny; ++y)
      for (std::int64_t x = 0; x < ext.nx; ++x)
        out.at(x, y, z) = grid.at(x + box.lo[0], y + box.lo[1], z + box.lo[2]);
  return out;
}

}  // namespace postseg
