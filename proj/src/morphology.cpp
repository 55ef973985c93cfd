#include "postseg/morphology.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>

namespace postseg {
namespace {

std::vector<std::array<int, 3>> make_offsets(Connectivity conn) {
  std::vector<std::array<int, 3>> out;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0) continue;
        if (conn == Connectivity::Face6 && manhattan != 1) continue;
        out.push_back({dx, dy, dz});
      }
  return out;
}

// Offsets that precede the centre in scan order (z slowest, x fastest).
std::vector<std::array<int, 3>> backward_offsets(Connectivity conn) {
  std::vector<std::array<int, 3>> out;
  for (const auto& o : neighbor_offsets(conn)) {
    if (o[2] < 0 || (o[2] == 0 && o[1] < 0) || (o[2] == 0 && o[1] == 0 && o[0] < 0))
      out.push_back(o);
  }
  return out;
}

std::int32_t find_root(std::vector<std::int32_t>& parent, std::int32_t x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    auto& p = parent[static_cast<std::size_t>(x)];
    p = parent[static_cast<std::size_t>(p)];
    x = p;
  }
  return x;
}

// 1D squared distance transform along one line (lower envelope of
// parabolas). `f` holds squared distances or +inf, `w` is the voxel pitch.
void distance_line(const double* f, double* out, std::int64_t n, double w,
                   std::vector<std::int64_t>& v, std::vector<double>& z) {
  const double inf = std::numeric_limits<double>::infinity();
  std::int64_t k = -1;
  for (std::int64_t q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    double s = 0.0;
    for (;;) {
      std::int64_t p = v[static_cast<std::size_t>(k)];
      double xq = static_cast<double>(q) * w;
      double xp = static_cast<double>(p) * w;
      s = ((f[q] + xq * xq) - (f[p] + xp * xp)) / (2.0 * (xq - xp));
      if (s <= z[static_cast<std::size_t>(k)]) {
        --k;
        if (k < 0) break;
      } else {
        break;
      }
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = k == 0 ? -inf : s;
    z[static_cast<std::size_t>(k) + 1] = inf;
  }
  if (k < 0) {
    std::fill(out, out + n, inf);
    return;
  }
  std::int64_t j = 0;
  for (std::int64_t q = 0; q < n; ++q) {
    double x = static_cast<double>(q) * w;
    while (z[static_cast<std::size_t>(j) + 1] < x) ++j;
    std::int64_t p = v[static_cast<std::size_t>(j)];
    double d = static_cast<double>(q - p) * w;
    out[q] = d * d + f[p];
  }
}

}  // namespace

Connectivity parse_connectivity(int value) {
  if (value == 6) return Connectivity::Face6;
  if (value == 26) return Connectivity::Vertex26;
  throw ConfigError("connectivity must be 6 or 26, got " + std::to_string(value));
}

const std::vector<std::array<int, 3>>& neighbor_offsets(Connectivity conn) {
  static const auto face = make_offsets(Connectivity::Face6);
  static const auto vertex = make_offsets(Connectivity::Vertex26);
  return conn == Connectivity::Face6 ? face : vertex;
}

void Box::include(std::int64_t x, std::int64_t y, std::int64_t z) {
  if (empty()) {
    lo = hi = {x, y, z};
    return;
  }
  const std::int64_t p[3] = {x, y, z};
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::min(lo[a], p[a]);
    hi[a] = std::max(hi[a], p[a]);
  }
}

void Box::include(const Box& other) {
  if (other.empty()) return;
  include(other.lo[0], other.lo[1], other.lo[2]);
  include(other.hi[0], other.hi[1], other.hi[2]);
}

Box Box::padded(std::int64_t pad, const Dims& bounds) const {
  if (empty()) return *this;
  const std::int64_t n[3] = {bounds.nx, bounds.ny, bounds.nz};
  Box b = *this;
  for (int a = 0; a < 3; ++a) {
    b.lo[a] = std::max<std::int64_t>(0, lo[a] - pad);
    b.hi[a] = std::min<std::int64_t>(n[a] - 1, hi[a] + pad);
  }
  return b;
}

Box bounding_box(const Mask& mask) {
  Box box;
  const Dims& d = mask.dims();
  std::size_t i = 0;
  for (std::int64_t z = 0; z < d.nz; ++z)
    for (std::int64_t y = 0; y < d.ny; ++y)
      for (std::int64_t x = 0; x < d.nx; ++x, ++i)
        if (mask[i]) box.include(x, y, z);
  return box;
}

ComponentLabeling connected_components(const Mask& mask, Connectivity conn) {
  const Dims& d = mask.dims();
  ComponentLabeling out;
  out.labels = ComponentGrid::like(mask, 0);
  auto& lab = out.labels;
  const auto back = backward_offsets(conn);

  std::vector<std::int32_t> parent{0};
  std::size_t i = 0;
  for (std::int64_t z = 0; z < d.nz; ++z) {
    for (std::int64_t y = 0; y < d.ny; ++y) {
      for (std::int64_t x = 0; x < d.nx; ++x, ++i) {
        if (!mask[i]) continue;
        std::int32_t current = 0;
        for (const auto& o : back) {
          std::int64_t nx = x + o[0], ny = y + o[1], nz = z + o[2];
          if (!d.contains(nx, ny, nz)) continue;
          std::int32_t other = lab.at(nx, ny, nz);
          if (other == 0) continue;
          if (current == 0) {
            current = other;
            continue;
          }
          std::int32_t ra = find_root(parent, current);
          std::int32_t rb = find_root(parent, other);
          if (ra != rb) parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
        }
        if (current == 0) {
          current = static_cast<std::int32_t>(parent.size());
          parent.push_back(current);
        }
        lab[i] = current;
      }
    }
  }

  std::vector<std::int32_t> final_id(parent.size(), 0);
  for (std::size_t v = 0; v < lab.size(); ++v) {
    if (lab[v] == 0) continue;
    std::int32_t root = find_root(parent, lab[v]);
    auto& id = final_id[static_cast<std::size_t>(root)];
    if (id == 0) {
      id = static_cast<std::int32_t>(++out.count);
      out.sizes.push_back(0);
    }
    lab[v] = id;
    ++out.sizes[static_cast<std::size_t>(id - 1)];
  }
  return out;
}

Mask remove_small_components(const Mask& mask, std::size_t min_size, Connectivity conn) {
  if (min_size == 0) return mask;
  ComponentLabeling cc = connected_components(mask, conn);
  Mask out = Mask::like(mask, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    std::int32_t id = cc.labels[i];
    if (id != 0 && cc.size_of(id) >= min_size) out[i] = 1;
  }
  return out;
}

Mask dilate(const Mask& mask, int iterations, Connectivity conn) {
  if (iterations < 0) throw ConfigError("dilation iterations must be >= 0");
  Mask cur = mask;
  for (auto& v : cur.raw()) v = v != 0;
  const Dims& d = mask.dims();
  for (int it = 0; it < iterations; ++it) {
    Mask next = cur;
    if (conn == Connectivity::Vertex26) {
      // The 3x3x3 cube is separable: grow along x, then y, then z.
      const std::int64_t strides[3] = {1, d.nx, d.nx * d.ny};
      const std::int64_t extents[3] = {d.nx, d.ny, d.nz};
      for (int axis = 0; axis < 3; ++axis) {
        Mask src = next;
        std::size_t i = 0;
        for (std::int64_t z = 0; z < d.nz; ++z)
          for (std::int64_t y = 0; y < d.ny; ++y)
            for (std::int64_t x = 0; x < d.nx; ++x, ++i) {
              if (src[i]) continue;
              std::int64_t pos = axis == 0 ? x : axis == 1 ? y : z;
              auto s = static_cast<std::size_t>(strides[axis]);
              if ((pos > 0 && src[i - s]) || (pos + 1 < extents[axis] && src[i + s]))
                next[i] = 1;
            }
      }
    } else {
      const auto& offs = neighbor_offsets(conn);
      std::size_t i = 0;
      for (std::int64_t z = 0; z < d.nz; ++z)
        for (std::int64_t y = 0; y < d.ny; ++y)
          for (std::int64_t x = 0; x < d.nx; ++x, ++i) {
            if (cur[i]) continue;
            for (const auto& o : offs) {
              if (d.contains(x + o[0], y + o[1], z + o[2]) &&
                  cur.at(x + o[0], y + o[1], z + o[2])) {
                next[i] = 1;
                break;
              }
            }
          }
    }
    cur = std::move(next);
  }
  return cur;
}

Mask boundary_voxels(const Mask& mask, Connectivity conn) {
  const Dims& d = mask.dims();
  const auto& offs = neighbor_offsets(conn);
  Mask out = Mask::like(mask, 0);
  std::size_t i = 0;
  for (std::int64_t z = 0; z < d.nz; ++z)
    for (std::int64_t y = 0; y < d.ny; ++y)
      for (std::int64_t x = 0; x < d.nx; ++x, ++i) {
        if (!mask[i]) continue;
        for (const auto& o : offs) {
          std::int64_t nx = x + o[0], ny = y + o[1], nz = z + o[2];
          if (!d.contains(nx, ny, nz) || !mask.at(nx, ny, nz)) {
            out[i] = 1;
            break;
          }
        }
      }
  return out;
}

DistanceMap euclidean_distance_transform(const Mask& mask, const Spacing& spacing) {
  if (!spacing.valid()) throw ValidationError("EDT requires positive finite spacing");
  const double inf = std::numeric_limits<double>::infinity();
  const Dims& d = mask.dims();
  DistanceMap dist = DistanceMap::like(mask, inf);
  dist.geometry().spacing = spacing;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) dist[i] = 0.0;

  const std::int64_t extents[3] = {d.nx, d.ny, d.nz};
  const std::int64_t strides[3] = {1, d.nx, d.nx * d.ny};
  const double pitch[3] = {spacing.dx, spacing.dy, spacing.dz};
  std::int64_t longest = std::max({d.nx, d.ny, d.nz});
  std::vector<double> line(static_cast<std::size_t>(longest));
  std::vector<double> result(static_cast<std::size_t>(longest));
  std::vector<std::int64_t> v(static_cast<std::size_t>(longest));
  std::vector<double> zs(static_cast<std::size_t>(longest) + 1);

  for (int axis = 0; axis < 3; ++axis) {
    int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    std::int64_t n = extents[axis];
    for (std::int64_t j = 0; j < extents[a2]; ++j) {
      for (std::int64_t i = 0; i < extents[a1]; ++i) {
        std::int64_t base = i * strides[a1] + j * strides[a2];
        for (std::int64_t q = 0; q < n; ++q)
          line[static_cast<std::size_t>(q)] = dist[static_cast<std::size_t>(base + q * strides[axis])];
        distance_line(line.data(), result.data(), n, pitch[axis], v, zs);
        for (std::int64_t q = 0; q < n; ++q)
          dist[static_cast<std::size_t>(base + q * strides[axis])] = result[static_cast<std::size_t>(q)];
      }
    }
  }
  for (auto& x : dist.raw()) x = std::sqrt(x);
  return dist;
}

}  // namespace postseg
