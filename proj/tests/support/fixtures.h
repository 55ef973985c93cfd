#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "postseg/random.h"
#include "postseg/volume.h"

namespace fixtures {

using namespace postseg;

inline Mask box_mask(Dims d, std::array<std::int64_t, 3> lo, std::array<std::int64_t, 3> hi,
                     Spacing s = {}) {
  Mask m(d, s, 0);
  for (auto z = lo[2]; z <= hi[2]; ++z)
    for (auto y = lo[1]; y <= hi[1]; ++y)
      for (auto x = lo[0]; x <= hi[0]; ++x) m.at(x, y, z) = 1;
  return m;
}

inline void paint_box(LabelMap& seg, std::array<std::int64_t, 3> lo,
                      std::array<std::int64_t, 3> hi, std::uint8_t label) {
  for (auto z = lo[2]; z <= hi[2]; ++z)
    for (auto y = lo[1]; y <= hi[1]; ++y)
      for (auto x = lo[0]; x <= hi[0]; ++x) seg.at(x, y, z) = label;
}

inline Mask random_mask(Rng& rng, Dims d, double density, Spacing s = {}) {
  Mask m(d, s, 0);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform() < density;
  return m;
}

/// A few random boxes plus sparse salt: several components of varied size.
inline Mask random_blobs(Rng& rng, Dims d, Spacing s = {}) {
  Mask m(d, s, 0);
  int boxes = static_cast<int>(rng.uniform_int(0, 3));
  for (int b = 0; b < boxes; ++b) {
    std::array<std::int64_t, 3> lo{}, hi{};
    const std::int64_t n[3] = {d.nx, d.ny, d.nz};
    for (int a = 0; a < 3; ++a) {
      lo[static_cast<std::size_t>(a)] = rng.uniform_int(0, n[a] - 1);
      hi[static_cast<std::size_t>(a)] =
          std::min(n[a] - 1, lo[static_cast<std::size_t>(a)] + rng.uniform_int(0, 4));
    }
    for (auto z = lo[2]; z <= hi[2]; ++z)
      for (auto y = lo[1]; y <= hi[1]; ++y)
        for (auto x = lo[0]; x <= hi[0]; ++x) m.at(x, y, z) = 1;
  }
  double salt = rng.uniform(0.0, 0.02);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (rng.uniform() < salt) m[i] = 1;
  return m;
}

/// Prediction derived from a GT mask: random voxel flips near the mask.
inline Mask perturb(Rng& rng, const Mask& gt, double flip) {
  Mask out = gt;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (rng.uniform() < flip) out[i] = !out[i];
  return out;
}

inline ScalarVolume random_image(Rng& rng, Dims d, double lo, double hi, Spacing s = {}) {
  ScalarVolume v(d, s, 0.0f);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(rng.uniform(lo, hi));
  return v;
}

inline Spacing random_spacing(Rng& rng) {
  const double choices[4] = {0.5, 1.0, 1.5, 2.0};
  return {choices[rng.index(4)], choices[rng.index(4)], choices[rng.index(4)]};
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    Rng rng(mix_seed(reinterpret_cast<std::uintptr_t>(this), counter++));
    path_ = std::filesystem::temp_directory_path() /
            ("postseg-" + tag + "-" + std::to_string(rng.uniform_int(0, 1'000'000'000)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
