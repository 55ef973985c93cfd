#include "postseg/synth.h"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "postseg/metrics.h"
#include "postseg/morphology.h"

namespace postseg {
namespace {

// Base intensity per label (rows BG, NETC, SNFH, ET, RC) and sequence
// (columns t1n, t1c, t2w, t2f).
constexpr double kBaseIntensity[5][4] = {
    {100.0, 100.0, 100.0, 100.0},
    {60.0, 70.0, 160.0, 110.0},
    {90.0, 95.0, 150.0, 170.0},
    {95.0, 200.0, 130.0, 140.0},
    {70.0, 80.0, 190.0, 90.0},
};

enum Stream : std::uint64_t { kTruthStream = 1, kImageStream = 2, kCorruptionStream = 3 };

Rng stream_rng(const SynthConfig& cfg, std::size_t index, Stream stream) {
  return Rng(mix_seed(mix_seed(cfg.seed, index), stream));
}

void check_range(const IntRange& r, const char* what, int min_lo) {
  if (r.lo < min_lo || r.hi < r.lo) throw ConfigError(std::string("invalid range for ") + what);
}

void check_range(const RealRange& r, const char* what) {
  if (!(r.lo > 0.0) || !(r.hi >= r.lo)) throw ConfigError(std::string("invalid range for ") + what);
}

int draw(Rng& rng, const IntRange& r) { return static_cast<int>(rng.uniform_int(r.lo, r.hi)); }
double draw(Rng& rng, const RealRange& r) { return rng.uniform(r.lo, r.hi); }

struct Ellipsoid {
  std::array<double, 3> centre;
  std::array<double, 3> axes;  // WT semi-axes in voxels

  double extent() const { return std::max({axes[0], axes[1], axes[2]}); }
};

// Box filter of radius 1 along each axis, averaging only in-grid voxels.
std::vector<double> box_blur(const std::vector<double>& in, const Dims& d) {
  std::vector<double> a = in, b(in.size());
  const std::int64_t n[3] = {d.nx, d.ny, d.nz};
  for (int axis = 0; axis < 3; ++axis) {
    std::size_t i = 0;
    for (std::int64_t z = 0; z < d.nz; ++z)
      for (std::int64_t y = 0; y < d.ny; ++y)
        for (std::int64_t x = 0; x < d.nx; ++x, ++i) {
          std::int64_t p[3] = {x, y, z};
          double sum = 0.0;
          int cnt = 0;
          for (int o = -1; o <= 1; ++o) {
            std::int64_t q[3] = {p[0], p[1], p[2]};
            q[axis] += o;
            if (q[axis] < 0 || q[axis] >= n[axis]) continue;
            sum += a[d.index(q[0], q[1], q[2])];
            ++cnt;
          }
          b[i] = sum / cnt;
        }
    std::swap(a, b);
  }
  return a;
}

std::size_t min_component_size(const LabelMap& gt) {
  std::size_t best = 0;
  for (std::uint8_t l = 1; l <= kMaxLabel; ++l) {
    ComponentLabeling cc = connected_components(label_mask(gt, l), Connectivity::Vertex26);
    for (std::size_t s : cc.sizes)
      if (best == 0 || s < best) best = s;
  }
  return best;
}

}  // namespace

void SynthConfig::validate() const {
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) throw ConfigError("synth grid dims must be positive");
  if (!spacing.valid()) throw ConfigError("synth spacing must be positive");
  check_range(lesion_count, "lesion count", 0);
  check_range(wt_radius, "lesion radius");
  check_range(axis_scale, "axis scale");
  check_range(tc_fraction, "TC fraction");
  check_range(et_fraction, "ET fraction");
  check_range(compact_et_fraction, "compact ET fraction");
  if (tc_fraction.hi > 1.0 || et_fraction.hi > tc_fraction.lo || compact_et_fraction.hi > 1.0)
    throw ConfigError("shell fractions must satisfy ET < TC <= 1");
  if (compact_probability < 0.0 || compact_probability > 1.0)
    throw ConfigError("compact probability must be in [0, 1]");
  check_range(rc_count, "RC count", 0);
  check_range(rc_radius, "RC radius");
  for (const auto& s : islands) {
    if (s.label < 1 || s.label > kMaxLabel) throw ConfigError("island label must be in 1..4");
    check_range(s.count, "island count", 0);
    check_range(s.size, "island size", 1);
  }
  if (island_margin < 1) throw ConfigError("island margin must be at least 1");
  if (swap.enabled && (swap.src < 1 || swap.src > kMaxLabel || swap.dst < 1 ||
                       swap.dst > kMaxLabel || swap.src == swap.dst))
    throw ConfigError("swap labels must be distinct and in 1..4");
  if (jitter_probability < 0.0 || jitter_probability > 1.0)
    throw ConfigError("jitter probability must be in [0, 1]");
  if (noise_sigma < 0.0) throw ConfigError("noise sigma must be non-negative");
}

std::size_t CaseInventory::island_voxel_count() const {
  std::size_t n = 0;
  for (const auto& i : islands) n += i.voxels.size();
  return n;
}

std::string synth_case_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "SYN-%05zu", index);
  return buf;
}

LabelMap generate_ground_truth(const SynthConfig& cfg, Rng& rng, bool* compact_core) {
  const Dims& d = cfg.dims;
  LabelMap gt(d, cfg.spacing);
  const bool compact = rng.uniform() < cfg.compact_probability;
  if (compact_core) *compact_core = compact;

  std::vector<Ellipsoid> placed;
  const int lesions = draw(rng, cfg.lesion_count);
  for (int l = 0; l < lesions; ++l) {
    const double radius = draw(rng, cfg.wt_radius);
    Ellipsoid e{};
    for (int a = 0; a < 3; ++a) e.axes[a] = radius * draw(rng, cfg.axis_scale);
    const double tc = compact ? 0.0 : draw(rng, cfg.tc_fraction);
    const double et = compact ? draw(rng, cfg.compact_et_fraction) : draw(rng, cfg.et_fraction);

    const std::int64_t n[3] = {d.nx, d.ny, d.nz};
    bool ok = false;
    for (int attempt = 0; attempt < 500 && !ok; ++attempt) {
      bool fits = true;
      for (int a = 0; a < 3; ++a) {
        double lo = e.axes[a] + 1.0, hi = static_cast<double>(n[a]) - 2.0 - e.axes[a];
        if (hi < lo) {
          fits = false;
          break;
        }
        e.centre[a] = rng.uniform(lo, hi);
      }
      if (!fits) break;
      ok = true;
      for (const auto& p : placed) {
        double dist = 0.0;
        for (int a = 0; a < 3; ++a) dist += (p.centre[a] - e.centre[a]) * (p.centre[a] - e.centre[a]);
        if (std::sqrt(dist) < p.extent() + e.extent() + 2.0) ok = false;
      }
    }
    if (!ok) throw ValidationError("synth: lesions cannot fit the grid");
    placed.push_back(e);

    for (std::int64_t z = 0; z < d.nz; ++z)
      for (std::int64_t y = 0; y < d.ny; ++y)
        for (std::int64_t x = 0; x < d.nx; ++x) {
          const double q[3] = {static_cast<double>(x), static_cast<double>(y), static_cast<double>(z)};
          double rho2 = 0.0;
          for (int a = 0; a < 3; ++a) {
            double t = (q[a] - e.centre[a]) / e.axes[a];
            rho2 += t * t;
          }
          const double rho = std::sqrt(rho2);
          if (rho > 1.0) continue;
          std::uint8_t label = rho <= et ? 3 : rho <= tc ? 1 : 2;
          gt.at(x, y, z) = label;
        }
  }

  const int blobs = draw(rng, cfg.rc_count);
  if (blobs > 0) {
    for (int b = 0; b < blobs; ++b) {
      const double r = draw(rng, cfg.rc_radius);
      Mask occupied = dilate(region_mask(gt, Region::WT), 2);
      for (std::size_t i = 0; i < gt.size(); ++i) occupied[i] |= gt[i] == 4;
      bool ok = false;
      for (int attempt = 0; attempt < 500 && !ok; ++attempt) {
        double c[3] = {rng.uniform(r + 1.0, d.nx - 2.0 - r), rng.uniform(r + 1.0, d.ny - 2.0 - r),
                       rng.uniform(r + 1.0, d.nz - 2.0 - r)};
        std::vector<std::size_t> voxels;
        ok = true;
        for (std::int64_t z = 0; z < d.nz && ok; ++z)
          for (std::int64_t y = 0; y < d.ny && ok; ++y)
            for (std::int64_t x = 0; x < d.nx; ++x) {
              double dx = x - c[0], dy = y - c[1], dz = z - c[2];
              if (dx * dx + dy * dy + dz * dz > r * r) continue;
              if (occupied.at(x, y, z)) {
                ok = false;
                break;
              }
              voxels.push_back(d.index(x, y, z));
            }
        if (ok)
          for (auto i : voxels) gt[i] = 4;
      }
      if (!ok) throw ValidationError("synth: resection cavities cannot fit the grid");
    }
  }
  return gt;
}

Corruption corrupt_prediction(const LabelMap& gt, const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  validate_labels(gt);
  const Dims& d = gt.dims();
  Corruption out;
  out.prediction = gt;
  LabelMap& pred = out.prediction;
  CaseInventory& inv = out.inventory;
  inv.min_true_component = min_component_size(gt);

  if (cfg.swap.enabled) {
    inv.swap_src = cfg.swap.src;
    inv.swap_dst = cfg.swap.dst;
    std::size_t wt = count_nonzero(region_mask(gt, Region::WT));
    std::size_t src = count_label(gt, cfg.swap.src);
    if (wt > 0) inv.swap_ratio = static_cast<double>(src) / static_cast<double>(wt);
    if (wt > 0 && src > 0 && inv.swap_ratio < cfg.swap.trigger) {
      inv.swap_applied = true;
      for (std::size_t i = 0; i < pred.size(); ++i)
        if (gt[i] == cfg.swap.src) {
          pred[i] = cfg.swap.dst;
          inv.swap_voxels.push_back(i);
        }
    }
  }

  Mask foreground = Mask::like(gt);
  for (std::size_t i = 0; i < gt.size(); ++i) foreground[i] = gt[i] != 0;
  const Mask forbidden = dilate(foreground, cfg.island_margin - 1);
  Mask near_island = Mask::like(gt);
  for (const IslandSpec& spec : cfg.islands) {
    const int count = draw(rng, spec.count);
    for (int k = 0; k < count; ++k) {
      const auto size = static_cast<std::size_t>(draw(rng, spec.size));
      std::vector<std::size_t> island;
      auto usable = [&](std::size_t i) {
        return !forbidden[i] && !near_island[i] &&
               std::find(island.begin(), island.end(), i) == island.end();
      };
      bool placed = false;
      for (int attempt = 0; attempt < 500 && !placed; ++attempt) {
        island.clear();
        std::size_t seed = rng.index(gt.size());
        if (!usable(seed)) continue;
        island.push_back(seed);
        for (std::size_t step = 0; step < 50 * size && island.size() < size; ++step) {
          auto p = d.coords(island[rng.index(island.size())]);
          const auto& o = neighbor_offsets(Connectivity::Face6)[rng.index(6)];
          std::int64_t x = p[0] + o[0], y = p[1] + o[1], z = p[2] + o[2];
          if (!d.contains(x, y, z)) continue;
          std::size_t c = d.index(x, y, z);
          if (usable(c)) island.push_back(c);
        }
        placed = island.size() == size;
      }
      if (!placed) throw ValidationError("synth: insufficient room for false-positive islands");
      std::sort(island.begin(), island.end());
      Mask m = Mask::like(gt);
      for (auto i : island) {
        pred[i] = spec.label;
        m[i] = 1;
      }
      Mask grown = dilate(m, 1);
      for (std::size_t i = 0; i < grown.size(); ++i) near_island[i] |= grown[i];
      inv.islands.push_back({spec.label, std::move(island)});
    }
  }

  if (cfg.jitter_probability > 0.0) {
    const Mask wt = region_mask(gt, Region::WT);
    const Mask inner = boundary_voxels(wt, Connectivity::Face6);
    const Mask grown = dilate(wt, 1, Connectivity::Face6);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (inner[i] && rng.uniform() < cfg.jitter_probability) {
        pred[i] = 0;
        ++inv.jitter_voxels;
      } else if (grown[i] && !wt[i] && gt[i] == 0 && pred[i] == 0 &&
                 rng.uniform() < cfg.jitter_probability) {
        pred[i] = 2;
        ++inv.jitter_voxels;
      }
    }
  }
  return out;
}

CaseBundle generate_case(const SynthConfig& cfg, std::size_t index, CaseInventory* inventory) {
  cfg.validate();
  CaseBundle bundle;
  bundle.case_id = synth_case_id(index);

  Rng truth_rng = stream_rng(cfg, index, kTruthStream);
  bool compact = false;
  LabelMap gt = generate_ground_truth(cfg, truth_rng, &compact);

  Rng image_rng = stream_rng(cfg, index, kImageStream);
  const double gain = image_rng.uniform(0.95, 1.05);
  const Dims& d = cfg.dims;
  for (std::size_t s = 0; s < kAllSequences.size(); ++s) {
    std::vector<double> smooth(gt.size()), white(gt.size());
    for (auto& v : smooth) v = image_rng.normal();
    for (auto& v : white) v = image_rng.normal();
    smooth = box_blur(smooth, d);
    ScalarVolume img(d, cfg.spacing);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      double base = kBaseIntensity[gt[i]][s];
      if (compact && gt[i] == 2) base *= cfg.compact_snfh_gain;
      double noise = cfg.noise_sigma * (0.7 * smooth[i] * std::sqrt(27.0) + 0.3 * white[i]);
      img[i] = static_cast<float>(std::max(0.0, base * gain + noise));
    }
    bundle.sequences.emplace(kAllSequences[s], std::move(img));
  }

  Rng corrupt_rng = stream_rng(cfg, index, kCorruptionStream);
  Corruption c = corrupt_prediction(gt, cfg, corrupt_rng);
  c.inventory.case_id = bundle.case_id;
  c.inventory.compact_core = compact;
  bundle.prediction = std::move(c.prediction);
  bundle.ground_truth = std::move(gt);
  if (inventory) *inventory = std::move(c.inventory);
  return bundle;
}

std::string inventory_to_json(const std::vector<CaseInventory>& cases, const SynthConfig& cfg) {
  using nlohmann::json;
  json j;
  j["version"] = "postseg-inventory/1";
  j["config"] = {
      {"seed", cfg.seed},
      {"dims", {cfg.dims.nx, cfg.dims.ny, cfg.dims.nz}},
      {"spacing", {cfg.spacing.dx, cfg.spacing.dy, cfg.spacing.dz}},
      {"lesion_count", {cfg.lesion_count.lo, cfg.lesion_count.hi}},
      {"wt_radius", {cfg.wt_radius.lo, cfg.wt_radius.hi}},
      {"compact_probability", cfg.compact_probability},
      {"island_margin", cfg.island_margin},
      {"swap", {{"enabled", cfg.swap.enabled}, {"src", cfg.swap.src}, {"dst", cfg.swap.dst},
                {"trigger", cfg.swap.trigger}}},
      {"jitter_probability", cfg.jitter_probability},
  };
  json islands_cfg = json::array();
  for (const auto& s : cfg.islands)
    islands_cfg.push_back({{"label", s.label},
                           {"count", {s.count.lo, s.count.hi}},
                           {"size", {s.size.lo, s.size.hi}}});
  j["config"]["islands"] = islands_cfg;
  json list = json::array();
  for (const auto& c : cases) {
    json islands = json::array();
    for (const auto& i : c.islands) islands.push_back({{"label", i.label}, {"voxels", i.voxels}});
    list.push_back({{"case_id", c.case_id},
                    {"compact_core", c.compact_core},
                    {"swap", {{"applied", c.swap_applied},
                              {"src", c.swap_src},
                              {"dst", c.swap_dst},
                              {"ratio", c.swap_ratio},
                              {"voxels", c.swap_voxels}}},
                    {"islands", islands},
                    {"jitter_voxels", c.jitter_voxels},
                    {"min_true_component", c.min_true_component}});
  }
  j["cases"] = list;
  return j.dump(1) + "\n";
}

std::vector<CaseInventory> load_inventory(const std::filesystem::path& path) {
  using nlohmann::json;
  std::ifstream in(path);
  if (!in) throw IoError("cannot read inventory " + path.string());
  std::vector<CaseInventory> out;
  try {
    json j = json::parse(in);
    for (const auto& c : j.at("cases")) {
      CaseInventory inv;
      inv.case_id = c.at("case_id").get<std::string>();
      inv.compact_core = c.at("compact_core").get<bool>();
      const auto& s = c.at("swap");
      inv.swap_applied = s.at("applied").get<bool>();
      inv.swap_src = s.at("src").get<std::uint8_t>();
      inv.swap_dst = s.at("dst").get<std::uint8_t>();
      inv.swap_ratio = s.at("ratio").get<double>();
      inv.swap_voxels = s.at("voxels").get<std::vector<std::size_t>>();
      for (const auto& i : c.at("islands"))
        inv.islands.push_back({i.at("label").get<std::uint8_t>(),
                               i.at("voxels").get<std::vector<std::size_t>>()});
      inv.jitter_voxels = c.at("jitter_voxels").get<std::size_t>();
      inv.min_true_component = c.at("min_true_component").get<std::size_t>();
      out.push_back(std::move(inv));
    }
  } catch (const json::exception& e) {
    throw ValidationError("inventory " + path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace postseg
