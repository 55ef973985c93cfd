#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>

#include "postseg/radiomics.h"

namespace postseg {
namespace {

struct RoiVoxel {
  std::int64_t x, y, z;
  int level;
};

std::vector<RoiVoxel> roi_voxels(const LevelGrid& levels) {
  std::vector<RoiVoxel> out;
  const Dims& d = levels.dims();
  std::size_t i = 0;
  for (std::int64_t z = 0; z < d.nz; ++z)
    for (std::int64_t y = 0; y < d.ny; ++y)
      for (std::int64_t x = 0; x < d.nx; ++x, ++i)
        if (levels[i] > 0) out.push_back({x, y, z, levels[i]});
  return out;
}

int level_at(const LevelGrid& levels, std::int64_t x, std::int64_t y, std::int64_t z) {
  return levels.dims().contains(x, y, z) ? levels.at(x, y, z) : 0;
}

double entropy_term(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

// The sixteen emphasis / non-uniformity statistics shared by run-length,
// size-zone and dependence matrices. `total` is the number of runs, zones or
// voxels; `voxels` is the ROI voxel count.
struct LevelSizeStats {
  double small = 0, large = 0, gln = 0, glnn = 0, sn = 0, snn = 0, percentage = 0;
  double glv = 0, sv = 0, entropy = 0, lgle = 0, hgle = 0;
  double slgle = 0, shgle = 0, llgle = 0, lhgle = 0;
};

LevelSizeStats level_size_stats(const LevelSizeCounts& counts, double voxels) {
  LevelSizeStats s;
  double total = 0.0;
  std::map<int, double> by_level;
  std::map<std::size_t, double> by_size;
  for (const auto& [key, c] : counts) {
    total += c;
    by_level[key.first] += c;
    by_size[key.second] += c;
  }
  if (total <= 0.0) return s;
  double mu_i = 0.0, mu_j = 0.0;
  for (const auto& [key, c] : counts) {
    double p = c / total;
    mu_i += p * key.first;
    mu_j += p * static_cast<double>(key.second);
  }
  for (const auto& [key, c] : counts) {
    const double i = key.first;
    const double j = static_cast<double>(key.second);
    const double p = c / total;
    s.small += c / (j * j);
    s.large += c * j * j;
    s.glv += p * (i - mu_i) * (i - mu_i);
    s.sv += p * (j - mu_j) * (j - mu_j);
    s.entropy += entropy_term(p);
    s.lgle += c / (i * i);
    s.hgle += c * i * i;
    s.slgle += c / (i * i * j * j);
    s.shgle += c * i * i / (j * j);
    s.llgle += c * j * j / (i * i);
    s.lhgle += c * i * i * j * j;
  }
  for (const auto& [l, c] : by_level) s.gln += c * c;
  for (const auto& [k, c] : by_size) s.sn += c * c;
  s.glnn = s.gln / (total * total);
  s.snn = s.sn / (total * total);
  for (double* v : {&s.small, &s.large, &s.gln, &s.sn, &s.lgle, &s.hgle, &s.slgle, &s.shgle,
                    &s.llgle, &s.lhgle})
    *v /= total;
  s.percentage = total / voxels;
  return s;
}

std::vector<double> run_or_zone_values(const LevelSizeStats& s) {
  return {s.small, s.large, s.gln, s.glnn, s.sn, s.snn, s.percentage, s.glv,
          s.sv,    s.entropy, s.lgle, s.hgle, s.slgle, s.shgle, s.llgle, s.lhgle};
}

}  // namespace

const std::vector<std::string>& glcm_feature_names() {
  static const std::vector<std::string> names{
      "Autocorrelation",  "JointAverage",     "ClusterProminence", "ClusterShade",
      "ClusterTendency",  "Contrast",         "Correlation",       "DifferenceAverage",
      "DifferenceEntropy", "DifferenceVariance", "JointEnergy",    "JointEntropy",
      "Imc1",             "Imc2",             "Idm",               "Idmn",
      "Id",               "Idn",              "InverseVariance",   "MaximumProbability",
      "SumAverage",       "SumEntropy",       "SumSquares",        "MCC",
  };
  return names;
}

const std::vector<std::string>& glrlm_feature_names() {
  static const std::vector<std::string> names{
      "ShortRunEmphasis", "LongRunEmphasis", "GrayLevelNonUniformity",
      "GrayLevelNonUniformityNormalized", "RunLengthNonUniformity",
      "RunLengthNonUniformityNormalized", "RunPercentage", "GrayLevelVariance",
      "RunVariance", "RunEntropy", "LowGrayLevelRunEmphasis", "HighGrayLevelRunEmphasis",
      "ShortRunLowGrayLevelEmphasis", "ShortRunHighGrayLevelEmphasis",
      "LongRunLowGrayLevelEmphasis", "LongRunHighGrayLevelEmphasis",
  };
  return names;
}

const std::vector<std::string>& glszm_feature_names() {
  static const std::vector<std::string> names{
      "SmallAreaEmphasis", "LargeAreaEmphasis", "GrayLevelNonUniformity",
      "GrayLevelNonUniformityNormalized", "SizeZoneNonUniformity",
      "SizeZoneNonUniformityNormalized", "ZonePercentage", "GrayLevelVariance",
      "ZoneVariance", "ZoneEntropy", "LowGrayLevelZoneEmphasis", "HighGrayLevelZoneEmphasis",
      "SmallAreaLowGrayLevelEmphasis", "SmallAreaHighGrayLevelEmphasis",
      "LargeAreaLowGrayLevelEmphasis", "LargeAreaHighGrayLevelEmphasis",
  };
  return names;
}

const std::vector<std::string>& gldm_feature_names() {
  static const std::vector<std::string> names{
      "SmallDependenceEmphasis", "LargeDependenceEmphasis", "GrayLevelNonUniformity",
      "DependenceNonUniformity", "DependenceNonUniformityNormalized", "GrayLevelVariance",
      "DependenceVariance", "DependenceEntropy", "LowGrayLevelEmphasis",
      "HighGrayLevelEmphasis", "SmallDependenceLowGrayLevelEmphasis",
      "SmallDependenceHighGrayLevelEmphasis", "LargeDependenceLowGrayLevelEmphasis",
      "LargeDependenceHighGrayLevelEmphasis",
  };
  return names;
}

const std::vector<std::string>& ngtdm_feature_names() {
  static const std::vector<std::string> names{"Coarseness", "Contrast", "Busyness",
                                              "Complexity", "Strength"};
  return names;
}

LevelGrid discretize_bin_count(const ScalarVolume& image, const Mask& mask, int bin_count) {
  if (!image.geometry().congruent(mask.geometry()))
    throw ValidationError("discretize: image and mask grids differ");
  if (bin_count < 1) throw ConfigError("bin count must be >= 1");
  LevelGrid out = LevelGrid::like(mask, 0);
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) {
      lo = std::min<double>(lo, image[i]);
      hi = std::max<double>(hi, image[i]);
    }
  if (!(lo <= hi)) return out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    if (hi == lo) {
      out[i] = 1;
      continue;
    }
    double t = (static_cast<double>(image[i]) - lo) / (hi - lo) * bin_count;
    out[i] = std::min(bin_count, static_cast<int>(std::floor(t)) + 1);
  }
  return out;
}

const std::vector<std::array<int, 3>>& texture_directions() {
  static const std::vector<std::array<int, 3>> dirs{
      {1, 0, 0},  {0, 1, 0},  {0, 0, 1},   {1, 1, 0},  {1, -1, 0},
      {1, 0, 1},  {1, 0, -1}, {0, 1, 1},   {0, 1, -1}, {1, 1, 1},
      {1, 1, -1}, {1, -1, 1}, {1, -1, -1},
  };
  return dirs;
}

CooccurrenceCounts glcm_counts(const LevelGrid& levels, const std::array<int, 3>& offset,
                               bool symmetric) {
  CooccurrenceCounts counts;
  for (const auto& v : roi_voxels(levels)) {
    int other = level_at(levels, v.x + offset[0], v.y + offset[1], v.z + offset[2]);
    if (other == 0) continue;
    counts[{v.level, other}] += 1.0;
    if (symmetric) counts[{other, v.level}] += 1.0;
  }
  return counts;
}

FeatureVector glcm_matrix_features(const CooccurrenceCounts& counts) {
  FeatureVector out;
  out.names = glcm_feature_names();
  out.values.assign(out.names.size(), 0.0);
  double total = 0.0;
  std::set<int> level_set;
  for (const auto& [key, c] : counts) {
    total += c;
    level_set.insert(key.first);
    level_set.insert(key.second);
  }
  if (total <= 0.0) return out;
  const std::vector<int> lv(level_set.begin(), level_set.end());
  const auto ng = static_cast<Eigen::Index>(lv.size());
  auto index_of = [&](int level) {
    return static_cast<Eigen::Index>(std::lower_bound(lv.begin(), lv.end(), level) - lv.begin());
  };
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(ng, ng);
  for (const auto& [key, c] : counts) p(index_of(key.first), index_of(key.second)) += c / total;

  Eigen::VectorXd px = p.rowwise().sum();
  Eigen::VectorXd py = p.colwise().sum().transpose();
  double ux = 0, uy = 0;
  for (Eigen::Index a = 0; a < ng; ++a) {
    ux += lv[static_cast<std::size_t>(a)] * px(a);
    uy += lv[static_cast<std::size_t>(a)] * py(a);
  }
  double sx2 = 0, sy2 = 0;
  for (Eigen::Index a = 0; a < ng; ++a) {
    double i = lv[static_cast<std::size_t>(a)];
    sx2 += (i - ux) * (i - ux) * px(a);
    sy2 += (i - uy) * (i - uy) * py(a);
  }

  std::map<int, double> p_sum, p_diff;
  double autocorr = 0, prominence = 0, shade = 0, tendency = 0, contrast = 0;
  double energy = 0, hxy = 0, hxy1 = 0, hxy2 = 0, maxprob = 0, sumsq = 0, ij = 0;
  for (Eigen::Index a = 0; a < ng; ++a) {
    for (Eigen::Index b = 0; b < ng; ++b) {
      const double i = lv[static_cast<std::size_t>(a)];
      const double j = lv[static_cast<std::size_t>(b)];
      const double pij = p(a, b);
      const double pxy = px(a) * py(b);
      if (pxy > 0.0) hxy2 -= pxy * std::log2(pxy);
      if (pij <= 0.0) continue;
      p_sum[static_cast<int>(i + j)] += pij;
      p_diff[static_cast<int>(std::fabs(i - j))] += pij;
      const double t = i + j - ux - uy;
      ij += i * j * pij;
      autocorr += i * j * pij;
      prominence += t * t * t * t * pij;
      shade += t * t * t * pij;
      tendency += t * t * pij;
      contrast += (i - j) * (i - j) * pij;
      energy += pij * pij;
      hxy -= pij * std::log2(pij);
      hxy1 -= pij * std::log2(pxy);
      maxprob = std::max(maxprob, pij);
      sumsq += (i - ux) * (i - ux) * pij;
    }
  }
  double hx = 0, hy = 0;
  for (Eigen::Index a = 0; a < ng; ++a) {
    hx += entropy_term(px(a));
    hy += entropy_term(py(a));
  }

  double diff_avg = 0, diff_ent = 0, idm = 0, idmn = 0, id = 0, idn = 0, inv_var = 0;
  const double ngd = static_cast<double>(ng);
  for (const auto& [k, pk] : p_diff) {
    const double kd = k;
    diff_avg += kd * pk;
    diff_ent += entropy_term(pk);
    idm += pk / (1.0 + kd * kd);
    idmn += pk / (1.0 + kd * kd / (ngd * ngd));
    id += pk / (1.0 + kd);
    idn += pk / (1.0 + kd / ngd);
    if (k > 0) inv_var += pk / (kd * kd);
  }
  double diff_var = 0;
  for (const auto& [k, pk] : p_diff) diff_var += (k - diff_avg) * (k - diff_avg) * pk;
  double sum_avg = 0, sum_ent = 0;
  for (const auto& [k, pk] : p_sum) {
    sum_avg += k * pk;
    sum_ent += entropy_term(pk);
  }

  const double sigma = std::sqrt(sx2) * std::sqrt(sy2);
  const double correlation = sigma > 0.0 ? (ij - ux * uy) / sigma : 1.0;
  const double hmax = std::max(hx, hy);
  const double imc1 = hmax > 0.0 ? (hxy - hxy1) / hmax : 0.0;
  const double imc2 = hxy > hxy2 ? 0.0 : std::sqrt(1.0 - std::exp(-2.0 * (hxy2 - hxy)));

  // The MCC matrix Q = D^-1 P D^-1 P (P symmetric, D = diag(px)) is similar
  // to S^2 with S = D^-1/2 P D^-1/2, so its eigenvalues are squares of S's.
  double mcc = 1.0;
  std::vector<Eigen::Index> live;
  for (Eigen::Index a = 0; a < ng; ++a)
    if (px(a) > 0.0) live.push_back(a);
  if (live.size() >= 2 && p.isApprox(p.transpose(), 1e-12)) {
    const auto m = static_cast<Eigen::Index>(live.size());
    Eigen::MatrixXd s(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b)
        s(a, b) = p(live[static_cast<std::size_t>(a)], live[static_cast<std::size_t>(b)]) /
                  std::sqrt(px(live[static_cast<std::size_t>(a)]) *
                            px(live[static_cast<std::size_t>(b)]));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
    std::vector<double> sq;
    for (Eigen::Index a = 0; a < m; ++a) sq.push_back(eig.eigenvalues()(a) * eig.eigenvalues()(a));
    std::sort(sq.begin(), sq.end(), std::greater<>());
    mcc = std::sqrt(std::max(0.0, sq[1]));
  } else if (live.size() >= 2) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(ng, ng);
    for (Eigen::Index a = 0; a < ng; ++a)
      for (Eigen::Index b = 0; b < ng; ++b)
        for (Eigen::Index k = 0; k < ng; ++k)
          if (px(a) > 0 && py(k) > 0) q(a, b) += p(a, k) * p(b, k) / (px(a) * py(k));
    Eigen::EigenSolver<Eigen::MatrixXd> eig(q, false);
    std::vector<double> ev;
    for (Eigen::Index a = 0; a < ng; ++a) ev.push_back(eig.eigenvalues()(a).real());
    std::sort(ev.begin(), ev.end(), std::greater<>());
    mcc = std::sqrt(std::max(0.0, ev[1]));
  }

  out.values = {autocorr, ux,      prominence, shade,    tendency, contrast, correlation,
                diff_avg, diff_ent, diff_var,  energy,   hxy,      imc1,     imc2,
                idm,      idmn,    id,         idn,      inv_var,  maxprob,  sum_avg,
                sum_ent,  sumsq,   mcc};
  return out;
}

FeatureVector glcm_features(const LevelGrid& levels,
                            const std::vector<std::array<int, 3>>& offsets) {
  FeatureVector out;
  out.names = glcm_feature_names();
  out.values.assign(out.names.size(), 0.0);
  std::size_t used = 0;
  for (const auto& o : offsets) {
    CooccurrenceCounts counts = glcm_counts(levels, o, true);
    if (counts.empty()) continue;
    FeatureVector f = glcm_matrix_features(counts);
    for (std::size_t k = 0; k < f.values.size(); ++k) out.values[k] += f.values[k];
    ++used;
  }
  if (used > 0)
    for (auto& v : out.values) v /= static_cast<double>(used);
  return out;
}

LevelSizeCounts glrlm_counts(const LevelGrid& levels, const std::array<int, 3>& dir) {
  LevelSizeCounts counts;
  for (const auto& v : roi_voxels(levels)) {
    if (level_at(levels, v.x - dir[0], v.y - dir[1], v.z - dir[2]) == v.level) continue;
    std::size_t len = 1;
    std::int64_t x = v.x + dir[0], y = v.y + dir[1], z = v.z + dir[2];
    while (level_at(levels, x, y, z) == v.level) {
      ++len;
      x += dir[0];
      y += dir[1];
      z += dir[2];
    }
    counts[{v.level, len}] += 1.0;
  }
  return counts;
}

LevelSizeCounts glszm_counts(const LevelGrid& levels, Connectivity conn) {
  LevelSizeCounts counts;
  const Dims& d = levels.dims();
  std::vector<std::uint8_t> seen(levels.size(), 0);
  std::vector<std::array<std::int64_t, 3>> stack;
  for (const auto& v : roi_voxels(levels)) {
    std::size_t start = d.index(v.x, v.y, v.z);
    if (seen[start]) continue;
    seen[start] = 1;
    std::size_t size = 0;
    stack.push_back({v.x, v.y, v.z});
    while (!stack.empty()) {
      auto [x, y, z] = stack.back();
      stack.pop_back();
      ++size;
      for (const auto& o : neighbor_offsets(conn)) {
        std::int64_t nx = x + o[0], ny = y + o[1], nz = z + o[2];
        if (level_at(levels, nx, ny, nz) != v.level) continue;
        std::size_t ni = d.index(nx, ny, nz);
        if (seen[ni]) continue;
        seen[ni] = 1;
        stack.push_back({nx, ny, nz});
      }
    }
    counts[{v.level, size}] += 1.0;
  }
  return counts;
}

LevelSizeCounts gldm_counts(const LevelGrid& levels, Connectivity conn) {
  LevelSizeCounts counts;
  for (const auto& v : roi_voxels(levels)) {
    std::size_t dependent = 0;
    for (const auto& o : neighbor_offsets(conn))
      dependent += level_at(levels, v.x + o[0], v.y + o[1], v.z + o[2]) == v.level;
    counts[{v.level, dependent + 1}] += 1.0;
  }
  return counts;
}

NgtdmTable ngtdm_table(const LevelGrid& levels, Connectivity conn) {
  NgtdmTable t;
  for (const auto& v : roi_voxels(levels)) {
    double sum = 0.0;
    int n = 0;
    for (const auto& o : neighbor_offsets(conn)) {
      int other = level_at(levels, v.x + o[0], v.y + o[1], v.z + o[2]);
      if (other == 0) continue;
      sum += other;
      ++n;
    }
    if (n == 0) continue;
    t.count[v.level] += 1.0;
    t.difference[v.level] += std::fabs(v.level - sum / n);
  }
  return t;
}

FeatureVector texture_family_features(const LevelGrid& levels, TextureFamily family,
                                      Connectivity conn) {
  FeatureVector out;
  double voxels = 0.0;
  for (auto l : levels.values()) voxels += l > 0;
  switch (family) {
    case TextureFamily::GLRLM: {
      out.names = glrlm_feature_names();
      out.values.assign(out.names.size(), 0.0);
      if (voxels == 0.0) return out;
      std::size_t used = 0;
      for (const auto& dir : texture_directions()) {
        LevelSizeCounts c = glrlm_counts(levels, dir);
        if (c.empty()) continue;
        auto v = run_or_zone_values(level_size_stats(c, voxels));
        for (std::size_t k = 0; k < v.size(); ++k) out.values[k] += v[k];
        ++used;
      }
      for (auto& v : out.values) v /= static_cast<double>(used);
      return out;
    }
    case TextureFamily::GLSZM: {
      out.names = glszm_feature_names();
      if (voxels == 0.0) {
        out.values.assign(out.names.size(), 0.0);
        return out;
      }
      out.values = run_or_zone_values(level_size_stats(glszm_counts(levels, conn), voxels));
      return out;
    }
    case TextureFamily::GLDM: {
      out.names = gldm_feature_names();
      if (voxels == 0.0) {
        out.values.assign(out.names.size(), 0.0);
        return out;
      }
      LevelSizeStats s = level_size_stats(gldm_counts(levels, conn), voxels);
      out.values = {s.small, s.large, s.gln,  s.sn,   s.snn,   s.glv,   s.sv,
                    s.entropy, s.lgle, s.hgle, s.slgle, s.shgle, s.llgle, s.lhgle};
      return out;
    }
    case TextureFamily::NGTDM: {
      out.names = ngtdm_feature_names();
      out.values.assign(out.names.size(), 0.0);
      NgtdmTable t = ngtdm_table(levels, conn);
      double nvp = 0.0, s_total = 0.0, ps_sum = 0.0;
      for (const auto& [l, n] : t.count) nvp += n;
      if (nvp == 0.0) return out;
      std::vector<std::pair<double, double>> ip;  // (level, p_i)
      std::vector<double> s;
      for (const auto& [l, n] : t.count) {
        ip.emplace_back(l, n / nvp);
        s.push_back(t.difference.at(l));
        s_total += t.difference.at(l);
        ps_sum += (n / nvp) * t.difference.at(l);
      }
      const std::size_t ngp = ip.size();
      double contrast_sum = 0, busy_den = 0, complexity = 0, strength_num = 0;
      for (std::size_t a = 0; a < ngp; ++a) {
        for (std::size_t b = 0; b < ngp; ++b) {
          const auto [i, pi] = ip[a];
          const auto [j, pj] = ip[b];
          contrast_sum += pi * pj * (i - j) * (i - j);
          busy_den += std::fabs(i * pi - j * pj);
          complexity += std::fabs(i - j) * (pi * s[a] + pj * s[b]) / (pi + pj);
          strength_num += (pi + pj) * (i - j) * (i - j);
        }
      }
      double coarseness = ps_sum > 0.0 ? 1.0 / ps_sum : 1e6;
      double contrast = ngp > 1 ? contrast_sum / (static_cast<double>(ngp * (ngp - 1))) *
                                      s_total / nvp
                                : 0.0;
      double busyness = busy_den > 0.0 ? ps_sum / busy_den : 0.0;
      double strength = s_total > 0.0 ? strength_num / s_total : 0.0;
      out.values = {coarseness, contrast, busyness, complexity / nvp, strength};
      return out;
    }
  }
  return out;
}

}  // namespace postseg
