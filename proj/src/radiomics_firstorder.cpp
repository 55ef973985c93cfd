#include <algorithm>
#include <cmath>
#include <map>

#include "postseg/radiomics.h"

namespace postseg {
namespace {

// Linear interpolation between closest ranks (numpy's default).
double percentile(const std::vector<double>& sorted, double p) {
  double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace

const std::vector<std::string>& firstorder_feature_names() {
  static const std::vector<std::string> names{
      "Energy",       "TotalEnergy", "Entropy",
      "Minimum",      "10Percentile", "90Percentile",
      "Maximum",      "Mean",        "Median",
      "InterquartileRange", "Range", "MeanAbsoluteDeviation",
      "RobustMeanAbsoluteDeviation", "RootMeanSquared", "Skewness",
      "Kurtosis",     "Variance",    "Uniformity",
  };
  return names;
}

FeatureVector firstorder_features(const ScalarVolume& image, const Mask& mask,
                                  double bin_width) {
  if (!image.geometry().congruent(mask.geometry()))
    throw ValidationError("firstorder_features: image and mask grids differ");
  if (!(bin_width > 0.0)) throw ConfigError("bin width must be positive");
  FeatureVector out;
  out.names = firstorder_feature_names();
  out.values.assign(out.names.size(), 0.0);

  std::vector<double> x;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) x.push_back(image[i]);
  if (x.empty()) return out;
  const auto n = static_cast<double>(x.size());

  double energy = 0.0, sum = 0.0;
  for (double v : x) {
    energy += v * v;
    sum += v;
  }
  const double mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0;
  for (double v : x) {
    double c = v - mean;
    m2 += c * c;
    m3 += c * c * c;
    m4 += c * c * c * c;
    mad += std::fabs(c);
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  mad /= n;

  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const double p10 = percentile(sorted, 10.0);
  const double p90 = percentile(sorted, 90.0);

  double robust_sum = 0.0;
  std::size_t robust_n = 0;
  for (double v : x)
    if (v >= p10 && v <= p90) {
      robust_sum += v;
      ++robust_n;
    }
  double robust_mean = robust_sum / static_cast<double>(robust_n);
  double rmad = 0.0;
  for (double v : x)
    if (v >= p10 && v <= p90) rmad += std::fabs(v - robust_mean);
  rmad /= static_cast<double>(robust_n);

  std::map<long long, double> hist;
  const double low_edge = std::floor(sorted.front() / bin_width);
  for (double v : x) hist[static_cast<long long>(std::floor(v / bin_width) - low_edge)] += 1.0;
  double entropy = 0.0, uniformity = 0.0;
  for (const auto& [bin, c] : hist) {
    double p = c / n;
    entropy -= p * std::log2(p);
    uniformity += p * p;
  }

  auto& f = out.values;
  f[0] = energy;
  f[1] = energy * image.spacing().voxel_volume();
  f[2] = entropy;
  f[3] = sorted.front();
  f[4] = p10;
  f[5] = p90;
  f[6] = sorted.back();
  f[7] = mean;
  f[8] = percentile(sorted, 50.0);
  f[9] = percentile(sorted, 75.0) - percentile(sorted, 25.0);
  f[10] = sorted.back() - sorted.front();
  f[11] = mad;
  f[12] = rmad;
  f[13] = std::sqrt(energy / n);
  f[14] = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  f[15] = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
  f[16] = m2;
  f[17] = uniformity;
  return out;
}

}  // namespace postseg
