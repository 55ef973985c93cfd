#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

namespace postseg {

/// Row-major case-by-feature matrix.
using FeatureRows = Eigen::MatrixXd;

/// Column means and population standard deviations. Constant columns store
/// std 1, so they transform to 0.
struct StandardizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  Eigen::MatrixXd transform(const Eigen::MatrixXd& rows) const;
  Eigen::VectorXd transform(const Eigen::VectorXd& row) const;
};

StandardizationStats fit_standardizer(const FeatureRows& features);

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // retained rows, orthonormal
  std::vector<double> eigenvalues;  // all, descending (population covariance)
  std::vector<double> explained_variance_ratio;  // all, descending
  std::size_t retained = 0;

  Eigen::MatrixXd project(const Eigen::MatrixXd& rows) const;
  Eigen::VectorXd project(const Eigen::VectorXd& row) const;
  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& projected) const;
};

/// Keeps the fewest leading components whose explained variance reaches
/// `variance_target`.
PcaModel fit_pca(const FeatureRows& standardized, double variance_target = 0.90);

struct KMeansSettings {
  int k_min = 2;
  int k_max = 10;
  int restarts = 10;
  int max_iterations = 300;
  std::uint64_t seed = 0;
  /// 0: silhouette on all points. F > 1: mean silhouette over F training
  /// folds (fold f holds out points with index % F == f).
  int silhouette_folds = 0;
};

struct KMeansRun {
  Eigen::MatrixXd centroids;
  std::vector<int> assignments;
  double inertia = 0.0;
  int iterations = 0;
};

/// One seeded k-means fit: greedy distance-weighted seeding, then Lloyd
/// iterations until assignments stop changing.
KMeansRun kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                 int max_iterations = 300);

struct ClusterModel {
  int k = 0;
  Eigen::MatrixXd centroids;
  double silhouette = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> assignments;
  std::vector<std::pair<int, double>> silhouette_by_k;
};

/// Runs k-means for every k in the range (best of `restarts` by inertia)
/// and keeps the k with the highest mean silhouette; ties go to smaller k.
ClusterModel fit_kmeans(const Eigen::MatrixXd& points, const KMeansSettings& settings);

/// Mean silhouette coefficient; singleton clusters contribute 0. Throws
/// ValidationError unless at least two clusters are nonempty.
double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& assignments);

/// Nearest centroid by Euclidean distance; ties go to the lower id.
int nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::VectorXd& point);

/// Standardize -> project -> nearest centroid.
struct CaseClusterer {
  StandardizationStats standardizer;
  PcaModel pca;
  ClusterModel clusters;

  Eigen::VectorXd embed(const std::vector<double>& features) const;
  int assign(const std::vector<double>& features) const;
};

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows);

}  // namespace postseg
