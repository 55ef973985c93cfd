#include "postseg/clustering.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

#include "postseg/errors.h"
#include "postseg/random.h"

namespace postseg {
namespace {

double squared_distance(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b,
                        Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

std::size_t distinct_rows(const Eigen::MatrixXd& points) {
  std::set<std::vector<double>> seen;
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    std::vector<double> row(points.cols());
    for (Eigen::Index c = 0; c < points.cols(); ++c) row[c] = points(r, c);
    seen.insert(std::move(row));
  }
  return seen.size();
}

Eigen::MatrixXd seed_centroids(const Eigen::MatrixXd& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centroids(k, points.cols());
  auto first = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
  centroids.row(0) = points.row(first);
  std::vector<double> closest(n);
  for (Eigen::Index i = 0; i < n; ++i) closest[i] = squared_distance(points, i, centroids, 0);
  double potential = std::accumulate(closest.begin(), closest.end(), 0.0);
  const int trials = 2 + static_cast<int>(std::floor(std::log(static_cast<double>(k))));

  std::vector<double> candidate_dist(n);
  for (int c = 1; c < k; ++c) {
    Eigen::Index best = -1;
    double best_potential = std::numeric_limits<double>::infinity();
    std::vector<double> best_dist;
    for (int t = 0; t < trials; ++t) {
      Eigen::Index cand = n - 1;
      if (potential > 0.0) {
        double r = rng.uniform() * potential;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          acc += closest[i];
          if (acc > r) {
            cand = i;
            break;
          }
        }
      } else {
        cand = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
      }
      double pot = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        candidate_dist[i] = std::min(closest[i], (points.row(i) - points.row(cand)).squaredNorm());
        pot += candidate_dist[i];
      }
      if (pot < best_potential) {
        best_potential = pot;
        best = cand;
        best_dist = candidate_dist;
      }
    }
    centroids.row(c) = points.row(best);
    closest = std::move(best_dist);
    potential = best_potential;
  }
  return centroids;
}

double assign_all(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                  std::vector<int>& assignments) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      double d = squared_distance(points, i, centroids, c);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    assignments[i] = best;
    inertia += best_d;
  }
  return inertia;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

KMeansRun best_of_restarts(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                           const KMeansSettings& settings) {
  KMeansRun best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, settings.restarts); ++r) {
    KMeansRun run = kmeans(points, k, mix_seed(seed, static_cast<std::uint64_t>(r)),
                           settings.max_iterations);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

}  // namespace

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size())
      throw ValidationError("feature rows have inconsistent lengths");
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

StandardizationStats fit_standardizer(const FeatureRows& features) {
  if (features.rows() < 2) throw ValidationError("standardization needs at least two cases");
  if (!features.allFinite()) throw ValidationError("feature matrix contains non-finite values");
  StandardizationStats s;
  s.mean = features.colwise().mean().transpose();
  s.stddev.resize(features.cols());
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    double var = (features.col(c).array() - s.mean[c]).square().mean();
    double sd = std::sqrt(var);
    s.stddev[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd StandardizationStats::transform(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != mean.size()) throw ValidationError("feature width does not match standardizer");
  return (rows.rowwise() - mean.transpose()).array().rowwise() / stddev.transpose().array();
}

Eigen::VectorXd StandardizationStats::transform(const Eigen::VectorXd& row) const {
  if (row.size() != mean.size()) throw ValidationError("feature width does not match standardizer");
  return (row - mean).array() / stddev.array();
}

PcaModel fit_pca(const FeatureRows& x, double variance_target) {
  if (!(variance_target > 0.0 && variance_target <= 1.0))
    throw ConfigError("PCA variance target must be in (0, 1]");
  if (x.rows() < 2) throw ValidationError("PCA needs at least two rows");
  PcaModel pca;
  pca.mean = x.colwise().mean().transpose();
  Eigen::MatrixXd centered = x.rowwise() - pca.mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw ValidationError("PCA eigen-decomposition failed");

  const Eigen::Index d = x.cols();
  std::vector<double> values(d);
  double total = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    values[i] = std::max(0.0, eig.eigenvalues()[d - 1 - i]);
    total += values[i];
  }
  if (!(total > 0.0)) throw ValidationError("PCA input has zero variance");
  pca.eigenvalues = values;
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    pca.explained_variance_ratio.push_back(values[i] / total);
    cumulative += values[i] / total;
    if (pca.retained == 0 && cumulative >= variance_target) pca.retained = i + 1;
  }
  if (pca.retained == 0) pca.retained = static_cast<std::size_t>(d);

  pca.components.resize(static_cast<Eigen::Index>(pca.retained), d);
  for (std::size_t i = 0; i < pca.retained; ++i) {
    Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - static_cast<Eigen::Index>(i));
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    pca.components.row(static_cast<Eigen::Index>(i)) = v.transpose();
  }
  return pca;
}

Eigen::MatrixXd PcaModel::project(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != mean.size()) throw ValidationError("feature width does not match PCA model");
  return (rows.rowwise() - mean.transpose()) * components.transpose();
}

Eigen::VectorXd PcaModel::project(const Eigen::VectorXd& row) const {
  if (row.size() != mean.size()) throw ValidationError("feature width does not match PCA model");
  return components * (row - mean);
}

Eigen::MatrixXd PcaModel::reconstruct(const Eigen::MatrixXd& projected) const {
  return (projected * components).rowwise() + mean.transpose();
}

KMeansRun kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iterations) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k > n) throw ValidationError("k-means: k must be between 1 and the number of points");
  Rng rng(seed);
  KMeansRun run;
  run.centroids = seed_centroids(points, k, rng);
  run.assignments.assign(n, -1);
  std::vector<int> previous;
  double last_inertia = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < std::max(1, max_iterations); ++iter) {
    previous = run.assignments;
    run.inertia = assign_all(points, run.centroids, run.assignments);
    run.iterations = iter + 1;
    if (run.inertia > last_inertia * (1.0 + 1e-12) + 1e-12)
      throw std::logic_error("k-means inertia increased");
    last_inertia = run.inertia;
    if (run.assignments == previous) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<Eigen::Index> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(run.assignments[i]) += points.row(i);
      ++counts[run.assignments[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        run.centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move it onto the point farthest from its centroid
      // among clusters that can spare a member.
      Eigen::Index far = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (counts[run.assignments[i]] < 2) continue;
        double dd = squared_distance(points, i, run.centroids, run.assignments[i]);
        if (dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      if (far >= 0) {
        --counts[run.assignments[far]];
        run.assignments[far] = c;
        counts[c] = 1;
        run.centroids.row(c) = points.row(far);
      }
      last_inertia = std::numeric_limits<double>::infinity();
    }
  }
  run.inertia = assign_all(points, run.centroids, run.assignments);
  return run;
}

double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& assignments) {
  const Eigen::Index n = points.rows();
  if (static_cast<Eigen::Index>(assignments.size()) != n)
    throw ValidationError("silhouette: assignment count mismatch");
  int k = 0;
  for (int a : assignments) k = std::max(k, a + 1);
  std::vector<Eigen::Index> sizes(k, 0);
  for (int a : assignments) ++sizes[a];
  int nonempty = 0;
  for (auto s : sizes) nonempty += s > 0;
  if (nonempty < 2) throw ValidationError("silhouette needs at least two nonempty clusters");

  double total = 0.0;
  std::vector<double> sum_to(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(sum_to.begin(), sum_to.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) sum_to[assignments[j]] += (points.row(i) - points.row(j)).norm();
    const int own = assignments[i];
    if (sizes[own] < 2) continue;
    double a = sum_to[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c)
      if (c != own && sizes[c] > 0) b = std::min(b, sum_to[c] / static_cast<double>(sizes[c]));
    double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

ClusterModel fit_kmeans(const Eigen::MatrixXd& points, const KMeansSettings& settings) {
  if (settings.k_min < 2 || settings.k_max < settings.k_min)
    throw ConfigError("k range must satisfy 2 <= k_min <= k_max");
  if (settings.silhouette_folds == 1 || settings.silhouette_folds < 0)
    throw ConfigError("silhouette_folds must be 0 or at least 2");
  const auto n = static_cast<int>(points.rows());
  const int k_hi = std::min({settings.k_max, n - 1, static_cast<int>(distinct_rows(points))});
  if (k_hi < settings.k_min)
    throw ValidationError("too few distinct cases to cluster with k >= " +
                          std::to_string(settings.k_min));

  ClusterModel best;
  best.silhouette = -std::numeric_limits<double>::infinity();
  for (int k = settings.k_min; k <= k_hi; ++k) {
    const std::uint64_t kseed = mix_seed(settings.seed, static_cast<std::uint64_t>(k));
    KMeansRun run = best_of_restarts(points, k, kseed, settings);
    double score = 0.0;
    if (settings.silhouette_folds >= 2) {
      int used = 0;
      for (int f = 0; f < settings.silhouette_folds; ++f) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < points.rows(); ++i)
          if (i % settings.silhouette_folds != f) rows.push_back(i);
        Eigen::MatrixXd sub = select_rows(points, rows);
        if (static_cast<int>(rows.size()) <= k || static_cast<int>(distinct_rows(sub)) < k) continue;
        KMeansRun fold = best_of_restarts(sub, k, mix_seed(kseed, 1000 + f), settings);
        score += silhouette(sub, fold.assignments);
        ++used;
      }
      score = used > 0 ? score / used : -1.0;
    } else {
      score = silhouette(points, run.assignments);
    }
    best.silhouette_by_k.emplace_back(k, score);
    if (score > best.silhouette) {
      best.k = k;
      best.silhouette = score;
      best.centroids = run.centroids;
      best.assignments = run.assignments;
      best.seed = kseed;
    }
  }
  return best;
}

int nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::VectorXd& point) {
  if (centroids.rows() == 0) throw ValidationError("no centroids");
  if (centroids.cols() != point.size()) throw ValidationError("embedding width does not match centroids");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    double d = (centroids.row(c).transpose() - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

Eigen::VectorXd CaseClusterer::embed(const std::vector<double>& features) const {
  if (static_cast<Eigen::Index>(features.size()) != standardizer.mean.size())
    throw ValidationError("feature vector has " + std::to_string(features.size()) +
                          " values, model expects " + std::to_string(standardizer.mean.size()));
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(features.data(),
                                                        static_cast<Eigen::Index>(features.size()));
  if (!v.allFinite()) throw ValidationError("feature vector contains non-finite values");
  return pca.project(standardizer.transform(v));
}

int CaseClusterer::assign(const std::vector<double>& features) const {
  return nearest_centroid(clusters.centroids, embed(features));
}

}  // namespace postseg
