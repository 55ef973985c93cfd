#include <json.hpp>

#include <fstream>
#include <sstream>

#include "postseg/csv.h"
#include "postseg/policy.h"

namespace postseg {
namespace {

using nlohmann::json;

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Eigen::VectorXd(m.row(r).transpose())));
  return out;
}

Eigen::VectorXd vector_from(const json& j) {
  if (!j.is_array()) throw ValidationError("policy: expected a numeric array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index cols) {
  if (!j.is_array()) throw ValidationError("policy: expected a matrix");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    Eigen::VectorXd row = vector_from(j[r]);
    if (row.size() != cols) throw ValidationError("policy: ragged matrix");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

json settings_json(const RadiomicsSettings& s) {
  json j;
  j["bin_width"] = s.bin_width;
  j["bin_count"] = s.bin_count;
  j["connectivity"] = static_cast<int>(s.connectivity);
  std::vector<std::string> seqs;
  for (auto q : s.sequences) seqs.emplace_back(sequence_suffix(q));
  j["sequences"] = seqs;
  return j;
}

RadiomicsSettings settings_from(const json& j) {
  RadiomicsSettings s;
  s.bin_width = j.at("bin_width").get<double>();
  s.bin_count = j.at("bin_count").get<int>();
  s.connectivity = parse_connectivity(j.at("connectivity").get<int>());
  s.sequences.clear();
  for (const auto& q : j.at("sequences")) s.sequences.push_back(parse_sequence(q.get<std::string>()));
  return s;
}

json metrics_json(const MetricSettings& m) {
  json j;
  std::vector<std::string> regions;
  for (auto r : m.regions) regions.emplace_back(region_name(r));
  j["regions"] = regions;
  j["tolerances_mm"] = m.tolerances;
  j["dilation_iters"] = m.lesion.dilation_iters;
  j["connectivity"] = static_cast<int>(m.lesion.connectivity);
  return j;
}

MetricSettings metrics_from(const json& j) {
  MetricSettings m;
  m.regions.clear();
  for (const auto& r : j.at("regions")) m.regions.push_back(parse_region(r.get<std::string>()));
  m.tolerances = j.at("tolerances_mm").get<std::vector<double>>();
  m.lesion.dilation_iters = j.at("dilation_iters").get<int>();
  m.lesion.connectivity = parse_connectivity(j.at("connectivity").get<int>());
  return m;
}

}  // namespace

std::string policy_to_json(const PostProcessPolicy& p) {
  p.validate();
  json j;
  j["version"] = p.version;
  j["task"] = p.task;
  j["feature_manifest"]["names"] = p.feature_names;
  j["feature_manifest"]["settings"] = settings_json(p.radiomics);

  const auto& cl = p.clusterer;
  j["standardizer"]["mean"] = to_json(cl.standardizer.mean);
  j["standardizer"]["stddev"] = to_json(cl.standardizer.stddev);
  j["pca"]["mean"] = to_json(cl.pca.mean);
  j["pca"]["components"] = to_json(cl.pca.components);
  j["pca"]["eigenvalues"] = cl.pca.eigenvalues;
  j["pca"]["explained_variance_ratio"] = cl.pca.explained_variance_ratio;
  j["pca"]["retained"] = cl.pca.retained;
  j["kmeans"]["k"] = cl.clusters.k;
  j["kmeans"]["centroids"] = to_json(cl.clusters.centroids);
  j["kmeans"]["silhouette"] = cl.clusters.silhouette;
  j["kmeans"]["seed"] = cl.clusters.seed;
  j["kmeans"]["assignments"] = cl.clusters.assignments;
  json by_k = json::array();
  for (const auto& [k, s] : cl.clusters.silhouette_by_k) by_k.push_back({{"k", k}, {"silhouette", s}});
  j["kmeans"]["silhouette_by_k"] = by_k;

  json pcc = json::array();
  for (std::size_t c = 0; c < p.thresholds.by_cluster.size(); ++c) {
    const auto& t = p.thresholds.by_cluster[c];
    pcc.push_back({{"cluster", c}, {"min_size", std::vector<std::size_t>(t.begin(), t.end())}});
  }
  j["pcc_thresholds"] = pcc;
  json rules = json::array();
  for (const auto& r : p.rules)
    rules.push_back({{"cluster", r.cluster}, {"src", r.src}, {"dst", r.dst}, {"cutoff", r.cutoff}});
  j["relabel_rules"] = rules;
  j["metric_config"] = metrics_json(p.metrics);
  return j.dump(2) + "\n";
}

PostProcessPolicy policy_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("policy: malformed JSON: ") + e.what());
  }
  PostProcessPolicy p;
  try {
    p.version = j.at("version").get<std::string>();
    if (p.version != kPolicyVersion) throw ValidationError("unsupported policy version: " + p.version);
    p.task = j.at("task").get<std::string>();
    p.feature_names = j.at("feature_manifest").at("names").get<std::vector<std::string>>();
    p.radiomics = settings_from(j.at("feature_manifest").at("settings"));

    auto& cl = p.clusterer;
    cl.standardizer.mean = vector_from(j.at("standardizer").at("mean"));
    cl.standardizer.stddev = vector_from(j.at("standardizer").at("stddev"));
    const auto& pca = j.at("pca");
    cl.pca.mean = vector_from(pca.at("mean"));
    cl.pca.eigenvalues = pca.at("eigenvalues").get<std::vector<double>>();
    cl.pca.explained_variance_ratio = pca.at("explained_variance_ratio").get<std::vector<double>>();
    cl.pca.retained = pca.at("retained").get<std::size_t>();
    cl.pca.components = matrix_from(pca.at("components"), cl.pca.mean.size());
    const auto& km = j.at("kmeans");
    cl.clusters.k = km.at("k").get<int>();
    cl.clusters.centroids = matrix_from(km.at("centroids"), static_cast<Eigen::Index>(cl.pca.retained));
    cl.clusters.silhouette = km.at("silhouette").get<double>();
    cl.clusters.seed = km.at("seed").get<std::uint64_t>();
    cl.clusters.assignments = km.at("assignments").get<std::vector<int>>();
    for (const auto& e : km.at("silhouette_by_k"))
      cl.clusters.silhouette_by_k.emplace_back(e.at("k").get<int>(), e.at("silhouette").get<double>());

    for (const auto& e : j.at("pcc_thresholds")) {
      auto sizes = e.at("min_size").get<std::vector<std::size_t>>();
      if (sizes.size() != kTumorLabels) throw ValidationError("policy: min_size needs 4 entries");
      if (e.at("cluster").get<std::size_t>() != p.thresholds.by_cluster.size())
        throw ValidationError("policy: pcc_thresholds must list clusters in order");
      p.thresholds.by_cluster.push_back({sizes[0], sizes[1], sizes[2], sizes[3]});
    }
    for (const auto& e : j.at("relabel_rules"))
      p.rules.push_back({e.at("cluster").get<int>(), e.at("src").get<std::uint8_t>(),
                         e.at("dst").get<std::uint8_t>(), e.at("cutoff").get<double>()});
    p.metrics = metrics_from(j.at("metric_config"));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("policy: schema error: ") + e.what());
  }
  // An identity policy has no fitted model; an empty matrix parses as 0 x n.
  if (p.cluster_count() <= 1) p.clusterer.clusters.centroids.resize(0, 0);
  p.validate();
  return p;
}

void save_policy(const PostProcessPolicy& policy, const std::filesystem::path& path) {
  std::string text = policy_to_json(policy);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

PostProcessPolicy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read policy file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return policy_from_json(ss.str());
}

void save_confusion_csv(const ConfusionMatrix& cm, const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"gt_label", "pred_0", "pred_1", "pred_2", "pred_3", "pred_4"};
  for (std::uint8_t g = 0; g <= kMaxLabel; ++g) {
    std::vector<std::string> row{std::to_string(g)};
    for (std::uint8_t p = 0; p <= kMaxLabel; ++p) row.push_back(std::to_string(cm.at(g, p)));
    t.rows.push_back(std::move(row));
  }
  csv::write(t, path);
}

}  // namespace postseg
