#include "postseg/radiomics.h"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "postseg/csv.h"
#include "postseg/metrics.h"

namespace postseg {
namespace {

struct FamilyNames {
  const char* prefix;
  const std::vector<std::string>& names;
};

std::vector<FamilyNames> sequence_families() {
  return {{"firstorder", firstorder_feature_names()}, {"glcm", glcm_feature_names()},
          {"glrlm", glrlm_feature_names()},           {"glszm", glszm_feature_names()},
          {"gldm", gldm_feature_names()},             {"ngtdm", ngtdm_feature_names()}};
}

}  // namespace

void FeatureVector::append(const std::string& prefix, const FeatureVector& other) {
  for (std::size_t i = 0; i < other.names.size(); ++i) {
    names.push_back(prefix + other.names[i]);
    values.push_back(other.values[i]);
  }
}

double FeatureVector::get(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError("no feature named " + name);
  return values[static_cast<std::size_t>(it - names.begin())];
}

std::vector<std::string> feature_names(const RadiomicsSettings& settings) {
  std::vector<std::string> out;
  for (const auto& n : shape_feature_names()) out.push_back("shape/" + n);
  for (Sequence seq : settings.sequences) {
    std::string s(sequence_suffix(seq));
    for (const auto& fam : sequence_families())
      for (const auto& n : fam.names) out.push_back(s + "/" + fam.prefix + "/" + n);
  }
  return out;
}

FeatureVector extract_case_features(const CaseBundle& bundle,
                                    const RadiomicsSettings& settings) {
  bundle.validate();
  for (Sequence seq : settings.sequences)
    if (!bundle.sequences.count(seq))
      throw ValidationError(bundle.case_id + ": missing sequence " +
                            std::string(sequence_suffix(seq)));

  const Mask wt = region_mask(bundle.prediction, Region::WT);
  if (count_nonzero(wt) < 2) {
    FeatureVector out;
    out.names = feature_names(settings);
    out.values.assign(out.names.size(), 0.0);
    out.degenerate = true;
    return out;
  }

  FeatureVector out;
  out.append("shape/", shape_features(wt, bundle.prediction.spacing()));
  for (Sequence seq : settings.sequences) {
    const ScalarVolume& image = bundle.sequences.at(seq);
    const std::string s = std::string(sequence_suffix(seq)) + "/";
    out.append(s + "firstorder/", firstorder_features(image, wt, settings.bin_width));
    LevelGrid levels = discretize_bin_count(image, wt, settings.bin_count);
    out.append(s + "glcm/", glcm_features(levels, texture_directions()));
    out.append(s + "glrlm/",
               texture_family_features(levels, TextureFamily::GLRLM, settings.connectivity));
    out.append(s + "glszm/",
               texture_family_features(levels, TextureFamily::GLSZM, settings.connectivity));
    out.append(s + "gldm/",
               texture_family_features(levels, TextureFamily::GLDM, settings.connectivity));
    out.append(s + "ngtdm/",
               texture_family_features(levels, TextureFamily::NGTDM, settings.connectivity));
  }
  if (out.values.size() != kShapeFeatureCount + settings.sequences.size() * kPerSequenceFeatureCount)
    throw std::logic_error("feature count mismatch");
  for (double v : out.values)
    if (!std::isfinite(v)) throw ValidationError(bundle.case_id + ": non-finite feature value");
  return out;
}

void save_feature_csv(const FeatureMatrix& features, const std::filesystem::path& path) {
  csv::Table t;
  t.header.push_back("case_id");
  t.header.insert(t.header.end(), features.names.begin(), features.names.end());
  for (std::size_t r = 0; r < features.rows.size(); ++r) {
    std::vector<std::string> row{features.case_ids[r]};
    for (double v : features.rows[r]) row.push_back(csv::format_double(v));
    t.rows.push_back(std::move(row));
  }
  csv::write(t, path);
}

FeatureMatrix load_feature_csv(const std::filesystem::path& path) {
  csv::Table t = csv::read(path);
  if (t.header.empty() || t.header[0] != "case_id")
    throw ValidationError(path.string() + ": first column must be case_id");
  FeatureMatrix m;
  m.names.assign(t.header.begin() + 1, t.header.end());
  for (const auto& r : t.rows) {
    m.case_ids.push_back(r[0]);
    std::vector<double> vals;
    bool all_zero = true;
    for (std::size_t c = 1; c < r.size(); ++c) {
      vals.push_back(csv::parse_double(r[c]));
      all_zero = all_zero && vals.back() == 0.0;
    }
    m.rows.push_back(std::move(vals));
    m.degenerate.push_back(all_zero);
  }
  return m;
}

std::string feature_manifest_json(const RadiomicsSettings& settings) {
  nlohmann::json j;
  j["version"] = "postseg-features/1";
  j["names"] = feature_names(settings);
  j["settings"]["bin_width"] = settings.bin_width;
  j["settings"]["bin_count"] = settings.bin_count;
  j["settings"]["connectivity"] = static_cast<int>(settings.connectivity);
  std::vector<std::string> seqs;
  for (auto s : settings.sequences) seqs.emplace_back(sequence_suffix(s));
  j["settings"]["sequences"] = seqs;
  j["settings"]["region"] = "WT";
  return j.dump(2) + "\n";
}

}  // namespace postseg
