#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "postseg/metrics.h"
#include "postseg/nifti.h"
#include "postseg/policy.h"
#include "postseg/radiomics.h"
#include "postseg/ranking.h"
#include "postseg/synth.h"

namespace py = pybind11;
using namespace postseg;

namespace {

using SpacingTuple = std::tuple<double, double, double>;

Spacing to_spacing(const SpacingTuple& s) {
  Spacing sp{std::get<0>(s), std::get<1>(s), std::get<2>(s)};
  if (!sp.valid()) throw ConfigError("spacing must be positive");
  return sp;
}

// Arrays are indexed [z, y, x], which matches the x-fastest storage.
template <typename Volume>
Volume from_array(const py::array& input, const Spacing& spacing) {
  using T = typename Volume::value_type;
  auto a = py::array_t<T, py::array::c_style | py::array::forcecast>::ensure(input);
  if (!a || a.ndim() != 3) throw ValidationError("expected a 3-D array indexed [z, y, x]");
  Dims d{a.shape(2), a.shape(1), a.shape(0)};
  Volume v(d, spacing);
  std::memcpy(v.raw().data(), a.data(), v.size() * sizeof(T));
  return v;
}

template <typename Volume>
py::array to_array(const Volume& v) {
  using T = typename Volume::value_type;
  const Dims& d = v.dims();
  py::array_t<T> out({d.nz, d.ny, d.nx});
  std::memcpy(out.mutable_data(), v.raw().data(), v.size() * sizeof(T));
  return std::move(out);
}

LabelMap labels_from(const py::array& a, const Spacing& s) {
  LabelMap m = from_array<LabelMap>(a, s);
  validate_labels(m);
  return m;
}

CaseBundle bundle_from(const py::array& prediction, const std::map<std::string, py::array>& images,
                       const Spacing& s) {
  CaseBundle b;
  b.case_id = "case";
  b.prediction = labels_from(prediction, s);
  for (const auto& [suffix, img] : images)
    b.sequences.emplace(parse_sequence(suffix), from_array<ScalarVolume>(img, s));
  return b;
}

py::dict evaluate(const py::array& prediction, const py::array& ground_truth,
                  const SpacingTuple& spacing, const std::string& task,
                  const std::vector<double>& tolerances, int dilation) {
  const Spacing s = to_spacing(spacing);
  MetricSettings ms;
  ms.regions = task_regions(task);
  ms.tolerances = tolerances;
  ms.lesion.dilation_iters = dilation;
  CaseMetrics m = evaluate_case(labels_from(prediction, s), labels_from(ground_truth, s), ms);
  MetricTable t = make_metric_table({m}, ms);
  py::dict out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) out[py::str(t.columns[c])] = t.rows[0][c];
  return out;
}

std::map<std::string, double> rank(const std::map<std::string, std::vector<std::vector<double>>>& scores) {
  std::vector<Candidate> cands;
  for (const auto& [name, rows] : scores) {
    Candidate c{name, {}};
    for (std::size_t r = 0; r < rows.size(); ++r) c.metrics.case_ids.push_back(std::to_string(r));
    if (!rows.empty())
      for (std::size_t k = 0; k < rows[0].size(); ++k) c.metrics.columns.push_back(std::to_string(k));
    c.metrics.rows = rows;
    cands.push_back(std::move(c));
  }
  RankingResult r = rank_candidates(cands);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < r.candidate_ids.size(); ++i) out[r.candidate_ids[i]] = r.scores[i];
  return out;
}

py::dict synth_case(std::uint64_t seed, std::size_t index, int size) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.dims = {size, size, size};
  CaseInventory inv;
  CaseBundle b = generate_case(cfg, index, &inv);
  py::dict images;
  for (const auto& [seq, img] : b.sequences) images[py::str(std::string(sequence_suffix(seq)))] = to_array(img);
  py::dict out;
  out["case_id"] = b.case_id;
  out["prediction"] = to_array(b.prediction);
  out["ground_truth"] = to_array(*b.ground_truth);
  out["images"] = images;
  out["spacing"] = SpacingTuple{cfg.spacing.dx, cfg.spacing.dy, cfg.spacing.dz};
  out["inventory"] = inventory_to_json({inv}, cfg);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adaptive post-processing of brain tumour segmentations";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  m.def("feature_names", [] { return feature_names(RadiomicsSettings{}); },
        "Names of the 386 case features in extraction order.");

  m.def("load_segmentation", [](const std::filesystem::path& p) {
        LabelMap l = load_label_nifti(p);
        return py::make_tuple(to_array(l), SpacingTuple{l.spacing().dx, l.spacing().dy, l.spacing().dz});
      }, py::arg("path"), "Label map as a uint8 [z, y, x] array plus its spacing.");
  m.def("load_image", [](const std::filesystem::path& p) {
        ScalarVolume v = load_scalar_nifti(p);
        return py::make_tuple(to_array(v), SpacingTuple{v.spacing().dx, v.spacing().dy, v.spacing().dz});
      }, py::arg("path"));
  m.def("save_segmentation", [](const std::filesystem::path& p, const py::array& a, const SpacingTuple& s) {
        save_nifti(labels_from(a, to_spacing(s)), p);
      }, py::arg("path"), py::arg("labels"), py::arg("spacing") = SpacingTuple{1.0, 1.0, 1.0});

  m.def("evaluate", &evaluate, py::arg("prediction"), py::arg("ground_truth"),
        py::arg("spacing") = SpacingTuple{1.0, 1.0, 1.0}, py::arg("task") = "gli-pre",
        py::arg("tolerances") = std::vector<double>{0.5, 1.0}, py::arg("dilation") = 3,
        "Lesion-wise Dice and NSD per region, keyed by metric column name.");
  m.def("rank", &rank, py::arg("candidates"),
        "Ranking scores for {name: rows of per-case metrics}; lower is better.");

  m.def("extract_features", [](const py::array& prediction, const std::map<std::string, py::array>& images,
                               const SpacingTuple& spacing) {
        FeatureVector f = extract_case_features(bundle_from(prediction, images, to_spacing(spacing)));
        return py::make_tuple(f.values, f.degenerate);
      }, py::arg("prediction"), py::arg("images"), py::arg("spacing") = SpacingTuple{1.0, 1.0, 1.0},
      "Feature values and the degenerate flag; images are keyed t1n, t1c, t2w, t2f.");

  m.def("generate_case", &synth_case, py::arg("seed"), py::arg("index"), py::arg("size") = 64,
        "One synthetic case: prediction, ground truth, images, spacing, inventory JSON.");

  py::class_<PostProcessPolicy>(m, "Policy")
      .def_static("load", &load_policy, py::arg("path"))
      .def_static("from_json", &policy_from_json, py::arg("text"))
      .def_static("identity", [](const std::string& task) { return identity_policy(task, RadiomicsSettings{}); },
                  py::arg("task") = "gli-pre")
      .def("save", [](const PostProcessPolicy& p, const std::filesystem::path& path) { save_policy(p, path); })
      .def("to_json", &policy_to_json)
      .def_property_readonly("cluster_count", &PostProcessPolicy::cluster_count)
      .def_property_readonly("task", [](const PostProcessPolicy& p) { return p.task; })
      .def("apply", [](const PostProcessPolicy& p, const py::array& prediction,
                       const std::map<std::string, py::array>& images, const SpacingTuple& spacing) {
             return to_array(apply_policy(p, bundle_from(prediction, images, to_spacing(spacing))));
           }, py::arg("prediction"), py::arg("images") = std::map<std::string, py::array>{},
           py::arg("spacing") = SpacingTuple{1.0, 1.0, 1.0});
}
