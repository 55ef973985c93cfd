#include <doctest.h>

#include <fstream>

#include "fixtures.h"
#include "postseg/policy.h"
#include "postseg/synth.h"

using namespace postseg;

namespace {

// Oedema shell around a necrotic block, with a 4x4 enhancing column of
// `et_height` slices at the centre.
LabelMap shell_case(Dims d, int et_height) {
  LabelMap seg(d);
  fixtures::paint_box(seg, {4, 4, 4}, {23, 23, 13}, 2);
  fixtures::paint_box(seg, {8, 8, 6}, {19, 19, 11}, 1);
  if (et_height > 0) fixtures::paint_box(seg, {12, 12, 6}, {15, 15, 5 + et_height}, 3);
  return seg;
}

void add_island(LabelMap& seg, std::int64_t x0, std::uint8_t label, int size) {
  for (int i = 0; i < size; ++i) seg.at(x0 + i, 28, 20) = label;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

const Dims kDims{32, 32, 24};

}  // namespace

TEST_CASE("confusion matrix counts") {
  LabelMap gt(Dims{4, 4, 1}), pred(Dims{4, 4, 1});
  for (std::size_t i = 0; i < 10; ++i) {
    gt[i] = 1;
    pred[i] = 3;
  }
  gt[10] = 2;
  pred[10] = 2;
  ConfusionMatrix cm = confusion_matrix({pred}, {gt});
  CHECK(cm.at(1, 3) == 10);
  CHECK(cm.at(2, 2) == 1);
  CHECK(cm.at(0, 0) == 5);

  Rng rng(4);
  std::vector<LabelMap> ps, gs;
  std::array<std::array<std::uint64_t, 5>, 5> tally{};
  for (int c = 0; c < 3; ++c) {
    LabelMap g(Dims{5, 5, 5}), p(Dims{5, 5, 5});
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] = static_cast<std::uint8_t>(rng.uniform_int(0, 4));
      p[i] = static_cast<std::uint8_t>(rng.uniform_int(0, 4));
      ++tally[g[i]][p[i]];
    }
    ps.push_back(p);
    gs.push_back(g);
  }
  CHECK(confusion_matrix(ps, gs).counts == tally);
}

TEST_CASE("top confusions") {
  ConfusionMatrix cm;
  cm.counts[3][1] = 50;
  cm.counts[1][3] = 7;
  cm.counts[2][2] = 1000;
  cm.counts[0][2] = 900;  // background is never a candidate
  auto top = top_confusions(cm, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0] == LabelPair{1, 3});
  CHECK(top[1] == LabelPair{3, 1});

  ConfusionMatrix diag;
  for (int l = 0; l < 5; ++l) diag.counts[l][l] = 10;
  CHECK(top_confusions(diag, 2).empty());

  ConfusionMatrix tie;
  tie.counts[2][1] = 5;
  tie.counts[1][2] = 5;
  tie.counts[4][3] = 5;
  auto t = top_confusions(tie, 3);
  REQUIRE(t.size() == 3);
  CHECK(t[0] == LabelPair{2, 1});
  CHECK(t[1] == LabelPair{1, 2});
  CHECK(t[2] == LabelPair{3, 4});
  CHECK_THROWS_AS(top_confusions(tie, 0), ConfigError);
}

TEST_CASE("component threshold fitting") {
  std::vector<LabeledCase> cases;
  for (int c = 0; c < 3; ++c) {
    LabeledCase lc;
    lc.case_id = "c" + std::to_string(c);
    lc.ground_truth = shell_case(kDims, 4);
    lc.prediction = lc.ground_truth;
    add_island(lc.prediction, 4 + c, 2, 5);
    cases.push_back(lc);
  }
  std::vector<int> clusters(3, 0);
  FitSettings fs;
  fs.pcc_grid = {0, 10};
  CaseEvaluator ev(cases, MetricSettings{});
  std::vector<ThresholdSearch> searches;
  auto th = fit_component_thresholds(cases, clusters, 1, fs, ev, &searches);
  CHECK(th.get(0, 2) == 10);
  CHECK(th.get(0, 1) == 0);
  CHECK(th.get(0, 3) == 0);
  CHECK(th.get(0, 4) == 0);
  CHECK(searches.size() == 4);

  std::vector<LabeledCase> clean = cases;
  for (auto& c : clean) c.prediction = c.ground_truth;
  CaseEvaluator ev2(clean, MetricSettings{});
  auto none = fit_component_thresholds(clean, clusters, 1, fs, ev2);
  for (std::uint8_t l = 1; l <= 4; ++l) CHECK(none.get(0, l) == 0);

  fs.pcc_grid = {0};
  auto zero = fit_component_thresholds(cases, clusters, 1, fs, ev);
  for (std::uint8_t l = 1; l <= 4; ++l) CHECK(zero.get(0, l) == 0);

  fs.pcc_grid = {10, 20};
  CHECK_THROWS_AS(fit_component_thresholds(cases, clusters, 1, fs, ev), ConfigError);
}

TEST_CASE("relabel rule fitting recovers a small-core swap") {
  // Small cores (ratio well below 2%) were really necrosis; large cores are right.
  std::vector<LabeledCase> cases;
  std::vector<double> small_ratios, large_ratios;
  for (int c = 0; c < 6; ++c) {
    LabeledCase lc;
    lc.case_id = "c" + std::to_string(c);
    const bool small = c % 2 == 0;
    LabelMap pred = shell_case(kDims, small ? 1 + c / 2 : 6);
    lc.prediction = pred;
    lc.ground_truth = pred;
    if (small)
      for (auto& v : lc.ground_truth.values())
        if (v == 3) v = 1;
    (small ? small_ratios : large_ratios).push_back(label_ratio(pred, 3));
    cases.push_back(lc);
  }
  const double small_max = *std::max_element(small_ratios.begin(), small_ratios.end());
  const double large_min = *std::min_element(large_ratios.begin(), large_ratios.end());
  REQUIRE(small_max < 0.02);
  REQUIRE(large_min > 0.02);

  std::vector<int> clusters(cases.size(), 0);
  ConfusionMatrix cm;
  for (const auto& c : cases) cm.add(c.prediction, c.ground_truth);
  auto candidates = top_confusions(cm, 2);
  REQUIRE(!candidates.empty());
  CHECK(candidates[0] == LabelPair{3, 1});

  FitSettings fs;
  CaseEvaluator ev(cases, MetricSettings{});
  std::vector<CutoffSearch> searches;
  auto rules = fit_relabel_rules(cases, clusters, 1, candidates, fs, ev, &searches);
  REQUIRE(rules.size() == 1);
  CHECK(rules[0].src == 3);
  CHECK(rules[0].dst == 1);
  CHECK(rules[0].cutoff > small_max);
  CHECK(rules[0].cutoff <= large_min);
  for (const auto& c : cases) {
    LabelMap out = apply_relabel_rules(c.prediction, rules);
    CHECK(out == c.ground_truth);
  }

  fs.cutoff_grid = {0.0};
  CHECK(fit_relabel_rules(cases, clusters, 1, candidates, fs, ev).empty());

  std::vector<LabeledCase> correct = cases;
  for (auto& c : correct) c.prediction = c.ground_truth;
  CaseEvaluator ev2(correct, MetricSettings{});
  FitSettings defaults;
  CHECK(fit_relabel_rules(correct, clusters, 1, {LabelPair{3, 1}}, defaults, ev2).empty());
}

TEST_CASE("applying a policy: worked examples") {
  LabelMap seg = shell_case(kDims, 4);
  add_island(seg, 4, 2, 5);
  PostProcessPolicy id = identity_policy("gli-pre", RadiomicsSettings{});
  CHECK(apply_policy_to_cluster(id, seg, 0) == seg);

  PostProcessPolicy p = id;
  p.thresholds.by_cluster[0] = {0, 10, 0, 0};
  ApplyTrace trace;
  LabelMap out = apply_policy_to_cluster(p, seg, 0, &trace);
  CHECK(count_label(seg, 2) - count_label(out, 2) == 5);
  CHECK(trace.removed_voxels == std::array<std::size_t, 4>{0, 5, 0, 0});
  CHECK(out == shell_case(kDims, 4));

  // ET is 1% of WT; a 2% cutoff turns it into necrosis without touching WT.
  LabelMap small(Dims{10, 10, 10});
  fixtures::paint_box(small, {0, 0, 0}, {9, 9, 9}, 2);
  for (std::int64_t x = 0; x < 10; ++x) small.at(x, 5, 5) = 3;
  CHECK(label_ratio(small, 3) == 0.01);
  p.rules = {RelabelRule{0, 3, 1, 0.02}};
  out = apply_policy_to_cluster(p, small, 0, &trace);
  CHECK(count_label(out, 3) == 0);
  CHECK(count_label(out, 1) == 10);
  CHECK(region_mask(out, Region::WT) == region_mask(small, Region::WT));
  CHECK(trace.fired.size() == 1);

  p.rules = {RelabelRule{0, 3, 1, 0.01}};  // strict comparison
  CHECK(apply_policy_to_cluster(p, small, 0) == small);

  CHECK(label_ratio(LabelMap(Dims{2, 2, 2}), 3) == -1.0);
  CHECK_THROWS_AS(apply_policy_to_cluster(p, small, 1), ValidationError);
}

TEST_CASE("relabel rule validation") {
  CHECK_NOTHROW((RelabelRule{0, 3, 1, 0.1}.validate()));
  CHECK_THROWS_AS((RelabelRule{0, 3, 3, 0.1}.validate()), ValidationError);
  CHECK_THROWS_AS((RelabelRule{0, 0, 1, 0.1}.validate()), ValidationError);
  CHECK_THROWS_AS((RelabelRule{0, 3, 5, 0.1}.validate()), ValidationError);
  CHECK_THROWS_AS((RelabelRule{0, 3, 1, 1.5}.validate()), ValidationError);
  CHECK_THROWS_AS((RelabelRule{-1, 3, 1, 0.1}.validate()), ValidationError);
}

TEST_CASE("policy application properties on random segmentations") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Dims d{14, 14, 14};
    LabelMap seg(d);
    Mask blobs = fixtures::random_blobs(rng, d);
    for (std::size_t i = 0; i < seg.size(); ++i)
      if (blobs[i]) seg[i] = static_cast<std::uint8_t>(rng.uniform_int(1, 3));
    if (rng.uniform() < 0.3)
      for (std::size_t i = 0; i < seg.size(); ++i)
        if (!blobs[i] && rng.uniform() < 0.01) seg[i] = 4;

    PostProcessPolicy p = identity_policy("gli-post", RadiomicsSettings{});
    p.thresholds.by_cluster[0] = {static_cast<std::size_t>(rng.uniform_int(0, 20)),
                                  static_cast<std::size_t>(rng.uniform_int(0, 20)),
                                  static_cast<std::size_t>(rng.uniform_int(0, 20)),
                                  static_cast<std::size_t>(rng.uniform_int(0, 5))};
    LabelMap removed = apply_component_thresholds(seg, p.thresholds.by_cluster[0]);
    // Removal only clears voxels.
    for (std::size_t i = 0; i < seg.size(); ++i) CHECK((removed[i] == seg[i] || removed[i] == 0));
    CHECK(apply_component_thresholds(removed, p.thresholds.by_cluster[0]) == removed);

    // Relabelling within the tumour leaves the whole-tumour mask alone.
    std::uint8_t src = static_cast<std::uint8_t>(rng.uniform_int(1, 3));
    std::uint8_t dst = static_cast<std::uint8_t>(src % 3 + 1);
    std::vector<RelabelRule> rules{{0, src, dst, rng.uniform(0.0, 1.0)}};
    LabelMap relabelled = apply_relabel_rules(seg, rules);
    CHECK(region_mask(relabelled, Region::WT) == region_mask(seg, Region::WT));

    p.rules = rules;
    LabelMap out = apply_policy_to_cluster(p, seg, 0);
    Mask wt_in = region_mask(seg, Region::WT), wt_out = region_mask(out, Region::WT);
    for (std::size_t i = 0; i < seg.size(); ++i)
      if (wt_out[i]) CHECK(wt_in[i]);
  }
}

TEST_CASE("policy files round trip") {
  fixtures::TempDir tmp("policy");
  PostProcessPolicy p = identity_policy("gli-pre", RadiomicsSettings{});
  p.thresholds.by_cluster[0] = {3, 10, 0, 7};
  p.rules = {RelabelRule{0, 3, 1, 0.025}, RelabelRule{0, 2, 1, 0.005}};
  save_policy(p, tmp.path() / "a.json");
  PostProcessPolicy back = load_policy(tmp.path() / "a.json");
  save_policy(back, tmp.path() / "b.json");
  CHECK(read_file(tmp.path() / "a.json") == read_file(tmp.path() / "b.json"));
  CHECK(back.thresholds.by_cluster == p.thresholds.by_cluster);
  CHECK(back.rules == p.rules);

  std::string text = policy_to_json(p);
  auto pos = text.find(kPolicyVersion);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, std::string(kPolicyVersion).size(), "postseg-policy/99");
  CHECK_THROWS_AS(policy_from_json(text), ValidationError);
  CHECK_THROWS_AS(policy_from_json("{\"version\": 1"), ValidationError);
  CHECK_THROWS_AS(load_policy(tmp.path() / "missing.json"), IoError);
}

TEST_CASE("fitted policy removes islands and survives a round trip") {
  SynthConfig cfg;
  cfg.seed = 5;
  cfg.dims = Dims{40, 40, 40};
  cfg.wt_radius = {7.0, 8.0};
  cfg.compact_probability = 0.0;
  cfg.islands = {{2, {1, 2}, {4, 6}}};
  cfg.island_margin = 5;
  cfg.swap.enabled = false;

  std::vector<LabeledCase> cases;
  std::vector<CaseBundle> bundles;
  std::vector<CaseInventory> inventories;
  FeatureMatrix fm;
  RadiomicsSettings rs;
  fm.names = feature_names(rs);
  for (std::size_t i = 0; i < 8; ++i) {
    CaseInventory inv;
    CaseBundle b = generate_case(cfg, i, &inv);
    FeatureVector f = extract_case_features(b, rs);
    fm.case_ids.push_back(b.case_id);
    fm.rows.push_back(f.values);
    fm.degenerate.push_back(f.degenerate);
    cases.push_back({b.case_id, b.prediction, *b.ground_truth});
    bundles.push_back(b);
    inventories.push_back(inv);
  }
  PolicyFitSettings ps;
  ps.kmeans.k_max = 3;
  ps.kmeans.seed = 1;
  ps.fit.pcc_grid = {0, 10, 20, 50};
  auto result = fit_policy(cases, fm, ps);
  CHECK(result.case_clusters.size() == 8);
  CHECK(result.fitted_score < result.identity_score);
  CHECK(!result.report().empty());

  fixtures::TempDir tmp("policy-fit");
  save_policy(result.policy, tmp.path() / "p.json");
  PostProcessPolicy back = load_policy(tmp.path() / "p.json");
  save_policy(back, tmp.path() / "q.json");
  CHECK(read_file(tmp.path() / "p.json") == read_file(tmp.path() / "q.json"));

  for (std::size_t i = 0; i < bundles.size(); ++i) {
    ApplyTrace trace;
    LabelMap out = apply_policy(result.policy, bundles[i], &trace);
    CHECK(trace.cluster == result.case_clusters[i]);
    CHECK(apply_policy(back, bundles[i]) == out);
    for (const auto& island : inventories[i].islands)
      for (std::size_t v : island.voxels) CHECK(out[v] == 0);
    CHECK(out == *bundles[i].ground_truth);
  }

  FeatureMatrix too_few = fm;
  too_few.degenerate.assign(8, true);
  too_few.degenerate[0] = false;
  CHECK_THROWS_AS(fit_policy(cases, too_few, ps), ValidationError);
}

TEST_CASE("fitting on perfect predictions yields the identity policy") {
  SynthConfig cfg;
  cfg.seed = 9;
  cfg.dims = Dims{36, 36, 36};
  cfg.wt_radius = {6.0, 8.0};
  cfg.islands.clear();
  cfg.swap.enabled = false;
  std::vector<LabeledCase> cases;
  FeatureMatrix fm;
  RadiomicsSettings rs;
  fm.names = feature_names(rs);
  for (std::size_t i = 0; i < 6; ++i) {
    CaseBundle b = generate_case(cfg, i);
    FeatureVector f = extract_case_features(b, rs);
    fm.case_ids.push_back(b.case_id);
    fm.rows.push_back(f.values);
    fm.degenerate.push_back(f.degenerate);
    cases.push_back({b.case_id, b.prediction, *b.ground_truth});
  }
  PolicyFitSettings ps;
  ps.kmeans.k_max = 3;
  auto result = fit_policy(cases, fm, ps);
  for (const auto& row : result.policy.thresholds.by_cluster)
    CHECK(row == std::array<std::size_t, 4>{0, 0, 0, 0});
  CHECK(result.policy.rules.empty());
  CHECK(result.candidates.empty());
  CHECK(result.fitted_score == result.identity_score);
}
