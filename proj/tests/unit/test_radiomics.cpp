#include <doctest.h>

#include <cmath>
#include <set>

#include "fixtures.h"
#include "postseg/radiomics.h"
#include "reference.h"

using namespace postseg;

namespace {

oracle::Levels to_levels(const LevelGrid& g) { return {g.raw().begin(), g.raw().end()}; }

template <typename A, typename B>
bool same_counts(const A& a, const B& b) {
  if (a.size() != b.size()) return false;
  auto ib = b.begin();
  for (auto ia = a.begin(); ia != a.end(); ++ia, ++ib)
    if (ia->first != ib->first || ia->second != ib->second) return false;
  return true;
}

void check_close(const std::vector<double>& got, const std::vector<double>& want,
                 const std::vector<std::string>& names, double tol = 1e-9) {
  REQUIRE(got.size() == want.size());
  for (std::size_t k = 0; k < got.size(); ++k) {
    double scale = std::max(1.0, std::fabs(want[k]));
    INFO(names[k] << ": got " << got[k] << " want " << want[k]);
    CHECK(std::fabs(got[k] - want[k]) <= tol * scale);
  }
}

std::vector<double> ngtdm_oracle_features(const oracle::Ngtdm& t) {
  double nvp = 0, stot = 0;
  for (const auto& [l, n] : t.count) nvp += n;
  std::vector<int> lv;
  std::vector<double> p, s;
  for (const auto& [l, n] : t.count) {
    lv.push_back(l);
    p.push_back(n / nvp);
    s.push_back(t.difference.at(l));
    stot += t.difference.at(l);
  }
  double ps = 0;
  for (std::size_t a = 0; a < p.size(); ++a) ps += p[a] * s[a];
  double csum = 0, bden = 0, comp = 0, snum = 0;
  for (std::size_t a = 0; a < p.size(); ++a)
    for (std::size_t b = 0; b < p.size(); ++b) {
      double i = lv[a], j = lv[b];
      csum += p[a] * p[b] * (i - j) * (i - j);
      bden += std::fabs(i * p[a] - j * p[b]);
      comp += std::fabs(i - j) * (p[a] * s[a] + p[b] * s[b]) / (p[a] + p[b]);
      snum += (p[a] + p[b]) * (i - j) * (i - j);
    }
  double ngp = static_cast<double>(p.size());
  return {ps > 0 ? 1.0 / ps : 1e6, ngp > 1 ? csum / (ngp * (ngp - 1)) * stot / nvp : 0.0,
          bden > 0 ? ps / bden : 0.0, comp / nvp, stot > 0 ? snum / stot : 0.0};
}

struct Roi {
  ScalarVolume image;
  Mask mask;
  LevelGrid levels;
};

Roi random_roi(Rng& rng, Dims d, int bins) {
  Roi r;
  r.mask = fixtures::random_mask(rng, d, rng.uniform(0.4, 0.9));
  r.image = fixtures::random_image(rng, d, 0.0, 100.0);
  r.levels = discretize_bin_count(r.image, r.mask, bins);
  return r;
}

CaseBundle one_sequence_case(const LabelMap& pred, const ScalarVolume& img) {
  CaseBundle b;
  b.case_id = "c";
  b.prediction = pred;
  b.sequences[Sequence::T1] = img;
  return b;
}

}  // namespace

TEST_CASE("feature counts and names") {
  RadiomicsSettings s;
  auto names = feature_names(s);
  CHECK(names.size() == 386);
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == 386);
  CHECK(names.front() == "shape/Elongation");
  CHECK(names[14] == "t1n/firstorder/Energy");
  CHECK(names.back() == "t2f/ngtdm/Strength");
  CHECK(shape_feature_names().size() == 14);
  CHECK(firstorder_feature_names().size() == 18);
  CHECK(glcm_feature_names().size() == 24);
  CHECK(glrlm_feature_names().size() == 16);
  CHECK(glszm_feature_names().size() == 16);
  CHECK(gldm_feature_names().size() == 14);
  CHECK(ngtdm_feature_names().size() == 5);
}

TEST_CASE("shape of a single voxel") {
  Mask m(Dims{3, 3, 3});
  m.at(1, 1, 1) = 1;
  auto f = shape_features(m, Spacing{});
  CHECK(f.get("VoxelVolume") == 1.0);
  CHECK(f.get("VoxelCount") == 1.0);
  CHECK(f.get("MajorAxisLength") == 0.0);
  CHECK(f.get("MinorAxisLength") == 0.0);
  CHECK(f.get("LeastAxisLength") == 0.0);
  CHECK(f.get("SurfaceArea") == 6.0);
}

TEST_CASE("shape of a solid cube") {
  Mask m = fixtures::box_mask(Dims{12, 12, 12}, {1, 1, 1}, {10, 10, 10});
  auto f = shape_features(m, Spacing{});
  CHECK(f.get("VoxelVolume") == 1000.0);
  CHECK(f.get("Maximum3DDiameter") == doctest::Approx(9.0 * std::sqrt(3.0)).epsilon(1e-12));
  CHECK(f.get("Maximum2DDiameterSlice") == doctest::Approx(9.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(f.get("SurfaceArea") == 600.0);
  CHECK(f.get("SurfaceVolumeRatio") == 0.6);
  CHECK(f.get("Elongation") == doctest::Approx(1.0));
  CHECK(f.get("Flatness") == doctest::Approx(1.0));
}

TEST_CASE("box elongation and flatness follow the covariance oracle") {
  for (Spacing sp : {Spacing{1, 1, 1}, Spacing{0.5, 1.5, 2.0}}) {
    Mask m = fixtures::box_mask(Dims{22, 12, 7}, {1, 1, 1}, {20, 10, 5}, sp);
    auto f = shape_features(m, sp);
    auto ev = oracle::centre_moments(m);  // least, minor, major
    CHECK(f.get("Elongation") == doctest::Approx(std::sqrt(ev[1] / ev[2])).epsilon(1e-12));
    CHECK(f.get("Flatness") == doctest::Approx(std::sqrt(ev[0] / ev[2])).epsilon(1e-12));
    CHECK(f.get("MajorAxisLength") == doctest::Approx(4.0 * std::sqrt(ev[2])).epsilon(1e-12));
    CHECK(f.get("VoxelCount") == 1000.0);
  }
}

TEST_CASE("first-order statistics") {
  ScalarVolume img(Dims{4, 1, 1});
  Mask m(Dims{4, 1, 1}, {}, 1);
  for (int i = 0; i < 4; ++i) img[static_cast<std::size_t>(i)] = static_cast<float>(i + 1);
  auto f = firstorder_features(img, m, 25.0);
  CHECK(f.get("Mean") == 2.5);
  CHECK(f.get("Variance") == 1.25);
  CHECK(f.get("Range") == 3.0);
  CHECK(f.get("Median") == 2.5);
  CHECK(f.get("Energy") == 30.0);

  ScalarVolume flat(Dims{3, 3, 3}, {}, 42.0f);
  Mask all(Dims{3, 3, 3}, {}, 1);
  auto c = firstorder_features(flat, all, 25.0);
  CHECK(c.get("Variance") == 0.0);
  CHECK(c.get("Entropy") == 0.0);
  CHECK(c.get("Uniformity") == 1.0);
  for (const char* n : {"Mean", "Median", "Minimum", "Maximum"}) CHECK(c.get(n) == 42.0);
}

TEST_CASE("first-order mean and variance match a two-pass oracle") {
  Rng rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    Dims d{9, 8, 7};
    Mask m = fixtures::random_mask(rng, d, 0.5);
    ScalarVolume img = fixtures::random_image(rng, d, -300.0, 900.0);
    std::vector<double> vals;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i]) vals.push_back(img[i]);
    auto [mean, var] = oracle::mean_variance(vals);
    auto f = firstorder_features(img, m, 25.0);
    CHECK(std::fabs(f.get("Mean") - mean) <= 1e-12 * std::fabs(mean));
    CHECK(std::fabs(f.get("Variance") - var) <= 1e-12 * var);
  }
}

TEST_CASE("discretization") {
  Rng rng(2);
  Roi r = random_roi(rng, Dims{6, 6, 6}, 8);
  for (std::size_t i = 0; i < r.mask.size(); ++i) {
    if (!r.mask[i]) {
      CHECK(r.levels[i] == 0);
      continue;
    }
    CHECK(r.levels[i] >= 1);
    CHECK(r.levels[i] <= 8);
    for (std::size_t j = 0; j < r.mask.size(); ++j)
      if (r.mask[j] && r.image[j] < r.image[i]) CHECK(r.levels[j] <= r.levels[i]);
  }
}

TEST_CASE("checkerboard and constant co-occurrence") {
  LevelGrid board(Dims{2, 2, 1});
  board.at(0, 0, 0) = 1;
  board.at(1, 0, 0) = 2;
  board.at(0, 1, 0) = 2;
  board.at(1, 1, 0) = 1;
  auto counts = glcm_counts(board, {1, 0, 0});
  CHECK(counts.size() == 2);
  CHECK(counts.at({1, 2}) == 2.0);
  CHECK(counts.at({2, 1}) == 2.0);
  auto f = glcm_matrix_features(counts);
  CHECK(f.get("Contrast") == 1.0);

  LevelGrid flat(Dims{3, 3, 3}, {}, 1);
  auto g = glcm_features(flat, texture_directions());
  CHECK(g.get("JointEnergy") == 1.0);
  CHECK(g.get("Contrast") == 0.0);
  CHECK(g.get("MaximumProbability") == 1.0);
  CHECK(g.get("Correlation") == 1.0);
  auto zones = glszm_counts(flat, Connectivity::Vertex26);
  CHECK(zones.size() == 1);
  CHECK(zones.at({1, 27}) == 1.0);
  auto z = texture_family_features(flat, TextureFamily::GLSZM);
  CHECK(z.get("ZoneEntropy") == 0.0);
}

TEST_CASE("run lengths of a three-voxel column") {
  LevelGrid col(Dims{1, 1, 3});
  col.at(0, 0, 0) = 1;
  col.at(0, 0, 1) = 1;
  col.at(0, 0, 2) = 2;
  auto runs = glrlm_counts(col, {0, 0, 1});
  CHECK(runs.size() == 2);
  CHECK(runs.at({1, 2}) == 1.0);
  CHECK(runs.at({2, 1}) == 1.0);
  // Run-length non-uniformity: (1^2 + 1^2) / 2 runs.
  CHECK(oracle::size_stats(runs, 3.0).sn == 1.0);
}

TEST_CASE("texture matrices equal enumeration oracles") {
  Rng rng(404);
  for (int trial = 0; trial < 6; ++trial) {
    Roi r = random_roi(rng, Dims{6, 6, 6}, static_cast<int>(rng.uniform_int(2, 8)));
    const Dims& d = r.levels.dims();
    auto lv = to_levels(r.levels);
    for (const auto& dir : texture_directions()) {
      CHECK(same_counts(glcm_counts(r.levels, dir), oracle::cooccurrence(d, lv, dir)));
      CHECK(same_counts(glrlm_counts(r.levels, dir), oracle::run_lengths(d, lv, dir)));
    }
    for (auto conn : {Connectivity::Face6, Connectivity::Vertex26}) {
      int c = static_cast<int>(conn);
      CHECK(same_counts(glszm_counts(r.levels, conn), oracle::size_zones(d, lv, c)));
      CHECK(same_counts(gldm_counts(r.levels, conn), oracle::dependence(d, lv, c)));
      auto t = ngtdm_table(r.levels, conn);
      auto o = oracle::ngtdm(d, lv, c);
      CHECK(same_counts(t.count, o.count));
      REQUIRE(t.difference.size() == o.difference.size());
      for (const auto& [l, v] : o.difference) CHECK(t.difference.at(l) == doctest::Approx(v).epsilon(1e-12));
    }
  }
}

TEST_CASE("texture features match dense-matrix oracles") {
  Rng rng(505);
  for (int trial = 0; trial < 6; ++trial) {
    Dims d = trial < 3 ? Dims{8, 8, 8} : Dims{6, 6, 6};
    Roi r = random_roi(rng, d, static_cast<int>(rng.uniform_int(2, 16)));
    auto lv = to_levels(r.levels);
    double voxels = static_cast<double>(count_nonzero(r.mask));

    std::vector<double> glcm(24, 0.0);
    std::size_t used = 0;
    for (const auto& dir : texture_directions()) {
      auto counts = oracle::cooccurrence(d, lv, dir);
      if (counts.empty()) continue;
      auto v = oracle::glcm_features(counts);
      for (std::size_t k = 0; k < 24; ++k) glcm[k] += v[k];
      ++used;
    }
    for (auto& v : glcm) v /= static_cast<double>(used);
    check_close(glcm_features(r.levels, texture_directions()).values, glcm, glcm_feature_names());

    std::vector<double> glrlm(16, 0.0);
    for (const auto& dir : texture_directions()) {
      auto v = oracle::run_zone_vector(oracle::size_stats(oracle::run_lengths(d, lv, dir), voxels));
      for (std::size_t k = 0; k < 16; ++k) glrlm[k] += v[k] / 13.0;
    }
    check_close(texture_family_features(r.levels, TextureFamily::GLRLM).values, glrlm,
                glrlm_feature_names());
    check_close(texture_family_features(r.levels, TextureFamily::GLSZM).values,
                oracle::run_zone_vector(oracle::size_stats(oracle::size_zones(d, lv, 26), voxels)),
                glszm_feature_names());
    check_close(texture_family_features(r.levels, TextureFamily::GLDM).values,
                oracle::dependence_vector(oracle::size_stats(oracle::dependence(d, lv, 26), voxels)),
                gldm_feature_names());
    check_close(texture_family_features(r.levels, TextureFamily::NGTDM).values,
                ngtdm_oracle_features(oracle::ngtdm(d, lv, 26)), ngtdm_feature_names());
  }
}

TEST_CASE("co-occurrence probabilities are a distribution") {
  Rng rng(9);
  Roi r = random_roi(rng, Dims{7, 7, 7}, 6);
  for (const auto& dir : texture_directions()) {
    auto counts = glcm_counts(r.levels, dir);
    double total = 0.0;
    for (const auto& [k, c] : counts) {
      CHECK(c >= 0.0);
      total += c;
    }
    double sum = 0.0;
    for (const auto& [k, c] : counts) sum += c / total;
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("case features: count, degeneracy and determinism") {
  Rng rng(31);
  Dims d{16, 16, 16};
  CaseBundle b;
  b.case_id = "c";
  b.prediction = LabelMap(d);
  fixtures::paint_box(b.prediction, {3, 3, 3}, {11, 10, 12}, 2);
  fixtures::paint_box(b.prediction, {5, 5, 5}, {9, 8, 9}, 1);
  fixtures::paint_box(b.prediction, {6, 6, 6}, {7, 7, 7}, 3);
  for (Sequence s : kAllSequences) b.sequences[s] = fixtures::random_image(rng, d, 0.0, 500.0);

  auto f = extract_case_features(b);
  CHECK(f.values.size() == 386);
  CHECK(!f.degenerate);
  CHECK(f.names == feature_names(RadiomicsSettings{}));
  CHECK(extract_case_features(b).values == f.values);

  // Relabelling inside WT and editing non-WT voxels change nothing.
  CaseBundle c = b;
  for (auto& v : c.prediction.raw())
    if (v == 3) v = 1;
  c.prediction.at(15, 15, 15) = 4;
  CHECK(extract_case_features(c).values == f.values);

  CaseBundle empty = b;
  empty.prediction = LabelMap(d);
  auto e = extract_case_features(empty);
  CHECK(e.degenerate);
  CHECK(e.values.size() == 386);
  for (double v : e.values) CHECK(v == 0.0);
  empty.prediction.at(4, 4, 4) = 2;
  CHECK(extract_case_features(empty).degenerate);

  CaseBundle missing = b;
  missing.sequences.erase(Sequence::T2);
  CHECK_THROWS_AS(extract_case_features(missing), ValidationError);
}

TEST_CASE("shape features ignore intensities") {
  Rng rng(32);
  Dims d{12, 12, 12};
  LabelMap pred(d);
  fixtures::paint_box(pred, {2, 3, 4}, {8, 9, 7}, 2);
  RadiomicsSettings one;
  one.sequences = {Sequence::T1};
  auto a = extract_case_features(one_sequence_case(pred, fixtures::random_image(rng, d, 0, 1)), one);
  auto b = extract_case_features(one_sequence_case(pred, fixtures::random_image(rng, d, 5, 900)), one);
  for (std::size_t k = 0; k < kShapeFeatureCount; ++k) CHECK(a.values[k] == b.values[k]);
}

TEST_CASE("features are translation invariant") {
  Rng rng(71);
  RadiomicsSettings one;
  one.sequences = {Sequence::T1};
  for (int trial = 0; trial < 3; ++trial) {
    Dims small{7, 6, 5};
    Mask m = fixtures::random_mask(rng, small, 0.7);
    ScalarVolume img = fixtures::random_image(rng, small, 0.0, 200.0);
    std::vector<FeatureVector> out;
    for (std::array<std::int64_t, 3> off : {std::array<std::int64_t, 3>{0, 0, 0}, {5, 2, 7}, {9, 10, 11}}) {
      Dims big{18, 18, 18};
      LabelMap pred(big);
      ScalarVolume image(big, {}, 0.0f);
      for (std::int64_t z = 0; z < small.nz; ++z)
        for (std::int64_t y = 0; y < small.ny; ++y)
          for (std::int64_t x = 0; x < small.nx; ++x) {
            pred.at(x + off[0], y + off[1], z + off[2]) = m.at(x, y, z) ? 2 : 0;
            image.at(x + off[0], y + off[1], z + off[2]) = img.at(x, y, z);
          }
      out.push_back(extract_case_features(one_sequence_case(pred, image), one));
    }
    for (std::size_t k = 1; k < out.size(); ++k)
      check_close(out[k].values, out[0].values, out[0].names);
  }
}

TEST_CASE("feature CSV round trip") {
  FeatureMatrix fm;
  fm.names = {"a", "b"};
  fm.case_ids = {"x", "y"};
  fm.rows = {{0.1, 1.0 / 3.0}, {0.0, 0.0}};
  fm.degenerate = {false, true};
  fixtures::TempDir tmp("feat");
  save_feature_csv(fm, tmp.path() / "f.csv");
  auto back = load_feature_csv(tmp.path() / "f.csv");
  CHECK(back.names == fm.names);
  CHECK(back.case_ids == fm.case_ids);
  CHECK(back.rows == fm.rows);
  CHECK(back.degenerate == fm.degenerate);
}
