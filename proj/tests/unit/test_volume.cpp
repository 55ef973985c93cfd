#include <doctest.h>

#include <cstring>
#include <fstream>

#include "fixtures.h"
#include "postseg/nifti.h"

using namespace postseg;

TEST_CASE("zero label volume survives a round trip") {
  fixtures::TempDir tmp("vol");
  LabelMap zeros(Dims{4, 4, 4});
  save_nifti(zeros, tmp.path() / "z.nii.gz");
  LabelMap back = load_label_nifti(tmp.path() / "z.nii.gz");
  CHECK(back.size() == 64);
  CHECK(back == zeros);
}

TEST_CASE("non-integral scalar rejected as a label map") {
  fixtures::TempDir tmp("vol");
  ScalarVolume v(Dims{2, 2, 2}, {}, 0.0f);
  v[3] = 3.7f;
  save_nifti(v, tmp.path() / "s.nii");
  CHECK_THROWS_AS(load_label_nifti(tmp.path() / "s.nii"), ValidationError);
}

TEST_CASE("out-of-range integral value rejected as a label map") {
  fixtures::TempDir tmp("vol");
  ScalarVolume v(Dims{2, 2, 2}, {}, 0.0f);
  v[0] = 5.0f;
  save_nifti(v, tmp.path() / "s.nii.gz");
  CHECK_THROWS_AS(load_label_nifti(tmp.path() / "s.nii.gz"), ValidationError);
}

TEST_CASE("seeded scalar volume round trips bit for bit") {
  fixtures::TempDir tmp("vol");
  Rng rng(11);
  Spacing sp{0.75, 1.25, 2.5};  // exact in the float32 header
  ScalarVolume v = fixtures::random_image(rng, Dims{8, 8, 8}, -1000.0, 1000.0, sp);
  for (const char* name : {"r.nii", "r.nii.gz"}) {
    save_nifti(v, tmp.path() / name);
    ScalarVolume back = load_scalar_nifti(tmp.path() / name);
    CHECK(back.dims() == v.dims());
    CHECK(back.spacing() == sp);
    CHECK(std::memcmp(back.raw().data(), v.raw().data(), v.size() * sizeof(float)) == 0);
  }
  ScalarVolume odd(Dims{2, 2, 2}, Spacing{0.8, 1.0, 1.0});
  save_nifti(odd, tmp.path() / "odd.nii");
  CHECK(load_scalar_nifti(tmp.path() / "odd.nii").spacing().dx == doctest::Approx(0.8).epsilon(1e-7));
}

TEST_CASE("single voxel and every label round trip") {
  fixtures::TempDir tmp("vol");
  LabelMap one(Dims{1, 1, 1});
  save_nifti(one, tmp.path() / "one.nii.gz");
  CHECK(load_label_nifti(tmp.path() / "one.nii.gz") == one);

  LabelMap labels(Dims{5, 3, 2});
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint8_t>(i % 5);
  save_nifti(labels, tmp.path() / "all.nii.gz");
  CHECK(load_label_nifti(tmp.path() / "all.nii.gz") == labels);
}

TEST_CASE("axis order is preserved") {
  fixtures::TempDir tmp("vol");
  LabelMap seg(Dims{3, 4, 5});
  seg.at(2, 0, 0) = 1;
  seg.at(0, 3, 0) = 2;
  seg.at(0, 0, 4) = 3;
  seg.at(1, 2, 3) = 4;
  save_nifti(seg, tmp.path() / "axes.nii.gz");
  LabelMap back = load_label_nifti(tmp.path() / "axes.nii.gz");
  CHECK(back.dims() == Dims{3, 4, 5});
  CHECK(back.at(2, 0, 0) == 1);
  CHECK(back.at(0, 3, 0) == 2);
  CHECK(back.at(0, 0, 4) == 3);
  CHECK(back.at(1, 2, 3) == 4);
  CHECK(count_label(back, 0) == 60 - 4);
}

TEST_CASE("identical volumes produce identical files") {
  fixtures::TempDir tmp("vol");
  Rng rng(3);
  ScalarVolume v = fixtures::random_image(rng, Dims{6, 5, 4}, 0.0, 10.0);
  save_nifti(v, tmp.path() / "a.nii.gz");
  save_nifti(v, tmp.path() / "b.nii.gz");
  auto read = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(read(tmp.path() / "a.nii.gz") == read(tmp.path() / "b.nii.gz"));
}

TEST_CASE("I/O failures raise IoError") {
  LabelMap seg(Dims{2, 2, 2});
  CHECK_THROWS_AS(save_nifti(seg, "/nonexistent-dir/x/seg.nii.gz"), IoError);
  CHECK_THROWS_AS(load_label_nifti("/nonexistent-dir/missing.nii.gz"), IoError);
  fixtures::TempDir tmp("vol");
  {
    std::ofstream out(tmp.path() / "junk.nii", std::ios::binary);
    out << "not a nifti header";
  }
  CHECK_THROWS(load_label_nifti(tmp.path() / "junk.nii"));
}

TEST_CASE("case bundle validation rejects mismatched grids") {
  CaseBundle b;
  b.case_id = "x";
  b.prediction = LabelMap(Dims{4, 4, 4});
  b.sequences[Sequence::T1] = ScalarVolume(Dims{4, 4, 4});
  CHECK_NOTHROW(b.validate());
  b.sequences[Sequence::T2] = ScalarVolume(Dims{4, 4, 5});
  CHECK_THROWS_AS(b.validate(), ValidationError);
}

TEST_CASE("label validation and sequence names") {
  LabelMap seg(Dims{2, 1, 1});
  seg[0] = 4;
  CHECK_NOTHROW(validate_labels(seg));
  seg[1] = 7;
  CHECK_THROWS_AS(validate_labels(seg), ValidationError);
  CHECK(sequence_suffix(Sequence::FLAIR) == "t2f");
  CHECK(parse_sequence("t1c") == Sequence::T1CE);
  CHECK_THROWS_AS(parse_sequence("dwi"), ConfigError);
}
