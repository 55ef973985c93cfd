#include "postseg/corpus.h"

#include <algorithm>
#include <fstream>

#include "postseg/nifti.h"
#include "postseg/parallel.h"

namespace fs = std::filesystem;

namespace postseg {
namespace {

constexpr std::string_view kSegSuffixGz = "-seg.nii.gz";
constexpr std::string_view kSegSuffix = "-seg.nii";

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

fs::path sequence_path(const fs::path& images_dir, const std::string& case_id, Sequence seq) {
  return images_dir / (case_id + "-" + std::string(sequence_suffix(seq)) + ".nii.gz");
}

fs::path segmentation_path(const fs::path& dir, const std::string& case_id) {
  fs::path gz = dir / (case_id + std::string(kSegSuffixGz));
  if (fs::exists(gz)) return gz;
  fs::path plain = dir / (case_id + std::string(kSegSuffix));
  if (fs::exists(plain)) return plain;
  return gz;
}

std::vector<std::string> list_segmentations(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (ends_with(name, kSegSuffixGz))
      ids.push_back(name.substr(0, name.size() - kSegSuffixGz.size()));
    else if (ends_with(name, kSegSuffix))
      ids.push_back(name.substr(0, name.size() - kSegSuffix.size()));
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

LabelMap load_segmentation(const fs::path& dir, const std::string& case_id) {
  fs::path p = segmentation_path(dir, case_id);
  if (!fs::exists(p)) throw IoError(case_id + ": missing segmentation " + p.string());
  return load_label_nifti(p);
}

CaseBundle load_case(const CorpusLayout& layout, const std::string& case_id,
                     bool with_ground_truth, const std::vector<Sequence>& sequences,
                     const fs::path& pred_dir) {
  CaseBundle b;
  b.case_id = case_id;
  for (Sequence s : sequences) {
    fs::path p = sequence_path(layout.images_dir(), case_id, s);
    if (!fs::exists(p))
      throw IoError(case_id + ": missing sequence file " + p.string());
    b.sequences.emplace(s, load_scalar_nifti(p));
  }
  b.prediction = load_segmentation(pred_dir.empty() ? layout.pred_dir() : pred_dir, case_id);
  if (with_ground_truth) b.ground_truth = load_segmentation(layout.gt_dir(), case_id);
  b.validate();
  return b;
}

void save_case(const CorpusLayout& layout, const CaseBundle& bundle) {
  ensure_dir(layout.images_dir());
  ensure_dir(layout.pred_dir());
  for (const auto& [seq, img] : bundle.sequences)
    save_nifti(img, sequence_path(layout.images_dir(), bundle.case_id, seq));
  save_nifti(bundle.prediction, layout.pred_dir() / (bundle.case_id + std::string(kSegSuffixGz)));
  if (bundle.ground_truth) {
    ensure_dir(layout.gt_dir());
    save_nifti(*bundle.ground_truth, layout.gt_dir() / (bundle.case_id + std::string(kSegSuffixGz)));
  }
}

std::vector<CaseInventory> write_synth_corpus(const CorpusLayout& layout, const SynthConfig& cfg,
                                              std::size_t cases, unsigned threads) {
  cfg.validate();
  ensure_dir(layout.images_dir());
  ensure_dir(layout.gt_dir());
  ensure_dir(layout.pred_dir());
  std::vector<CaseInventory> inventory(cases);
  parallel_for(cases, threads, [&](std::size_t i) {
    CaseBundle b = generate_case(cfg, i, &inventory[i]);
    save_case(layout, b);
  });
  std::ofstream out(layout.inventory_path(), std::ios::binary);
  if (!out) throw IoError("cannot write " + layout.inventory_path().string());
  out << inventory_to_json(inventory, cfg);
  return inventory;
}

}  // namespace postseg
