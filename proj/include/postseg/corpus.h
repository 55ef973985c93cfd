#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "postseg/synth.h"
#include "postseg/volume.h"

namespace postseg {

/// Directory layout of a corpus:
///   images/<case>-{t1n,t1c,t2w,t2f}.nii.gz
///   gt/<case>-seg.nii.gz
///   pred/<case>-seg.nii.gz
///   inventory.json (synthetic corpora only)
struct CorpusLayout {
  std::filesystem::path root;

  std::filesystem::path images_dir() const { return root / "images"; }
  std::filesystem::path gt_dir() const { return root / "gt"; }
  std::filesystem::path pred_dir() const { return root / "pred"; }
  std::filesystem::path inventory_path() const { return root / "inventory.json"; }
};

std::filesystem::path sequence_path(const std::filesystem::path& images_dir,
                                    const std::string& case_id, Sequence seq);
/// `<dir>/<case>-seg.nii.gz`, or the plain `.nii` file when only that exists.
std::filesystem::path segmentation_path(const std::filesystem::path& dir,
                                        const std::string& case_id);

/// Case ids of every `<case>-seg.nii[.gz]` file in `dir`, sorted.
std::vector<std::string> list_segmentations(const std::filesystem::path& dir);

LabelMap load_segmentation(const std::filesystem::path& dir, const std::string& case_id);

/// Loads the requested sequences, the prediction from `pred_dir` and, when
/// asked, the ground truth. Missing files raise IoError naming the case.
CaseBundle load_case(const CorpusLayout& layout, const std::string& case_id,
                     bool with_ground_truth,
                     const std::vector<Sequence>& sequences = {kAllSequences.begin(),
                                                               kAllSequences.end()},
                     const std::filesystem::path& pred_dir = {});

void save_case(const CorpusLayout& layout, const CaseBundle& bundle);

/// Generates `cases` synthetic cases into `layout` and writes the inventory.
std::vector<CaseInventory> write_synth_corpus(const CorpusLayout& layout, const SynthConfig& cfg,
                                              std::size_t cases, unsigned threads = 1);

}  // namespace postseg
