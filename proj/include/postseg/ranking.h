#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "postseg/metrics.h"

namespace postseg {

struct Candidate {
  std::string id;
  MetricTable metrics;
};

/// Per-candidate mean rank over every (case, metric column) cell; lower is
/// better. Within a cell the highest value gets rank 1 and tied values share
/// the mean of their positions.
struct RankingResult {
  std::vector<std::string> candidate_ids;
  std::vector<double> scores;
  /// Exact sum of 2*rank over all cells, per candidate.
  std::vector<std::int64_t> doubled_rank_sums;
  std::size_t cell_count = 0;
  /// ranks[cell * n + candidate], cells ordered case-major then column.
  std::vector<double> ranks;

  std::size_t best() const;
};

/// Ranks tie-averaged within each cell of equal-valued entries.
std::vector<double> tied_ranks_descending(const std::vector<double>& values);

RankingResult rank_candidates(const std::vector<Candidate>& candidates);

void save_ranking_csv(const RankingResult& result, const std::filesystem::path& path);

}  // namespace postseg
