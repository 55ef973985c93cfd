#include "postseg/ranking.h"

#include <algorithm>
#include <numeric>

#include "postseg/csv.h"

namespace postseg {

std::vector<double> tied_ranks_descending(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i+1 .. j share their mean.
    double shared = static_cast<double>(i + 1 + j) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = shared;
    i = j;
  }
  return ranks;
}

std::size_t RankingResult::best() const {
  return static_cast<std::size_t>(
      std::min_element(doubled_rank_sums.begin(), doubled_rank_sums.end()) -
      doubled_rank_sums.begin());
}

RankingResult rank_candidates(const std::vector<Candidate>& candidates) {
  if (candidates.size() < 2) throw ValidationError("ranking needs at least two candidates");
  const MetricTable& ref = candidates.front().metrics;
  if (ref.rows.empty()) throw ValidationError("ranking needs at least one case");
  for (const auto& c : candidates) {
    if (c.metrics.case_ids != ref.case_ids)
      throw ValidationError("candidate '" + c.id + "' covers a different case set");
    if (c.metrics.columns != ref.columns)
      throw ValidationError("candidate '" + c.id + "' reports different metric columns");
    for (const auto& row : c.metrics.rows)
      if (row.size() != ref.columns.size())
        throw ValidationError("candidate '" + c.id + "' has a malformed row");
  }

  const std::size_t n = candidates.size();
  const std::size_t cols = ref.columns.size();
  RankingResult out;
  out.cell_count = ref.rows.size() * cols;
  out.doubled_rank_sums.assign(n, 0);
  out.ranks.reserve(out.cell_count * n);
  std::vector<double> cell(n);
  for (std::size_t r = 0; r < ref.rows.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t k = 0; k < n; ++k) cell[k] = candidates[k].metrics.rows[r][c];
      auto ranks = tied_ranks_descending(cell);
      for (std::size_t k = 0; k < n; ++k) {
        out.ranks.push_back(ranks[k]);
        out.doubled_rank_sums[k] += static_cast<std::int64_t>(2.0 * ranks[k]);
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    out.candidate_ids.push_back(candidates[k].id);
    out.scores.push_back(static_cast<double>(out.doubled_rank_sums[k]) /
                         (2.0 * static_cast<double>(out.cell_count)));
  }
  return out;
}

void save_ranking_csv(const RankingResult& result, const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"candidate_id", "ranking_score"};
  for (std::size_t k = 0; k < result.scores.size(); ++k)
    t.rows.push_back({result.candidate_ids[k], csv::format_double(result.scores[k])});
  csv::write(t, path);
}

}  // namespace postseg
