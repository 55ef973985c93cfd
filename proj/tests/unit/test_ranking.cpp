#include <doctest.h>

#include <cmath>
#include <fstream>

#include "fixtures.h"
#include "postseg/ranking.h"
#include "reference.h"

using namespace postseg;

namespace {

Candidate make(const std::string& id, const std::vector<std::vector<double>>& rows) {
  Candidate c;
  c.id = id;
  c.metrics.columns = {"m1", "m2"};
  for (std::size_t r = 0; r < rows.size(); ++r) c.metrics.case_ids.push_back("case" + std::to_string(r));
  c.metrics.rows = rows;
  return c;
}

std::vector<Candidate> random_candidates(Rng& rng, std::size_t n, std::size_t cases) {
  std::vector<Candidate> out;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < cases; ++r)
      // Coarse values so that ties are common.
      rows.push_back({std::round(rng.uniform() * 4) / 4, std::round(rng.uniform() * 4) / 4});
    out.push_back(make("c" + std::to_string(k), rows));
  }
  return out;
}

}  // namespace

TEST_CASE("dominance and full tie") {
  auto dom = rank_candidates({make("a", {{0.9, 0.8}, {0.7, 0.95}}),
                              make("b", {{0.1, 0.2}, {0.3, 0.5}})});
  CHECK(dom.scores == std::vector<double>{1.0, 2.0});
  CHECK(dom.best() == 0);

  auto tie = rank_candidates({make("a", {{0.5, 0.5}}), make("b", {{0.5, 0.5}})});
  CHECK(tie.scores == std::vector<double>{1.5, 1.5});
  for (double r : tie.ranks) CHECK(r == 1.5);
}

TEST_CASE("three candidates over two cases by hand") {
  auto r = rank_candidates({make("A", {{0.9, 0.2}, {1.0, 0.7}}),
                            make("B", {{0.9, 0.5}, {0.0, 0.7}}),
                            make("C", {{0.1, 0.8}, {0.5, 0.7}})});
  CHECK(r.cell_count == 4);
  CHECK(r.scores[0] == 7.5 / 4.0);
  CHECK(r.scores[1] == 8.5 / 4.0);
  CHECK(r.scores[2] == 8.0 / 4.0);
  CHECK(r.doubled_rank_sums == std::vector<std::int64_t>{15, 17, 16});
}

TEST_CASE("ranks agree with the counting oracle") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 6));
    auto cands = random_candidates(rng, n, static_cast<std::size_t>(rng.uniform_int(1, 5)));
    auto r = rank_candidates(cands);
    std::vector<double> sums(n, 0.0);
    std::size_t cell = 0;
    for (std::size_t row = 0; row < cands[0].metrics.rows.size(); ++row)
      for (std::size_t col = 0; col < 2; ++col, ++cell) {
        std::vector<double> v;
        for (const auto& c : cands) v.push_back(c.metrics.rows[row][col]);
        auto ref = oracle::ranks(v);
        double cell_sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          CHECK(r.ranks[cell * n + k] == ref[k]);
          sums[k] += ref[k];
          cell_sum += ref[k];
        }
        CHECK(cell_sum == static_cast<double>(n * (n + 1)) / 2.0);
      }
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(r.scores[k] == sums[k] / static_cast<double>(r.cell_count));
      CHECK(r.scores[k] >= 1.0);
      CHECK(r.scores[k] <= static_cast<double>(n));
      mean += r.scores[k];
    }
    CHECK(mean / static_cast<double>(n) == doctest::Approx(static_cast<double>(n + 1) / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("monotone transforms leave the ranking unchanged") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto cands = random_candidates(rng, 4, 3);
    auto cubed = cands;
    for (auto& c : cubed)
      for (auto& row : c.metrics.rows)
        for (auto& v : row) v = v * v * v;
    auto a = rank_candidates(cands), b = rank_candidates(cubed);
    CHECK(a.ranks == b.ranks);
    CHECK(a.scores == b.scores);
    CHECK(a.doubled_rank_sums == b.doubled_rank_sums);
  }
}

TEST_CASE("a candidate worse than all others everywhere keeps the order") {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    auto cands = random_candidates(rng, 4, 3);
    auto r = rank_candidates(cands);
    auto more = cands;
    more.push_back(make("floor", std::vector<std::vector<double>>(3, {-1.0, -1.0})));
    auto r2 = rank_candidates(more);
    for (std::size_t a = 0; a < cands.size(); ++a) CHECK(r2.scores[a] == r.scores[a]);
    CHECK(r2.scores.back() == static_cast<double>(more.size()));
  }
}

TEST_CASE("a candidate tying the per-cell minimum can reorder the others") {
  // Only candidates sitting at a cell's minimum gain half a rank there, so
  // two candidates with different counts of bottom cells can swap places.
  std::vector<Candidate> cands{make("a", {{2, 3}, {1, 0}}), make("b", {{1, 3}, {3, 1}}),
                               make("c", {{3, 0}, {1, 3}}), make("d", {{2, 1}, {2, 1}})};
  auto r = rank_candidates(cands);
  CHECK(r.scores[3] > r.scores[2]);
  auto more = cands;
  more.push_back(make("min", {{1, 0}, {1, 0}}));
  auto r2 = rank_candidates(more);
  CHECK(r2.scores[3] < r2.scores[2]);
}

TEST_CASE("tied ranks") {
  CHECK(tied_ranks_descending({3.0, 1.0, 3.0, 2.0}) == std::vector<double>{1.5, 4.0, 1.5, 3.0});
  CHECK(tied_ranks_descending({1.0}) == std::vector<double>{1.0});
}

TEST_CASE("ranking preconditions") {
  CHECK_THROWS_AS(rank_candidates({make("a", {{1, 1}})}), ValidationError);
  auto a = make("a", {{1, 1}, {0, 0}});
  auto b = make("b", {{1, 1}});
  CHECK_THROWS_AS(rank_candidates({a, b}), ValidationError);
  auto c = make("c", {{1, 1}, {0, 0}});
  c.metrics.columns = {"m1", "other"};
  CHECK_THROWS_AS(rank_candidates({a, c}), ValidationError);
}

TEST_CASE("ranking CSV") {
  fixtures::TempDir tmp("rank");
  auto r = rank_candidates({make("a", {{0.9, 0.8}}), make("b", {{0.1, 0.2}})});
  save_ranking_csv(r, tmp.path() / "r.csv");
  std::ifstream in(tmp.path() / "r.csv");
  std::string text((std::istreambuf_iterator<char>(in)), {});
  CHECK(text == "candidate_id,ranking_score\na,1\nb,2\n");
}
