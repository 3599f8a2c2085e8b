#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "optlcms/stream.hpp"

namespace optlcms {

enum class QueryMode { kUniform, kWeighted };

// Deterministic element -> [0, 1] map; only score order matters downstream.
class ScoreOracle {
 public:
  virtual ~ScoreOracle() = default;
  virtual double score(std::string_view element) const = 0;
  virtual uint64_t footprint_bytes() const = 0;
};

// Default oracle: score(x) = fraction of training uniques whose training
// count is <= x's. Most frequent scores 1, ties share a score, unseen
// elements score 0.
class FrequencyRankScorer : public ScoreOracle {
 public:
  double score(std::string_view element) const override {
    auto it = scores_.find(std::string(element));
    return it == scores_.end() ? 0.0 : it->second;
  }

  uint64_t footprint_bytes() const override { return footprint_; }

  const std::unordered_map<std::string, double>& table() const { return scores_; }
  void restore(std::unordered_map<std::string, double> scores);

  friend std::unique_ptr<FrequencyRankScorer> train_frequency_rank_scorer(
      const AggregatedStream& training);

 private:
  std::unordered_map<std::string, double> scores_;
  uint64_t footprint_ = 0;
};

// Rejects an empty training stream.
std::unique_ptr<FrequencyRankScorer> train_frequency_rank_scorer(
    const AggregatedStream& training);

// Binned score space. Bin i covers [edges[i-1], edges[i]) with the open
// ends below edges[0] and at or above edges.back(); edges are the
// candidate thresholds. Prefix sums back the optimizer's O(1) range masses.
struct ScoreHistogram {
  std::vector<double> edges;
  std::vector<uint64_t> data_mass;     // per bin, multiset counts
  std::vector<double> query_mass;      // per bin, sums to 1 over all bins
  std::vector<uint64_t> unique_count;  // per bin
  uint64_t total_mass = 0;             // N
  bool degenerate = false;             // all scores identical -> single bin

  std::vector<uint64_t> cum_data;      // size bins()+1
  std::vector<double> cum_query;
  std::vector<uint64_t> cum_unique;

  size_t bins() const { return data_mass.size(); }
  size_t bin_of(double score) const;
  void rebuild_prefix_sums();

  uint64_t data_in(size_t lo, size_t hi) const { return cum_data[hi] - cum_data[lo]; }
  double query_in(size_t lo, size_t hi) const { return cum_query[hi] - cum_query[lo]; }
  uint64_t unique_in(size_t lo, size_t hi) const { return cum_unique[hi] - cum_unique[lo]; }
};

// Quantile bin edges over the unique-element score distribution; each
// unique element contributes its stream count as data mass and its query
// weight (1/U uniform, count/N weighted) to exactly one bin. Bins with no
// data or no query mass are merged left so the optimizer never sees a
// zero-mass group.
ScoreHistogram build_histogram(const ScoreOracle& oracle, const AggregatedStream& stream,
                               QueryMode mode, size_t num_bins);

// Merges empty or zero-query bins into their left neighbour (leftmost
// merges right). build_histogram applies this already; exposed for
// hand-built histograms.
void merge_degenerate_bins(ScoreHistogram& hist);

// Normalized masses of bins [lo, hi) when bins [ub_bin, end) form the UB:
// u = N_g / (N - N_UB), v = q_g / (1 - q_UB).
struct GroupStats {
  double u = 0.0;
  double v = 0.0;
  uint64_t data_mass = 0;  // N_g
  double query_mass = 0.0;  // q_g
};
GroupStats group_stats(const ScoreHistogram& hist, size_t lo_bin, size_t hi_bin,
                       size_t ub_bin);

}  // namespace optlcms
