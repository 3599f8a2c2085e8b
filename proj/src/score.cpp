#include "optlcms/score.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optlcms {

void FrequencyRankScorer::restore(std::unordered_map<std::string, double> scores) {
  scores_ = std::move(scores);
  footprint_ = 0;
  for (const auto& [k, v] : scores_) footprint_ += k.size() + 16;
}

std::unique_ptr<FrequencyRankScorer> train_frequency_rank_scorer(
    const AggregatedStream& training) {
  if (training.unique_count() == 0) {
    throw std::invalid_argument("train_frequency_rank_scorer: empty training stream");
  }
  std::vector<uint64_t> sorted_counts(training.counts);
  std::sort(sorted_counts.begin(), sorted_counts.end());
  const double denom = static_cast<double>(sorted_counts.size());

  auto scorer = std::make_unique<FrequencyRankScorer>();
  uint64_t footprint = 0;
  for (size_t i = 0; i < training.keys.size(); ++i) {
    auto it = std::upper_bound(sorted_counts.begin(), sorted_counts.end(), training.counts[i]);
    double rank = static_cast<double>(it - sorted_counts.begin()) / denom;
    scorer->scores_.emplace(training.keys[i], rank);
    footprint += training.keys[i].size() + 16;
  }
  scorer->footprint_ = footprint;
  return scorer;
}

size_t ScoreHistogram::bin_of(double score) const {
  return static_cast<size_t>(
      std::upper_bound(edges.begin(), edges.end(), score) - edges.begin());
}

void ScoreHistogram::rebuild_prefix_sums() {
  const size_t b = bins();
  cum_data.assign(b + 1, 0);
  cum_query.assign(b + 1, 0.0);
  cum_unique.assign(b + 1, 0);
  for (size_t i = 0; i < b; ++i) {
    cum_data[i + 1] = cum_data[i] + data_mass[i];
    cum_query[i + 1] = cum_query[i] + query_mass[i];
    cum_unique[i + 1] = cum_unique[i] + unique_count[i];
  }
}

void merge_degenerate_bins(ScoreHistogram& hist) {
  const size_t b = hist.bins();
  if (b == 0) {
    hist.rebuild_prefix_sums();
    return;
  }
  struct Seg {
    uint64_t data;
    double query;
    uint64_t uniq;
    double right_edge;
    bool has_edge;
  };
  std::vector<Seg> segs;
  uint64_t carry_data = 0, carry_uniq = 0;
  double carry_query = 0.0;
  for (size_t i = 0; i < b; ++i) {
    uint64_t d = hist.data_mass[i] + carry_data;
    double q = hist.query_mass[i] + carry_query;
    uint64_t u = hist.unique_count[i] + carry_uniq;
    carry_data = carry_uniq = 0;
    carry_query = 0.0;
    const bool has_edge = i + 1 < b;
    const double edge = has_edge ? hist.edges[i] : 0.0;
    if (d == 0 || !(q > 0.0)) {
      if (!segs.empty()) {  // fold into the left neighbour
        segs.back().data += d;
        segs.back().query += q;
        segs.back().uniq += u;
        segs.back().right_edge = edge;
        segs.back().has_edge = has_edge;
      } else {  // leftmost degenerate run merges right
        carry_data = d;
        carry_query = q;
        carry_uniq = u;
      }
      continue;
    }
    segs.push_back({d, q, u, edge, has_edge});
  }
  if (segs.empty()) segs.push_back({carry_data, carry_query, carry_uniq, 0.0, false});

  hist.edges.clear();
  hist.data_mass.clear();
  hist.query_mass.clear();
  hist.unique_count.clear();
  for (size_t i = 0; i < segs.size(); ++i) {
    hist.data_mass.push_back(segs[i].data);
    hist.query_mass.push_back(segs[i].query);
    hist.unique_count.push_back(segs[i].uniq);
    if (i + 1 < segs.size()) hist.edges.push_back(segs[i].right_edge);
  }
  hist.rebuild_prefix_sums();
}

ScoreHistogram build_histogram(const ScoreOracle& oracle, const AggregatedStream& stream,
                               QueryMode mode, size_t num_bins) {
  if (num_bins < 2) throw std::invalid_argument("build_histogram: num_bins must be >= 2");
  if (stream.unique_count() == 0) {
    throw std::invalid_argument("build_histogram: empty stream");
  }

  const size_t uniques = stream.unique_count();
  std::vector<double> scores(uniques);
  for (size_t i = 0; i < uniques; ++i) scores[i] = oracle.score(stream.keys[i]);

  std::vector<double> sorted_scores(scores);
  std::sort(sorted_scores.begin(), sorted_scores.end());

  ScoreHistogram hist;
  hist.total_mass = stream.total;

  // Quantile edges over the unique-score distribution; drop duplicates and
  // anything at the minimum so every bin keeps at least one element.
  for (size_t j = 1; j < num_bins; ++j) {
    double e = sorted_scores[j * uniques / num_bins];
    if (e > sorted_scores.front() &&
        (hist.edges.empty() || e > hist.edges.back())) {
      hist.edges.push_back(e);
    }
  }
  hist.degenerate = hist.edges.empty();

  const size_t bins = hist.edges.size() + 1;
  hist.data_mass.assign(bins, 0);
  hist.query_mass.assign(bins, 0.0);
  hist.unique_count.assign(bins, 0);

  const double uniform_w = 1.0 / static_cast<double>(uniques);
  const double total = static_cast<double>(stream.total);
  for (size_t i = 0; i < uniques; ++i) {
    const size_t b = hist.bin_of(scores[i]);
    hist.data_mass[b] += stream.counts[i];
    hist.unique_count[b] += 1;
    hist.query_mass[b] += (mode == QueryMode::kUniform)
                              ? uniform_w
                              : static_cast<double>(stream.counts[i]) / total;
  }

  merge_degenerate_bins(hist);
  return hist;
}

GroupStats group_stats(const ScoreHistogram& hist, size_t lo_bin, size_t hi_bin,
                       size_t ub_bin) {
  if (!(lo_bin < hi_bin) || hi_bin > ub_bin || ub_bin > hist.bins()) {
    throw std::invalid_argument("group_stats: need lo < hi <= ub_bin <= bins()");
  }
  GroupStats out;
  out.data_mass = hist.data_in(lo_bin, hi_bin);
  out.query_mass = hist.query_in(lo_bin, hi_bin);
  const uint64_t ub_mass = hist.data_in(ub_bin, hist.bins());
  const double ub_query = hist.query_in(ub_bin, hist.bins());
  const double cms_mass = static_cast<double>(hist.total_mass - ub_mass);
  const double cms_query = 1.0 - ub_query;
  out.u = cms_mass > 0.0 ? static_cast<double>(out.data_mass) / cms_mass : 0.0;
  out.v = cms_query > 0.0 ? out.query_mass / cms_query : 0.0;
  return out;
}

}  // namespace optlcms
