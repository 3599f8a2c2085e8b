#include "optlcms/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "optlcms/errors.hpp"
#include "optlcms/kernels.hpp"

namespace optlcms {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Replayed mean error of `estimate` over the stream's uniques under the
// query mode. Used by the baseline parameter searches.
template <typename EstimateFn>
double replay_mean_error(const AggregatedStream& stream, QueryMode mode, EstimateFn&& estimate) {
  unsigned __int128 err_sum = 0;
  uint64_t weight_sum = 0;
  for (size_t i = 0; i < stream.keys.size(); ++i) {
    const uint64_t w = mode == QueryMode::kUniform ? 1 : stream.counts[i];
    const uint64_t est = estimate(i);
    err_sum += static_cast<unsigned __int128>(est - stream.counts[i]) * w;
    weight_sum += w;
  }
  if (weight_sum == 0) return 0.0;
  return static_cast<double>(err_sum) / static_cast<double>(weight_sum);
}

std::vector<uint64_t> fingerprints_of(const AggregatedStream& stream) {
  std::vector<uint64_t> fp(stream.keys.size());
  for (size_t i = 0; i < fp.size(); ++i) fp[i] = fingerprint64(stream.keys[i]);
  return fp;
}

}  // namespace

double BuildConfig::effective_epsilon() const {
  if (epsilon > 0.0) return epsilon;
  // Smallest epsilon a plain CMS can realize in this budget: one row of
  // memory_bytes / counter_bytes counters.
  return std::numbers::e * static_cast<double>(counter_bytes) /
         static_cast<double>(memory_bytes);
}

PlainCms::PlainCms(SketchTable table, std::vector<GridPoint> search)
    : table_(std::move(table)), search_(std::move(search)) {}

uint64_t PlainCms::estimate(std::string_view element) const { return table_.estimate(element); }

uint64_t PlainCms::memory_recount() const {
  return table_.params().width * table_.params().depth * table_.params().counter_bytes;
}

SingleThresholdLcms::SingleThresholdLcms(std::shared_ptr<const ScoreOracle> oracle,
                                         double threshold, SketchTable table, UniqueBucket ub,
                                         std::vector<GridPoint> search)
    : oracle_(std::move(oracle)),
      threshold_(threshold),
      table_(std::move(table)),
      ub_(std::move(ub)),
      search_(std::move(search)) {}

uint64_t SingleThresholdLcms::estimate(std::string_view element) const {
  if (oracle_->score(element) >= threshold_) {
    auto hit = ub_.query(element);
    return hit ? *hit : 0;  // routed here but never inserted: true count is 0
  }
  return table_.estimate(element);
}

uint64_t SingleThresholdLcms::memory_bytes() const {
  return table_.memory_bytes() + ub_.memory_bytes();
}

uint64_t SingleThresholdLcms::memory_recount() const {
  return table_.params().width * table_.params().depth * table_.params().counter_bytes +
         static_cast<uint64_t>(ub_.per_element_bytes()) * ub_.unique_count();
}

OptLcms::OptLcms(std::shared_ptr<const ScoreOracle> oracle, PartitionPlan plan, uint64_t seed)
    : oracle_(std::move(oracle)), plan_(std::move(plan)),
      ub_(static_cast<uint32_t>(plan_.ub_bytes)) {
  tables_.reserve(plan_.group_count());
  for (size_t g = 0; g < plan_.group_count(); ++g) {
    CmsParams p = CmsParams::from_dims(plan_.dims[g].width, plan_.dims[g].depth,
                                       static_cast<uint32_t>(plan_.counter_bytes));
    p.epsilon = plan_.epsilons[g];
    p.delta = plan_.deltas[g];
    tables_.emplace_back(p, splitmix64(seed + g + 1));
  }
}

OptLcms::OptLcms(std::shared_ptr<const ScoreOracle> oracle, PartitionPlan plan,
                 std::vector<SketchTable> tables, UniqueBucket ub)
    : oracle_(std::move(oracle)),
      plan_(std::move(plan)),
      tables_(std::move(tables)),
      ub_(std::move(ub)) {
  if (tables_.size() != plan_.group_count()) {
    throw std::invalid_argument("OptLcms: table count does not match the plan");
  }
}

void OptLcms::insert(std::string_view element, uint64_t count) {
  const int g = route(element);
  if (g < 0) {
    ub_.insert(element, count);
  } else {
    tables_[static_cast<size_t>(g)].update(element, count);
  }
}

uint64_t OptLcms::estimate(std::string_view element) const {
  const int g = route(element);
  if (g < 0) {
    auto hit = ub_.query(element);
    return hit ? *hit : 0;
  }
  return tables_[static_cast<size_t>(g)].estimate(element);
}

uint64_t OptLcms::memory_bytes() const {
  uint64_t bytes = ub_.memory_bytes();
  for (const auto& t : tables_) bytes += t.memory_bytes();
  return bytes;
}

uint64_t OptLcms::memory_recount() const {
  uint64_t bytes = static_cast<uint64_t>(ub_.per_element_bytes()) * ub_.unique_count();
  for (const auto& t : tables_) {
    bytes += t.params().width * t.params().depth * t.params().counter_bytes;
  }
  return bytes;
}

uint64_t OptLcms::total_inserted() const {
  uint64_t total = ub_.total_count();
  for (const auto& t : tables_) total += t.total_count();
  return total;
}

BuildResult build_plain_cms(const AggregatedStream& stream, const BuildConfig& cfg) {
  if (stream.unique_count() == 0) throw std::invalid_argument("build_plain_cms: empty stream");
  const auto t0 = Clock::now();
  const auto fps = fingerprints_of(stream);

  std::vector<GridPoint> record;
  std::optional<SketchTable> best;
  double best_err = 0.0;

  for (int depth = 1; depth <= cfg.cms_max_depth; ++depth) {
    const uint64_t width =
        cfg.memory_bytes / (static_cast<uint64_t>(depth) * cfg.counter_bytes);
    if (width == 0) continue;
    const auto c0 = Clock::now();
    SketchTable table(CmsParams::from_dims(width, static_cast<uint64_t>(depth),
                                           cfg.counter_bytes),
                      splitmix64(cfg.seed ^ (0xc3a5u + static_cast<uint64_t>(depth))));
    kernels::update_bulk(table, fps, stream.counts);
    const double err = replay_mean_error(stream, cfg.query_mode,
                                         [&](size_t i) { return table.estimate(fps[i]); });
    record.push_back({2.0, 0, width, static_cast<uint64_t>(depth), err, seconds_since(c0)});
    if (!best || err < best_err) {
      best = std::move(table);
      best_err = err;
    }
  }
  if (!best) {
    throw InfeasibleError("build_plain_cms: budget below one counter");
  }

  BuildResult out;
  out.estimator = std::make_unique<PlainCms>(std::move(*best), std::move(record));
  out.build_seconds = seconds_since(t0);
  return out;
}

BuildResult build_single_threshold_lcms(const AggregatedStream& full,
                                        const AggregatedStream& train,
                                        std::shared_ptr<const ScoreOracle> oracle,
                                        const BuildConfig& cfg) {
  if (full.unique_count() == 0 || train.unique_count() == 0) {
    throw std::invalid_argument("build_single_threshold_lcms: empty stream");
  }
  if (cfg.memory_bytes < cfg.counter_bytes) {
    throw InfeasibleError("build_single_threshold_lcms: budget below one counter");
  }
  const auto t0 = Clock::now();

  // Training-slice scores, sorted descending: threshold candidates place a
  // chosen share of the budget's UB capacity above the cut.
  std::vector<double> train_scores(train.keys.size());
  for (size_t i = 0; i < train.keys.size(); ++i) train_scores[i] = oracle->score(train.keys[i]);
  std::vector<double> desc(train_scores);
  std::sort(desc.begin(), desc.end(), std::greater<>());

  const uint64_t ub_capacity = std::min<uint64_t>(
      desc.size(), (cfg.memory_bytes - cfg.counter_bytes) / cfg.ub_bytes);
  const int K = std::max(1, cfg.lcms_thresholds);

  std::vector<uint64_t> depth_grid;
  for (int i = 0, d = 1; i < std::max(1, cfg.lcms_depths); ++i, d *= 2) {
    depth_grid.push_back(static_cast<uint64_t>(d));
  }

  const auto train_fps = fingerprints_of(train);

  struct Candidate {
    double threshold;
    uint64_t depth;
  };
  std::vector<Candidate> grid;
  for (int i = 0; i < K; ++i) {
    const uint64_t n_target = ub_capacity * static_cast<uint64_t>(i) / static_cast<uint64_t>(K);
    const double threshold = n_target == 0 ? 2.0 : desc[n_target - 1];
    for (uint64_t d : depth_grid) grid.push_back({threshold, d});
  }

  std::vector<GridPoint> record;
  double best_err = 0.0;
  std::optional<Candidate> best;

  for (const auto& cand : grid) {
    const auto c0 = Clock::now();
    uint64_t n_ub = 0;
    for (double s : train_scores) {
      if (s >= cand.threshold) ++n_ub;
    }
    const uint64_t ub_cost = n_ub * cfg.ub_bytes;
    if (ub_cost + cand.depth * cfg.counter_bytes > cfg.memory_bytes) continue;
    const uint64_t width = (cfg.memory_bytes - ub_cost) / (cand.depth * cfg.counter_bytes);
    if (width == 0) continue;

    SketchTable table(CmsParams::from_dims(width, cand.depth, cfg.counter_bytes),
                      splitmix64(cfg.seed ^ (0x71cdu + cand.depth)));
    UniqueBucket ub(cfg.ub_bytes);
    for (size_t i = 0; i < train.keys.size(); ++i) {
      if (train_scores[i] >= cand.threshold) {
        ub.insert(train.keys[i], train.counts[i]);
      } else {
        table.update(train_fps[i], train.counts[i]);
      }
    }
    const double err =
        replay_mean_error(train, cfg.query_mode, [&](size_t i) {
          if (train_scores[i] >= cand.threshold) return train.counts[i];
          return table.estimate(train_fps[i]);
        });
    record.push_back({cand.threshold, n_ub, width, cand.depth, err, seconds_since(c0)});
    if (!best || err < best_err) {
      best = cand;
      best_err = err;
    }
  }
  if (!best) {
    throw InfeasibleError("build_single_threshold_lcms: no feasible configuration");
  }

  // Final build on the full stream with the chosen (threshold, depth);
  // width comes from the realized UB population.
  std::vector<double> full_scores(full.keys.size());
  uint64_t n_pred = 0;
  for (size_t i = 0; i < full.keys.size(); ++i) {
    full_scores[i] = oracle->score(full.keys[i]);
    if (full_scores[i] >= best->threshold) ++n_pred;
  }
  if (n_pred * cfg.ub_bytes + best->depth * cfg.counter_bytes > cfg.memory_bytes) {
    // The full stream outgrew the tuned UB; fall back to sketch-only.
    best->threshold = 2.0;
    n_pred = 0;
  }
  const uint64_t width =
      (cfg.memory_bytes - n_pred * cfg.ub_bytes) / (best->depth * cfg.counter_bytes);
  if (width == 0) {
    throw InfeasibleError("build_single_threshold_lcms: chosen configuration lost feasibility");
  }

  SketchTable table(CmsParams::from_dims(width, best->depth, cfg.counter_bytes),
                    splitmix64(cfg.seed ^ 0x11cdull));
  UniqueBucket ub(cfg.ub_bytes);
  std::vector<uint64_t> cms_fps, cms_counts;
  cms_fps.reserve(full.keys.size());
  cms_counts.reserve(full.keys.size());
  for (size_t i = 0; i < full.keys.size(); ++i) {
    if (full_scores[i] >= best->threshold) {
      ub.insert(full.keys[i], full.counts[i]);
    } else {
      cms_fps.push_back(fingerprint64(full.keys[i]));
      cms_counts.push_back(full.counts[i]);
    }
  }
  kernels::update_bulk(table, cms_fps, cms_counts);

  BuildResult out;
  out.estimator = std::make_unique<SingleThresholdLcms>(std::move(oracle), best->threshold,
                                                        std::move(table), std::move(ub),
                                                        std::move(record));
  out.build_seconds = seconds_since(t0);
  return out;
}

BuildResult build_optlcms(const AggregatedStream& full,
                          std::shared_ptr<const ScoreOracle> oracle, const BuildConfig& cfg) {
  if (full.unique_count() == 0) throw std::invalid_argument("build_optlcms: empty stream");
  const auto t0 = Clock::now();

  ScoreHistogram hist = build_histogram(*oracle, full, cfg.query_mode,
                                        static_cast<size_t>(std::max(2, cfg.bins)));
  OptimizerInputs in;
  in.epsilon_global = cfg.effective_epsilon();
  in.total_mass = full.total;
  in.memory_budget = static_cast<double>(cfg.memory_bytes);
  in.ub_bytes = static_cast<double>(cfg.ub_bytes);
  in.counter_bytes = static_cast<double>(cfg.counter_bytes);

  PartitionPlan plan = sweep_ub_boundary(hist, std::max(1, cfg.groups), in);

  auto structure = std::make_unique<OptLcms>(std::move(oracle), std::move(plan), cfg.seed);

  // Route once, then batch per destination so group updates use the bulk path.
  const auto& p = structure->plan();
  const size_t groups = p.group_count();
  std::vector<std::vector<uint64_t>> fps(groups), counts(groups);
  for (size_t i = 0; i < full.keys.size(); ++i) {
    const int g = structure->route(full.keys[i]);
    if (g < 0) {
      structure->mutable_ub().insert(full.keys[i], full.counts[i]);
    } else {
      fps[static_cast<size_t>(g)].push_back(fingerprint64(full.keys[i]));
      counts[static_cast<size_t>(g)].push_back(full.counts[i]);
    }
  }
  for (size_t g = 0; g < groups; ++g) {
    kernels::update_bulk(structure->mutable_tables()[g], fps[g], counts[g]);
  }

  BuildResult out;
  out.estimator = std::move(structure);
  out.build_seconds = seconds_since(t0);
  return out;
}

}  // namespace optlcms
