#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "optlcms/cms.hpp"
#include "optlcms/optimizer.hpp"
#include "optlcms/score.hpp"
#include "optlcms/stream.hpp"
#include "optlcms/unique_bucket.hpp"

namespace optlcms {

// Common face of the three structures under evaluation. Estimates never
// undershoot the true count. memory_bytes is the accounted structure
// memory; memory_recount rebuilds it from parts as the audit.
class FrequencyEstimator {
 public:
  virtual ~FrequencyEstimator() = default;
  virtual uint64_t estimate(std::string_view element) const = 0;
  virtual uint64_t memory_bytes() const = 0;
  virtual uint64_t memory_recount() const = 0;
  virtual uint64_t model_bytes() const { return 0; }
  virtual std::string_view method_name() const = 0;
  virtual uint64_t ub_unique_realized() const { return 0; }
};

struct BuildConfig {
  uint64_t memory_bytes = 1'000'000;
  double epsilon = 0.0;  // 0 means the e*b/M rule
  int groups = 10;
  int bins = 100;
  QueryMode query_mode = QueryMode::kUniform;
  uint64_t seed = 0;
  uint32_t counter_bytes = 4;
  uint32_t ub_bytes = 20;
  double train_fraction = 0.2;
  int lcms_thresholds = 5;
  int lcms_depths = 4;  // depth candidates 1, 2, 4, 8, ...
  int cms_max_depth = 8;

  double effective_epsilon() const;
};

// One visited configuration of a baseline's parameter search.
struct GridPoint {
  double threshold = 2.0;  // above any score means empty UB
  uint64_t ub_unique = 0;
  uint64_t width = 0;
  uint64_t depth = 0;
  double measured_error = 0.0;
  double seconds = 0.0;
};

class PlainCms : public FrequencyEstimator {
 public:
  PlainCms(SketchTable table, std::vector<GridPoint> search);

  uint64_t estimate(std::string_view element) const override;
  uint64_t memory_bytes() const override { return table_.memory_bytes(); }
  uint64_t memory_recount() const override;
  std::string_view method_name() const override { return "cms"; }

  const SketchTable& table() const { return table_; }
  const std::vector<GridPoint>& search_record() const { return search_; }

 private:
  SketchTable table_;
  std::vector<GridPoint> search_;
};

class SingleThresholdLcms : public FrequencyEstimator {
 public:
  SingleThresholdLcms(std::shared_ptr<const ScoreOracle> oracle, double threshold,
                      SketchTable table, UniqueBucket ub, std::vector<GridPoint> search);

  uint64_t estimate(std::string_view element) const override;
  uint64_t memory_bytes() const override;
  uint64_t memory_recount() const override;
  uint64_t model_bytes() const override { return oracle_->footprint_bytes(); }
  std::string_view method_name() const override { return "lcms"; }
  uint64_t ub_unique_realized() const override { return ub_.unique_count(); }

  double threshold() const { return threshold_; }
  const SketchTable& table() const { return table_; }
  const UniqueBucket& ub() const { return ub_; }
  const ScoreOracle& oracle() const { return *oracle_; }
  std::shared_ptr<const ScoreOracle> oracle_ptr() const { return oracle_; }
  const std::vector<GridPoint>& search_record() const { return search_; }

 private:
  std::shared_ptr<const ScoreOracle> oracle_;
  double threshold_;
  SketchTable table_;
  UniqueBucket ub_;
  std::vector<GridPoint> search_;
};

// Score-partitioned structure: UB at and above the top threshold, one
// sketch per score group below it.
class OptLcms : public FrequencyEstimator {
 public:
  OptLcms(std::shared_ptr<const ScoreOracle> oracle, PartitionPlan plan, uint64_t seed);
  OptLcms(std::shared_ptr<const ScoreOracle> oracle, PartitionPlan plan,
          std::vector<SketchTable> tables, UniqueBucket ub);

  // -1 means UB, otherwise the group index.
  int route(std::string_view element) const {
    return plan_.group_of_score(oracle_->score(element));
  }

  void insert(std::string_view element, uint64_t count);

  uint64_t estimate(std::string_view element) const override;
  uint64_t memory_bytes() const override;
  uint64_t memory_recount() const override;
  uint64_t model_bytes() const override { return oracle_->footprint_bytes(); }
  std::string_view method_name() const override { return "optlcms"; }
  uint64_t ub_unique_realized() const override { return ub_.unique_count(); }

  const PartitionPlan& plan() const { return plan_; }
  const std::vector<SketchTable>& tables() const { return tables_; }
  std::vector<SketchTable>& mutable_tables() { return tables_; }
  const UniqueBucket& ub() const { return ub_; }
  UniqueBucket& mutable_ub() { return ub_; }
  const ScoreOracle& oracle() const { return *oracle_; }
  std::shared_ptr<const ScoreOracle> oracle_ptr() const { return oracle_; }
  uint64_t total_inserted() const;

 private:
  std::shared_ptr<const ScoreOracle> oracle_;
  PartitionPlan plan_;
  std::vector<SketchTable> tables_;
  UniqueBucket ub_;
};

struct BuildResult {
  std::unique_ptr<FrequencyEstimator> estimator;
  double build_seconds = 0.0;
};

// Depth grid 1..cms_max_depth, width from the budget, best configuration
// by replayed mean error. Throws InfeasibleError when the budget cannot
// hold a single counter.
BuildResult build_plain_cms(const AggregatedStream& stream, const BuildConfig& cfg);

// Grid over (threshold, depth) tuned on the training slice, final build on
// the full stream. Deliberately the slow measured procedure.
BuildResult build_single_threshold_lcms(const AggregatedStream& full,
                                        const AggregatedStream& train,
                                        std::shared_ptr<const ScoreOracle> oracle,
                                        const BuildConfig& cfg);

// Histogram -> boundary sweep -> KKT deltas -> routed insertion.
BuildResult build_optlcms(const AggregatedStream& full,
                          std::shared_ptr<const ScoreOracle> oracle, const BuildConfig& cfg);

}  // namespace optlcms
