#pragma once

#include <cstdint>
#include <span>

#include "optlcms/cms.hpp"

namespace optlcms::kernels {

// Bulk sketch update. The parallel version distributes items across
// threads and applies saturating adds through atomics; clamped integer
// adds commute, so the final counters are identical to the serial
// reference for any thread count.
void update_bulk(SketchTable& table, std::span<const uint64_t> fingerprints,
                 std::span<const uint64_t> counts);
void update_bulk_serial(SketchTable& table, std::span<const uint64_t> fingerprints,
                        std::span<const uint64_t> counts);

// Bulk point queries over a frozen table.
void estimate_bulk(const SketchTable& table, std::span<const uint64_t> fingerprints,
                   std::span<uint64_t> out);
void estimate_bulk_serial(const SketchTable& table, std::span<const uint64_t> fingerprints,
                          std::span<uint64_t> out);

// Weighted error reduction against exact counts. Integer accumulators keep
// the result independent of the reduction order.
struct EvalAccum {
  unsigned __int128 weighted_error = 0;
  uint64_t intolerable_weight = 0;
  uint64_t weight = 0;
  double sum_weight_sq = 0.0;  // for effective-sample-size diagnostics

  EvalAccum& operator+=(const EvalAccum& o) {
    weighted_error += o.weighted_error;
    intolerable_weight += o.intolerable_weight;
    weight += o.weight;
    sum_weight_sq += o.sum_weight_sq;
    return *this;
  }
};

// estimates[i] >= truths[i] is assumed (one-sided estimators).
EvalAccum accumulate_eval(std::span<const uint64_t> estimates, std::span<const uint64_t> truths,
                          std::span<const uint64_t> weights, double error_threshold);
EvalAccum accumulate_eval_serial(std::span<const uint64_t> estimates,
                                 std::span<const uint64_t> truths,
                                 std::span<const uint64_t> weights, double error_threshold);

}  // namespace optlcms::kernels
