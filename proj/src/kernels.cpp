#include "optlcms/kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace optlcms {

// Raw access for the bulk paths; declared a friend of SketchTable.
struct BulkKernels {
  static std::vector<uint64_t>& counters(SketchTable& t) { return t.counters_; }
  static void add_total(SketchTable& t, uint64_t n) { t.total_count_ += n; }
};

namespace kernels {

namespace {

void check_sizes(size_t a, size_t b) {
  if (a != b) throw std::invalid_argument("bulk kernel: size mismatch");
}

}  // namespace

void update_bulk_serial(SketchTable& table, std::span<const uint64_t> fingerprints,
                        std::span<const uint64_t> counts) {
  check_sizes(fingerprints.size(), counts.size());
  const auto& rows = table.row_hashes();
  const uint64_t w = table.params().width;
  const uint64_t cap = table.saturation_cap();
  auto& cells = BulkKernels::counters(table);
  uint64_t total = 0;
  for (size_t i = 0; i < fingerprints.size(); ++i) {
    for (size_t r = 0; r < rows.size(); ++r) {
      uint64_t& c = cells[r * w + rows[r].index(fingerprints[i], w)];
      c = saturating_add(c, counts[i], cap);
    }
    total += counts[i];
  }
  BulkKernels::add_total(table, total);
}

void update_bulk(SketchTable& table, std::span<const uint64_t> fingerprints,
                 std::span<const uint64_t> counts) {
  check_sizes(fingerprints.size(), counts.size());
  const auto& rows = table.row_hashes();
  const uint64_t w = table.params().width;
  const uint64_t cap = table.saturation_cap();
  auto& cells = BulkKernels::counters(table);
  const ptrdiff_t n = static_cast<ptrdiff_t>(fingerprints.size());
  uint64_t total = 0;

#pragma omp parallel for schedule(static) reduction(+ : total)
  for (ptrdiff_t i = 0; i < n; ++i) {
    for (size_t r = 0; r < rows.size(); ++r) {
      std::atomic_ref<uint64_t> cell(cells[r * w + rows[r].index(fingerprints[i], w)]);
      uint64_t cur = cell.load(std::memory_order_relaxed);
      uint64_t next;
      do {
        next = saturating_add(cur, counts[i], cap);
      } while (!cell.compare_exchange_weak(cur, next, std::memory_order_relaxed));
    }
    total += counts[i];
  }
  BulkKernels::add_total(table, total);
}

void estimate_bulk_serial(const SketchTable& table, std::span<const uint64_t> fingerprints,
                          std::span<uint64_t> out) {
  check_sizes(fingerprints.size(), out.size());
  for (size_t i = 0; i < fingerprints.size(); ++i) out[i] = table.estimate(fingerprints[i]);
}

void estimate_bulk(const SketchTable& table, std::span<const uint64_t> fingerprints,
                   std::span<uint64_t> out) {
  check_sizes(fingerprints.size(), out.size());
  const ptrdiff_t n = static_cast<ptrdiff_t>(fingerprints.size());
#pragma omp parallel for schedule(static)
  for (ptrdiff_t i = 0; i < n; ++i) out[i] = table.estimate(fingerprints[i]);
}

EvalAccum accumulate_eval_serial(std::span<const uint64_t> estimates,
                                 std::span<const uint64_t> truths,
                                 std::span<const uint64_t> weights, double error_threshold) {
  check_sizes(estimates.size(), truths.size());
  check_sizes(estimates.size(), weights.size());
  EvalAccum acc;
  for (size_t i = 0; i < estimates.size(); ++i) {
    const uint64_t err = estimates[i] - truths[i];
    acc.weighted_error += static_cast<unsigned __int128>(err) * weights[i];
    if (static_cast<double>(err) > error_threshold) acc.intolerable_weight += weights[i];
    acc.weight += weights[i];
    acc.sum_weight_sq += static_cast<double>(weights[i]) * static_cast<double>(weights[i]);
  }
  return acc;
}

EvalAccum accumulate_eval(std::span<const uint64_t> estimates, std::span<const uint64_t> truths,
                          std::span<const uint64_t> weights, double error_threshold) {
  check_sizes(estimates.size(), truths.size());
  check_sizes(estimates.size(), weights.size());
  const ptrdiff_t n = static_cast<ptrdiff_t>(estimates.size());
  EvalAccum acc;
#pragma omp parallel
  {
    EvalAccum local;
#pragma omp for schedule(static) nowait
    for (ptrdiff_t i = 0; i < n; ++i) {
      const uint64_t err = estimates[i] - truths[i];
      local.weighted_error += static_cast<unsigned __int128>(err) * weights[i];
      if (static_cast<double>(err) > error_threshold) local.intolerable_weight += weights[i];
      local.weight += weights[i];
      local.sum_weight_sq += static_cast<double>(weights[i]) * static_cast<double>(weights[i]);
    }
#pragma omp critical(optlcms_eval_accum)
    acc += local;
  }
  return acc;
}

}  // namespace kernels
}  // namespace optlcms
