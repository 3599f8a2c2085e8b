#pragma once

#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

#include "optlcms/hash.hpp"

namespace optlcms {

// Sketch dimensions: width = ceil(e/epsilon), depth = ceil(ln(1/delta)).
struct CmsParams {
  double epsilon = 0.0;
  double delta = 0.0;
  uint64_t width = 0;
  uint64_t depth = 0;
  uint32_t counter_bytes = 4;

  uint64_t memory_bytes() const { return width * depth * counter_bytes; }

  // Explicit dimensions with the implied (epsilon, delta). Used by the
  // baselines that pick (width, depth) from a budget directly.
  static CmsParams from_dims(uint64_t width, uint64_t depth, uint32_t counter_bytes);
};

// Rejects epsilon <= 0 and delta outside (0, 1); delta = 1 would mean a
// zero-row table.
CmsParams derive_dims(double epsilon, double delta, uint32_t counter_bytes);

// Count-Min Sketch over 64-bit element fingerprints. Counters saturate at
// the largest value representable in counter_bytes instead of wrapping.
// Writes need exclusive access; concurrent reads are safe once updates stop.
class SketchTable {
 public:
  SketchTable() = default;
  SketchTable(const CmsParams& params, uint64_t seed);

  void update(uint64_t fingerprint, uint64_t count);
  void update(std::string_view element, uint64_t count) {
    update(fingerprint64(element), count);
  }

  uint64_t estimate(uint64_t fingerprint) const;
  uint64_t estimate(std::string_view element) const {
    return estimate(fingerprint64(element));
  }

  const CmsParams& params() const { return params_; }
  uint64_t total_count() const { return total_count_; }
  uint64_t memory_bytes() const { return params_.memory_bytes(); }
  uint64_t saturation_cap() const { return cap_; }
  uint64_t row_sum(size_t row) const;

  const std::vector<uint64_t>& counters() const { return counters_; }
  std::vector<uint64_t>& mutable_counters() { return counters_; }
  const std::vector<RowHash>& row_hashes() const { return rows_; }

  // Raw-state hooks for deserialization.
  void restore(std::vector<RowHash> rows, std::vector<uint64_t> counters, uint64_t total);

  uint64_t cell(size_t row, size_t col) const {
    return counters_[row * params_.width + col];
  }

 private:
  friend struct BulkKernels;

  CmsParams params_;
  std::vector<RowHash> rows_;
  std::vector<uint64_t> counters_;  // row-major depth x width
  uint64_t total_count_ = 0;
  uint64_t cap_ = std::numeric_limits<uint64_t>::max();
};

uint64_t saturation_cap_for(uint32_t counter_bytes);

inline uint64_t saturating_add(uint64_t value, uint64_t inc, uint64_t cap) {
  uint64_t s = value + inc;
  if (s < value || s > cap) return cap;
  return s;
}

}  // namespace optlcms
