#include "optlcms/cms.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace optlcms {

uint64_t saturation_cap_for(uint32_t counter_bytes) {
  if (counter_bytes >= 8) return std::numeric_limits<uint64_t>::max();
  return (uint64_t{1} << (8 * counter_bytes)) - 1;
}

CmsParams CmsParams::from_dims(uint64_t width, uint64_t depth, uint32_t counter_bytes) {
  if (width == 0 || depth == 0) throw std::invalid_argument("zero sketch dimension");
  CmsParams p;
  p.width = width;
  p.depth = depth;
  p.counter_bytes = counter_bytes;
  p.epsilon = std::numbers::e / static_cast<double>(width);
  p.delta = std::exp(-static_cast<double>(depth));
  return p;
}

CmsParams derive_dims(double epsilon, double delta, uint32_t counter_bytes) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(delta > 0.0) || delta >= 1.0) {
    throw std::invalid_argument("delta must lie in (0, 1); delta >= 1 gives a zero-row table");
  }
  if (counter_bytes == 0) throw std::invalid_argument("counter_bytes must be positive");
  CmsParams p;
  p.epsilon = epsilon;
  p.delta = delta;
  p.counter_bytes = counter_bytes;
  p.width = static_cast<uint64_t>(std::ceil(std::numbers::e / epsilon));
  p.depth = static_cast<uint64_t>(std::ceil(std::log(1.0 / delta)));
  if (p.depth == 0) p.depth = 1;  // delta just below 1 can round to zero rows
  return p;
}

SketchTable::SketchTable(const CmsParams& params, uint64_t seed)
    : params_(params),
      rows_(make_row_hashes(seed, params.depth)),
      counters_(params.width * params.depth, 0),
      cap_(saturation_cap_for(params.counter_bytes)) {
  if (params.width == 0 || params.depth == 0) {
    throw std::invalid_argument("sketch table needs width >= 1 and depth >= 1");
  }
}

void SketchTable::update(uint64_t fingerprint, uint64_t count) {
  const uint64_t w = params_.width;
  for (size_t i = 0; i < rows_.size(); ++i) {
    uint64_t& c = counters_[i * w + rows_[i].index(fingerprint, w)];
    c = saturating_add(c, count, cap_);
  }
  total_count_ += count;
}

uint64_t SketchTable::estimate(uint64_t fingerprint) const {
  const uint64_t w = params_.width;
  uint64_t best = std::numeric_limits<uint64_t>::max();
  for (size_t i = 0; i < rows_.size(); ++i) {
    uint64_t v = counters_[i * w + rows_[i].index(fingerprint, w)];
    if (v < best) best = v;
  }
  return best == std::numeric_limits<uint64_t>::max() ? 0 : best;
}

uint64_t SketchTable::row_sum(size_t row) const {
  uint64_t s = 0;
  for (uint64_t j = 0; j < params_.width; ++j) s += counters_[row * params_.width + j];
  return s;
}

void SketchTable::restore(std::vector<RowHash> rows, std::vector<uint64_t> counters,
                          uint64_t total) {
  if (rows.size() != params_.depth || counters.size() != params_.width * params_.depth) {
    throw std::invalid_argument("restore: shape mismatch");
  }
  rows_ = std::move(rows);
  counters_ = std::move(counters);
  total_count_ = total;
}

}  // namespace optlcms
