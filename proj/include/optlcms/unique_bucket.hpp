#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace optlcms {

// Exact counter for high-score elements. Memory is accounted as
// per_element_bytes per unique key, matching the cn term of the budget.
class UniqueBucket {
 public:
  explicit UniqueBucket(uint32_t per_element_bytes = 20)
      : per_element_bytes_(per_element_bytes) {}

  void insert(std::string_view element, uint64_t count) {
    auto [it, fresh] = entries_.try_emplace(std::string(element), 0);
    it->second += count;
    total_count_ += count;
    (void)fresh;
  }

  std::optional<uint64_t> query(std::string_view element) const {
    auto it = entries_.find(std::string(element));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  uint64_t unique_count() const { return entries_.size(); }    // n
  uint64_t total_count() const { return total_count_; }        // N_UB
  uint64_t memory_bytes() const { return per_element_bytes_ * entries_.size(); }
  uint32_t per_element_bytes() const { return per_element_bytes_; }

  const std::unordered_map<std::string, uint64_t>& entries() const { return entries_; }

  void restore(std::unordered_map<std::string, uint64_t> entries, uint64_t total) {
    entries_ = std::move(entries);
    total_count_ = total;
  }

 private:
  uint32_t per_element_bytes_;
  std::unordered_map<std::string, uint64_t> entries_;
  uint64_t total_count_ = 0;
};

}  // namespace optlcms
