#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace optlcms {

// Synthetic Zipf stream description; (spec, seed) fully determines the
// generated token sequence.
struct StreamSpec {
  uint64_t support_size = 100000;
  uint64_t stream_length = 1000000;
  double zipf_exponent = 1.0;
  uint64_t seed = 0;
};

// Multiset of tokens in first-appearance order with exact counts. Doubles
// as the exact-count oracle in tests and evaluation.
struct AggregatedStream {
  std::vector<std::string> keys;
  std::vector<uint64_t> counts;
  uint64_t total = 0;

  size_t unique_count() const { return keys.size(); }

  void add(std::string_view token, uint64_t count = 1);

  uint64_t count_of(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? 0 : counts[it->second];
  }

  bool contains(std::string_view token) const {
    return index_.contains(std::string(token));
  }

 private:
  std::unordered_map<std::string, size_t> index_;
};

// Zipf(support, exponent) rank probabilities, normalized.
std::vector<double> zipf_probabilities(uint64_t support, double exponent);

// Token at stream position i is the decimal 1-based rank label. Output is
// identical for any thread count: positions are filled in fixed chunks,
// each chunk seeded from (seed, chunk index).
std::vector<uint32_t> gen_zipf_ranks(const StreamSpec& spec);

void write_zipf_stream(const StreamSpec& spec, const std::string& path);

AggregatedStream aggregate_zipf(const StreamSpec& spec);

// Splits the rank sequence: first ceil(fraction * length) tokens form the
// training prefix. Used to train the score oracle.
struct SplitStream {
  AggregatedStream full;
  AggregatedStream train;
};
SplitStream aggregate_zipf_split(const StreamSpec& spec, double train_fraction);

// Text ingestion: UTF-8, one token per line, or "token<TAB>count" rows.
AggregatedStream read_token_file(const std::string& path);
SplitStream read_token_file_split(const std::string& path, double train_fraction);

}  // namespace optlcms
