#include "optlcms/stream.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include "optlcms/errors.hpp"
#include "optlcms/hash.hpp"

namespace optlcms {

void AggregatedStream::add(std::string_view token, uint64_t count) {
  auto [it, fresh] = index_.try_emplace(std::string(token), keys.size());
  if (fresh) {
    keys.emplace_back(token);
    counts.push_back(count);
  } else {
    counts[it->second] += count;
  }
  total += count;
}

std::vector<double> zipf_probabilities(uint64_t support, double exponent) {
  if (support == 0) throw std::invalid_argument("zipf: support must be positive");
  if (!(exponent > 0.0)) throw std::invalid_argument("zipf: exponent must be positive");
  std::vector<double> p(support);
  double norm = 0.0;
  for (uint64_t r = 0; r < support; ++r) {
    p[r] = std::pow(static_cast<double>(r + 1), -exponent);
    norm += p[r];
  }
  for (auto& x : p) x /= norm;
  return p;
}

namespace {

constexpr uint64_t kChunk = 1 << 16;

// One uniform double in [0, 1) per position, from a per-chunk mt19937_64.
// The chunking makes the sequence independent of the thread count.
void fill_chunk(const std::vector<double>& cdf, uint64_t seed, uint64_t chunk,
                uint32_t* out, uint64_t n) {
  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(chunk + 1)));
  for (uint64_t i = 0; i < n; ++i) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    size_t r = static_cast<size_t>(it - cdf.begin());
    if (r >= cdf.size()) r = cdf.size() - 1;
    out[i] = static_cast<uint32_t>(r);
  }
}

}  // namespace

std::vector<uint32_t> gen_zipf_ranks(const StreamSpec& spec) {
  const auto probs = zipf_probabilities(spec.support_size, spec.zipf_exponent);
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    cdf[i] = acc;
  }
  std::vector<uint32_t> ranks(spec.stream_length);
  const uint64_t chunks = (spec.stream_length + kChunk - 1) / kChunk;
  const ptrdiff_t nc = static_cast<ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static)
  for (ptrdiff_t c = 0; c < nc; ++c) {
    const uint64_t begin = static_cast<uint64_t>(c) * kChunk;
    const uint64_t len = std::min<uint64_t>(kChunk, spec.stream_length - begin);
    fill_chunk(cdf, spec.seed, static_cast<uint64_t>(c), ranks.data() + begin, len);
  }
  return ranks;
}

void write_zipf_stream(const StreamSpec& spec, const std::string& path) {
  const auto ranks = gen_zipf_ranks(spec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  char buf[16];
  std::string block;
  block.reserve(1 << 20);
  for (uint32_t r : ranks) {
    auto res = std::to_chars(buf, buf + sizeof(buf), r + 1);
    block.append(buf, res.ptr);
    block.push_back('\n');
    if (block.size() > (1 << 20) - 32) {
      out.write(block.data(), static_cast<std::streamsize>(block.size()));
      block.clear();
    }
  }
  out.write(block.data(), static_cast<std::streamsize>(block.size()));
  if (!out) throw IoError("write failed: " + path);
}

AggregatedStream aggregate_zipf(const StreamSpec& spec) {
  return aggregate_zipf_split(spec, 0.0).full;
}

SplitStream aggregate_zipf_split(const StreamSpec& spec, double train_fraction) {
  const auto ranks = gen_zipf_ranks(spec);
  const uint64_t train_len =
      static_cast<uint64_t>(std::ceil(train_fraction * static_cast<double>(ranks.size())));
  SplitStream out;
  char buf[16];
  for (size_t i = 0; i < ranks.size(); ++i) {
    auto res = std::to_chars(buf, buf + sizeof(buf), ranks[i] + 1);
    std::string_view token(buf, static_cast<size_t>(res.ptr - buf));
    out.full.add(token, 1);
    if (i < train_len) out.train.add(token, 1);
  }
  return out;
}

namespace {

// Lines are either "token" or "token<TAB>count".
struct ParsedLine {
  std::string_view token;
  uint64_t count = 1;
};

bool parse_line(std::string_view line, ParsedLine& out, std::string& err) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.empty()) return false;
  const size_t tab = line.find('\t');
  if (tab == std::string_view::npos) {
    out.token = line;
    out.count = 1;
    return true;
  }
  out.token = line.substr(0, tab);
  std::string_view num = line.substr(tab + 1);
  uint64_t v = 0;
  auto res = std::from_chars(num.data(), num.data() + num.size(), v);
  if (res.ec != std::errc{} || res.ptr != num.data() + num.size() || v == 0 ||
      out.token.empty()) {
    err = "bad aggregated row: ";
    err.append(line);
    return false;
  }
  out.count = v;
  return true;
}

std::vector<std::pair<std::string, uint64_t>> read_rows(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<std::pair<std::string, uint64_t>> rows;
  std::string line;
  while (std::getline(in, line)) {
    ParsedLine p;
    std::string err;
    if (!parse_line(line, p, err)) {
      if (!err.empty()) throw IoError(err + " in " + path);
      continue;  // blank line
    }
    rows.emplace_back(std::string(p.token), p.count);
  }
  if (in.bad()) throw IoError("read failed: " + path);
  if (rows.empty()) throw IoError("no tokens in: " + path);
  return rows;
}

}  // namespace

AggregatedStream read_token_file(const std::string& path) {
  AggregatedStream out;
  for (const auto& [token, count] : read_rows(path)) out.add(token, count);
  return out;
}

SplitStream read_token_file_split(const std::string& path, double train_fraction) {
  const auto rows = read_rows(path);
  uint64_t total = 0;
  for (const auto& r : rows) total += r.second;
  const uint64_t train_target =
      static_cast<uint64_t>(std::ceil(train_fraction * static_cast<double>(total)));
  SplitStream out;
  uint64_t seen = 0;
  for (const auto& [token, count] : rows) {
    out.full.add(token, count);
    if (seen < train_target) out.train.add(token, count);
    seen += count;
  }
  return out;
}

}  // namespace optlcms
