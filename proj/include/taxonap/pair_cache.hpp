#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <list>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <utility>

namespace taxonap {

// Bounded LRU memo keyed by a 64-bit pair key. Sharded so concurrent readers
// of one taxonomy rarely contend on the same mutex.
class PairCache {
 public:
  explicit PairCache(std::size_t capacity);

  std::optional<double> get(std::uint64_t key);
  void put(std::uint64_t key, double value);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const;

  static std::uint64_t key(std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return (std::uint64_t{a} << 32) | b;
  }

 private:
  static constexpr std::size_t kShards = 16;

  struct Shard {
    mutable std::mutex mutex;
    std::list<std::pair<std::uint64_t, double>> order;  // front = most recent
    std::unordered_map<std::uint64_t, std::list<std::pair<std::uint64_t, double>>::iterator> map;
    std::size_t capacity = 0;
  };

  Shard& shard_for(std::uint64_t key) { return shards_[(key * 0x9E3779B97F4A7C15ull) >> 60]; }

  std::size_t capacity_;
  std::array<Shard, kShards> shards_;
};

}  // namespace taxonap
