#pragma once

// Brute-force reference models used by the unit and acceptance tests. They
// share no code with the library beyond the plain data types.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "mana/types.hpp"

namespace oracle {

struct Region {
  std::uint64_t trigger = 0;
  std::uint64_t footprint = 0;
};

/// Direct scan of the retire stream with a plain vector as the region queue.
/// Returns every region pushed out of the queue, in order.
inline std::vector<Region> evicted_regions(const std::vector<std::uint64_t>& blocks, unsigned behind, unsigned ahead,
                                           std::size_t queue_length) {
  std::vector<Region> queue, out;
  bool have_last = false;
  std::uint64_t last = 0;
  for (auto b : blocks) {
    if (have_last && b == last) continue;
    have_last = true;
    last = b;
    bool placed = false;
    for (auto& r : queue) {
      const auto d = static_cast<std::int64_t>(b) - static_cast<std::int64_t>(r.trigger);
      if (d == 0) {
        placed = true;
        break;
      }
      if (d < 0 && -d <= static_cast<std::int64_t>(behind)) {
        r.footprint |= std::uint64_t{1} << (behind + d);
        placed = true;
        break;
      }
      if (d > 0 && d <= static_cast<std::int64_t>(ahead)) {
        r.footprint |= std::uint64_t{1} << (behind + d - 1);
        placed = true;
        break;
      }
    }
    if (placed) continue;
    if (queue.size() == queue_length) {
      out.push_back(queue.front());
      queue.erase(queue.begin());
    }
    queue.push_back({b, 0});
  }
  return out;
}

struct Association {
  std::uint64_t footprint = 0;
  std::optional<std::uint64_t> successor;
  bool operator==(const Association&) const = default;
};

/// Last-occurrence map over the recorded region stream: each trigger keeps
/// its latest footprint and the trigger recorded right after its latest
/// occurrence (a repeat of the same trigger does not count as a successor).
inline std::map<std::uint64_t, Association> last_occurrence(const std::vector<Region>& recorded) {
  std::map<std::uint64_t, Association> m;
  for (std::size_t i = 0; i < recorded.size(); ++i) {
    auto& a = m[recorded[i].trigger];
    a.footprint = recorded[i].footprint;
    if (i > 0 && recorded[i - 1].trigger != recorded[i].trigger) m[recorded[i - 1].trigger].successor = recorded[i].trigger;
  }
  return m;
}

/// Small-stride random walk over `span` blocks starting at `base`, so that
/// regions pick up footprint bits and triggers recur.
inline std::vector<std::uint64_t> random_block_walk(std::uint64_t seed, std::size_t length, std::uint64_t span,
                                                    std::uint64_t base = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> step(-3, 6);
  std::bernoulli_distribution jump(0.08);
  std::uniform_int_distribution<std::uint64_t> anywhere(0, span - 1);
  std::vector<std::uint64_t> out;
  std::uint64_t cur = anywhere(rng);
  for (std::size_t i = 0; i < length; ++i) {
    if (jump(rng)) {
      cur = anywhere(rng);
    } else {
      const auto next = static_cast<std::int64_t>(cur) + step(rng);
      cur = static_cast<std::uint64_t>(std::clamp<std::int64_t>(next, 0, static_cast<std::int64_t>(span) - 1));
    }
    out.push_back(base + cur);
  }
  return out;
}

}  // namespace oracle
