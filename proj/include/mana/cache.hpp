#pragma once

// Set-associative LRU caches and the two-level L1-I/L2 fetch hierarchy with
// in-flight fill tracking.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mana/error.hpp"
#include "mana/types.hpp"

namespace mana {

struct CacheGeometry {
  std::uint64_t total_bytes = 32 * 1024;
  std::uint32_t ways = 8;
  std::uint32_t block_bytes = kBlockBytes;
  Cycle hit_latency = 4;
  // Latency to fill a line from the next level when that level hits.
  Cycle fill_latency_from_below = 10;

  std::uint64_t blocks() const { return total_bytes / block_bytes; }
  std::uint64_t sets() const { return total_bytes / (std::uint64_t{ways} * block_bytes); }

  void validate(const std::string& what = "cache") const {
    if (block_bytes != kBlockBytes) {
      throw Error(ErrorKind::invalid_geometry, what + ": block size is fixed at 64 bytes");
    }
    if (ways == 0 || total_bytes == 0 || total_bytes % (std::uint64_t{ways} * block_bytes) != 0) {
      throw Error(ErrorKind::invalid_geometry, what + ": size must be a multiple of ways x 64 B");
    }
    if (!is_power_of_two(sets())) {
      throw Error(ErrorKind::invalid_geometry, what + ": set count must be a power of two");
    }
  }
};

/// Tag store with true LRU. Lines carry the prefetch bookkeeping flags used
/// by the L1; the L2 and the shadow caches simply leave them unset.
class SetAssocCache {
 public:
  struct Line {
    std::uint64_t block = 0;
    std::uint64_t last_use = 0;
    bool valid = false;
    bool prefetched = false;
    bool counted = false;  // prefetch issued inside the measurement window
  };

  explicit SetAssocCache(const CacheGeometry& geometry)
      : geometry_(geometry), sets_(geometry.sets()), lines_(geometry.blocks()) {
    geometry_.validate();
  }

  const CacheGeometry& geometry() const { return geometry_; }

  Line* find(BlockAddress block) {
    auto [first, last] = set_range(block);
    for (auto i = first; i < last; ++i) {
      if (lines_[i].valid && lines_[i].block == block.value) return &lines_[i];
    }
    return nullptr;
  }

  bool contains(BlockAddress block) const {
    return const_cast<SetAssocCache*>(this)->find(block) != nullptr;
  }

  void touch(Line& line) { line.last_use = ++clock_; }

  /// Installs `block` at MRU. Returns the evicted valid line, if any.
  /// The block must not already be present.
  std::optional<Line> insert(BlockAddress block, bool prefetched = false, bool counted = false) {
    auto [first, last] = set_range(block);
    auto victim = first;
    for (auto i = first; i < last; ++i) {
      if (!lines_[i].valid) {
        victim = i;
        break;
      }
      if (lines_[i].last_use < lines_[victim].last_use) victim = i;
    }
    std::optional<Line> evicted;
    if (lines_[victim].valid) evicted = lines_[victim];
    lines_[victim] = Line{block.value, ++clock_, true, prefetched, counted};
    return evicted;
  }

  /// Demand-style access for tag-only caches: hit promotes, miss installs.
  bool access(BlockAddress block) {
    if (auto* line = find(block)) {
      touch(*line);
      return true;
    }
    insert(block);
    return false;
  }

  /// Lines of the set holding `block`, most-recently-used first.
  std::vector<Line> set_contents(BlockAddress block) const {
    auto [first, last] = set_range(block);
    std::vector<Line> out;
    for (auto i = first; i < last; ++i) {
      if (lines_[i].valid) out.push_back(lines_[i]);
    }
    std::sort(out.begin(), out.end(), [](const Line& a, const Line& b) { return a.last_use > b.last_use; });
    return out;
  }

  template <typename Fn>
  void for_each_valid(Fn&& fn) const {
    for (const auto& line : lines_) {
      if (line.valid) fn(line);
    }
  }

 private:
  std::pair<std::size_t, std::size_t> set_range(BlockAddress block) const {
    const auto set = block.value & (sets_ - 1);
    const auto first = static_cast<std::size_t>(set * geometry_.ways);
    return {first, first + geometry_.ways};
  }

  CacheGeometry geometry_;
  std::uint64_t sets_;
  std::vector<Line> lines_;
  std::uint64_t clock_ = 0;
};

enum class FillOrigin { demand, prefetch };

struct InFlightFill {
  BlockAddress block;
  Cycle ready_at = 0;
  FillOrigin origin = FillOrigin::demand;
  bool counted = false;
  bool demanded = false;  // a demand merged into this prefetch before it landed
};

enum class AccessKind { hit, hit_on_prefetched_line, miss_no_inflight, miss_inflight_prefetch };

struct AccessOutcome {
  AccessKind kind = AccessKind::hit;
  Cycle completes_at = 0;

  bool is_miss() const {
    return kind == AccessKind::miss_no_inflight || kind == AccessKind::miss_inflight_prefetch;
  }
};

enum class PrefetchResult { dropped_present, dropped_inflight, issued };

struct HierarchyCounters {
  std::uint64_t demand_accesses = 0;
  std::uint64_t demand_misses = 0;
  std::uint64_t demand_fills_started = 0;
  std::uint64_t untimely_misses = 0;
  std::uint64_t prefetches_issued = 0;
  std::uint64_t prefetches_dropped_present = 0;
  std::uint64_t prefetches_dropped_inflight = 0;
  std::uint64_t prefetches_useful = 0;
  std::uint64_t prefetches_useless = 0;
  std::uint64_t prefetches_in_flight_at_end = 0;
  std::uint64_t l1_external_requests = 0;
  std::uint64_t l2_external_requests = 0;
};

/// L1-I backed by an instruction-only L2 and a flat beyond-L2 latency.
///
/// Counters only advance while `measuring()` is set; prefetches issued
/// outside the window are tracked but never classified as useful/useless.
class FetchHierarchy {
 public:
  FetchHierarchy(const CacheGeometry& l1, const CacheGeometry& l2) : l1_(l1), l2_(l2) {
    l1.validate("l1");
    l2.validate("l2");
  }

  void set_measuring(bool on) { measuring_ = on; }
  bool measuring() const { return measuring_; }
  const HierarchyCounters& counters() const { return counters_; }
  const SetAssocCache& l1() const { return l1_; }
  const SetAssocCache& l2() const { return l2_; }

  std::optional<InFlightFill> in_flight(BlockAddress block) const {
    if (auto it = inflight_.find(block); it != inflight_.end()) return it->second;
    return std::nullopt;
  }
  std::size_t in_flight_count() const { return inflight_.size(); }

  AccessOutcome demand_access(BlockAddress block, Cycle now) {
    tick(now);
    if (measuring_) ++counters_.demand_accesses;
    if (auto* line = l1_.find(block)) {
      l1_.touch(*line);
      if (line->prefetched) {
        line->prefetched = false;
        if (line->counted) ++counters_.prefetches_useful;
        return {AccessKind::hit_on_prefetched_line, now};
      }
      return {AccessKind::hit, now};
    }
    if (auto it = inflight_.find(block); it != inflight_.end()) {
      auto& fill = it->second;
      if (fill.origin == FillOrigin::prefetch) {
        if (measuring_) {
          ++counters_.demand_misses;
          ++counters_.untimely_misses;
        }
        fill.demanded = true;
        return {AccessKind::miss_inflight_prefetch, fill.ready_at};
      }
      // Merges with the outstanding demand fill; no new request.
      return {AccessKind::miss_no_inflight, fill.ready_at};
    }
    if (measuring_) {
      ++counters_.demand_misses;
      ++counters_.demand_fills_started;
    }
    const Cycle ready = now + request_from_l2(block);
    start_fill(InFlightFill{block, ready, FillOrigin::demand, false, true});
    return {AccessKind::miss_no_inflight, ready};
  }

  PrefetchResult prefetch_access(BlockAddress block, Cycle now) {
    tick(now);
    if (l1_.find(block) != nullptr) {
      if (measuring_) ++counters_.prefetches_dropped_present;
      return PrefetchResult::dropped_present;
    }
    if (inflight_.count(block) != 0) {
      if (measuring_) ++counters_.prefetches_dropped_inflight;
      return PrefetchResult::dropped_inflight;
    }
    if (measuring_) ++counters_.prefetches_issued;
    const Cycle ready = now + request_from_l2(block);
    start_fill(InFlightFill{block, ready, FillOrigin::prefetch, measuring_, false});
    return PrefetchResult::issued;
  }

  /// Installs every fill with ready_at <= now, in completion order.
  std::vector<InFlightFill> tick(Cycle now) {
    std::vector<InFlightFill> done;
    while (!schedule_.empty() && schedule_.begin()->first.first <= now) {
      const BlockAddress block = schedule_.begin()->second;
      schedule_.erase(schedule_.begin());
      auto it = inflight_.find(block);
      InFlightFill fill = it->second;
      inflight_.erase(it);
      install(fill);
      done.push_back(fill);
    }
    return done;
  }

  /// Settles prefetch accounting at the end of a run: unused resident
  /// prefetched lines become useless, undemanded in-flight ones are
  /// reported separately.
  void finish() {
    l1_.for_each_valid([&](const SetAssocCache::Line& line) {
      if (line.prefetched && line.counted) ++counters_.prefetches_useless;
    });
    for (const auto& [block, fill] : inflight_) {
      if (fill.origin != FillOrigin::prefetch || !fill.counted) continue;
      if (fill.demanded) {
        ++counters_.prefetches_useful;
      } else {
        ++counters_.prefetches_in_flight_at_end;
      }
    }
  }

 private:
  Cycle request_from_l2(BlockAddress block) {
    if (measuring_) ++counters_.l1_external_requests;
    Cycle latency = l1_.geometry().fill_latency_from_below;
    if (!l2_.access(block)) {
      if (measuring_) ++counters_.l2_external_requests;
      latency += l2_.geometry().fill_latency_from_below;
    }
    return latency;
  }

  void start_fill(const InFlightFill& fill) {
    auto [it, inserted] = inflight_.emplace(fill.block, fill);
    if (!inserted) throw Error(ErrorKind::invariant_violation, "second in-flight fill for one block");
    schedule_.emplace(std::make_pair(fill.ready_at, seq_++), fill.block);
  }

  void install(const InFlightFill& fill) {
    const bool still_prefetched = fill.origin == FillOrigin::prefetch && !fill.demanded;
    if (fill.origin == FillOrigin::prefetch && fill.demanded && fill.counted) ++counters_.prefetches_useful;
    auto evicted = l1_.insert(fill.block, still_prefetched, fill.counted);
    if (evicted && evicted->prefetched && evicted->counted) ++counters_.prefetches_useless;
  }

  SetAssocCache l1_;
  SetAssocCache l2_;
  std::unordered_map<BlockAddress, InFlightFill> inflight_;
  std::map<std::pair<Cycle, std::uint64_t>, BlockAddress> schedule_;
  std::uint64_t seq_ = 0;
  bool measuring_ = true;
  HierarchyCounters counters_;
};

}  // namespace mana
