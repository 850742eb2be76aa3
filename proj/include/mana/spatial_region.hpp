#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "mana/error.hpp"
#include "mana/types.hpp"

namespace mana {

/// (behind, ahead) window around a trigger block. The trigger itself has no
/// footprint bit.
struct RegionGeometry {
  unsigned behind = 0;
  unsigned ahead = 8;

  bool operator==(const RegionGeometry&) const = default;

  unsigned footprint_bits() const { return behind + ahead; }

  void validate() const {
    if (footprint_bits() == 0 || footprint_bits() > 64) {
      throw Error(ErrorKind::invalid_geometry, "region footprint must have between 1 and 64 bits");
    }
  }

  /// Footprint bit for `block` relative to `trigger`, or nullopt if the block
  /// is the trigger or lies outside the window.
  std::optional<unsigned> bit_for(BlockAddress trigger, BlockAddress block) const {
    if (block == trigger) return std::nullopt;
    if (block < trigger) {
      const auto back = trigger.value - block.value;
      if (back > behind) return std::nullopt;
      return static_cast<unsigned>(behind - back);
    }
    const auto fwd = block.value - trigger.value;
    if (fwd > ahead) return std::nullopt;
    return static_cast<unsigned>(behind + fwd - 1);
  }

  bool covers(BlockAddress trigger, BlockAddress block) const {
    return block == trigger || bit_for(trigger, block).has_value();
  }

  /// Inverse of bit_for. Nullopt when the block would fall outside the
  /// 40-bit block space.
  std::optional<BlockAddress> block_for(BlockAddress trigger, unsigned bit) const {
    if (bit < behind) return trigger.offset_by(-static_cast<std::int64_t>(behind - bit));
    return trigger.offset_by(static_cast<std::int64_t>(bit - behind + 1));
  }
};

struct SpatialRegion {
  BlockAddress trigger;
  std::uint64_t footprint = 0;

  bool operator==(const SpatialRegion&) const = default;

  /// Footprint blocks in bit order (lowest address first).
  std::vector<BlockAddress> footprint_blocks(const RegionGeometry& g) const {
    std::vector<BlockAddress> out;
    for (unsigned bit = 0; bit < g.footprint_bits(); ++bit) {
      if ((footprint >> bit) & 1) {
        if (auto b = g.block_for(trigger, bit)) out.push_back(*b);
      }
    }
    return out;
  }

  /// "1100" style rendering, bit 0 first.
  std::string footprint_string(const RegionGeometry& g) const {
    std::string s;
    for (unsigned bit = 0; bit < g.footprint_bits(); ++bit) s += ((footprint >> bit) & 1) ? '1' : '0';
    return s;
  }
};

/// Spatial region creator: folds the retire-order block stream into regions
/// held in a FIFO queue. When a block matches no queued region a new region
/// is opened, and if the queue is full the oldest region is handed back to
/// the caller for recording.
class RegionCreator {
 public:
  RegionCreator(RegionGeometry geometry, std::size_t capacity) : geometry_(geometry), capacity_(capacity) {
    geometry_.validate();
    if (capacity_ == 0) throw Error(ErrorKind::invalid_config, "region queue length must be positive");
  }

  struct Step {
    std::optional<SpatialRegion> evicted;
    bool opened = false;  // a new region was enqueued for this block
  };

  Step observe(BlockAddress block) {
    Step step;
    if (last_ && *last_ == block) return step;
    last_ = block;
    // Oldest region first.
    for (auto& region : queue_) {
      if (region.trigger == block) return step;
      if (auto bit = geometry_.bit_for(region.trigger, block)) {
        region.footprint |= std::uint64_t{1} << *bit;
        return step;
      }
    }
    if (queue_.size() == capacity_) {
      step.evicted = queue_.front();
      queue_.pop_front();
    }
    queue_.push_back(SpatialRegion{block, 0});
    step.opened = true;
    return step;
  }

  const std::deque<SpatialRegion>& queue() const { return queue_; }
  const RegionGeometry& geometry() const { return geometry_; }
  std::size_t capacity() const { return capacity_; }

 private:
  RegionGeometry geometry_;
  std::size_t capacity_;
  std::deque<SpatialRegion> queue_;
  std::optional<BlockAddress> last_;
};

}  // namespace mana
