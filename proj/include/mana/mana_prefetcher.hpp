#pragma once

// MANA: spatial regions recorded in a set-associative table whose tags are
// compressed through a shared high-order-bits pattern table (HOBPT), chained
// by successor pointers, and replayed through stream address buffers.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mana/error.hpp"
#include "mana/prefetcher.hpp"
#include "mana/spatial_region.hpp"
#include "mana/storage_model.hpp"
#include "mana/types.hpp"

namespace mana {

struct ManaConfig {
  RegionGeometry geometry{0, 8};
  std::size_t srq_length = 8;
  std::size_t lookahead = 3;
  std::uint64_t table_entries = 4096;
  std::uint64_t table_ways = 4;
  unsigned partial_tag_bits = 2;
  std::uint64_t hobpt_entries = 128;
  std::uint64_t hobpt_ways = 8;
  std::size_t sab_count = 1;
  std::size_t sab_capacity = 5;

  std::uint64_t table_sets() const { return table_entries / table_ways; }
  unsigned set_bits() const { return log2_exact(table_sets()); }
  unsigned hobp_width() const { return kBlockAddressBits - set_bits() - partial_tag_bits; }

  void validate() const {
    geometry.validate();
    if (srq_length == 0) throw Error(ErrorKind::invalid_config, "srq_length must be positive", {}, "srq_length");
    if (lookahead == 0) throw Error(ErrorKind::invalid_config, "lookahead must be positive", {}, "lookahead");
    if (sab_count == 0) throw Error(ErrorKind::invalid_config, "sab_count must be positive", {}, "sab_count");
    if (sab_capacity < lookahead) {
      throw Error(ErrorKind::invalid_config, "sab_capacity must be at least the lookahead", {}, "sab_capacity");
    }
    if (table_ways == 0 || table_entries % table_ways != 0 || !is_power_of_two(table_sets())) {
      throw Error(ErrorKind::invalid_geometry, "table_entries / table_ways must be a power of two", {},
                  "table_entries");
    }
    if (hobpt_ways == 0 || hobpt_entries % hobpt_ways != 0 || !is_power_of_two(hobpt_entries / hobpt_ways) ||
        !is_power_of_two(hobpt_ways)) {
      throw Error(ErrorKind::invalid_geometry, "hobpt geometry must be powers of two", {}, "hobpt_entries");
    }
    if (set_bits() + partial_tag_bits > kBlockAddressBits) {
      throw Error(ErrorKind::invalid_geometry, "partial tag does not fit the block address", {}, "partial_tag_bits");
    }
  }
};

/// Set-associative LRU table of high-order-bit patterns. The returned index
/// packs (set, way) as set * ways + way.
class HobpTable {
 public:
  HobpTable(std::uint64_t entries, std::uint64_t ways)
      : ways_(ways), sets_(entries / ways), slots_(entries) {}

  std::uint32_t get_or_insert(std::uint64_t pattern) {
    if (auto idx = find(pattern)) {
      touch(*idx);
      return *idx;
    }
    const auto first = set_of(pattern) * ways_;
    auto victim = first;
    for (auto i = first; i < first + ways_; ++i) {
      if (!slots_[i].valid) {
        victim = i;
        break;
      }
      if (slots_[i].last_use < slots_[victim].last_use) victim = i;
    }
    slots_[victim] = Slot{pattern, ++clock_, true};
    return static_cast<std::uint32_t>(victim);
  }

  std::optional<std::uint32_t> find(std::uint64_t pattern) const {
    const auto first = set_of(pattern) * ways_;
    for (auto i = first; i < first + ways_; ++i) {
      if (slots_[i].valid && slots_[i].pattern == pattern) return static_cast<std::uint32_t>(i);
    }
    return std::nullopt;
  }

  std::optional<std::uint64_t> pattern_at(std::uint32_t index) const {
    if (index >= slots_.size() || !slots_[index].valid) return std::nullopt;
    return slots_[index].pattern;
  }

  void touch(std::uint32_t index) { slots_[index].last_use = ++clock_; }

  std::uint64_t entries() const { return slots_.size(); }
  unsigned index_bits() const { return log2_exact(slots_.size()); }

 private:
  struct Slot {
    std::uint64_t pattern = 0;
    std::uint64_t last_use = 0;
    bool valid = false;
  };

  std::uint64_t set_of(std::uint64_t pattern) const { return pattern & (sets_ - 1); }

  std::uint64_t ways_;
  std::uint64_t sets_;
  std::vector<Slot> slots_;
  std::uint64_t clock_ = 0;
};

/// Position of a record in the MANA_Table: set * ways + way.
struct SlotId {
  std::uint32_t value = 0;
  bool operator==(const SlotId&) const = default;
};

/// The region store. Triggers are kept as (HOBP index, partial tag) with the
/// set number implicit in the slot position.
class ManaTable {
 public:
  static constexpr std::uint32_t kNoSuccessor = std::numeric_limits<std::uint32_t>::max();

  struct Entry {
    bool valid = false;
    std::uint32_t hobp_index = 0;
    std::uint64_t partial_tag = 0;
    std::uint64_t footprint = 0;
    std::uint32_t successor = kNoSuccessor;
    std::uint64_t last_use = 0;
  };

  explicit ManaTable(const ManaConfig& config)
      : config_(config),
        sets_(config.table_sets()),
        set_bits_(config.set_bits()),
        entries_(config.table_entries),
        hobpt_(config.hobpt_entries, config.hobpt_ways) {
    config_.validate();
  }

  std::uint64_t set_of(BlockAddress trigger) const { return trigger.value & (sets_ - 1); }
  std::uint64_t partial_tag_of(BlockAddress trigger) const {
    return (trigger.value >> set_bits_) & low_mask(config_.partial_tag_bits);
  }
  std::uint64_t pattern_of(BlockAddress trigger) const {
    return trigger.value >> (set_bits_ + config_.partial_tag_bits);
  }

  /// Records a region evicted from the SRQ. A tag hit refreshes the
  /// footprint; a miss replaces the set's LRU way. Either way the previously
  /// recorded slot's successor pointer is aimed at this slot.
  SlotId insert(const SpatialRegion& region) {
    const auto slot = find(region.trigger);
    SlotId id;
    if (slot) {
      id = *slot;
      auto& e = entries_[id.value];
      e.footprint = region.footprint;
      e.last_use = ++clock_;
      if (auto p = hobpt_.find(pattern_of(region.trigger))) hobpt_.touch(*p);
    } else {
      const auto first = set_of(region.trigger) * config_.table_ways;
      auto victim = first;
      for (auto i = first; i < first + config_.table_ways; ++i) {
        if (!entries_[i].valid) {
          victim = i;
          break;
        }
        if (entries_[i].last_use < entries_[victim].last_use) victim = i;
      }
      id = SlotId{static_cast<std::uint32_t>(victim)};
      entries_[victim] = Entry{true, hobpt_.get_or_insert(pattern_of(region.trigger)),
                               partial_tag_of(region.trigger), region.footprint, kNoSuccessor, ++clock_};
    }
    if (last_inserted_ && *last_inserted_ != id) entries_[last_inserted_->value].successor = id.value;
    last_inserted_ = id;
    return id;
  }

  /// Slot holding `trigger`, if its HOBP and partial tag match a way of its set.
  std::optional<SlotId> find(BlockAddress trigger) const {
    const auto hobp = hobpt_.find(pattern_of(trigger));
    if (!hobp) return std::nullopt;
    const auto partial = partial_tag_of(trigger);
    const auto first = set_of(trigger) * config_.table_ways;
    for (auto i = first; i < first + config_.table_ways; ++i) {
      const auto& e = entries_[i];
      if (e.valid && e.hobp_index == *hobp && e.partial_tag == partial) {
        return SlotId{static_cast<std::uint32_t>(i)};
      }
    }
    return std::nullopt;
  }

  /// Lookup used by replay; promotes the hit entry.
  std::optional<SlotId> lookup(BlockAddress trigger) {
    auto slot = find(trigger);
    if (slot) entries_[slot->value].last_use = ++clock_;
    return slot;
  }

  /// HOBPT[hobp_index] ++ partial_tag ++ set. If the HOBPT entry was replaced
  /// after the record was written this yields a different block.
  BlockAddress reconstruct_trigger(SlotId slot) const {
    const auto& e = entry(slot);
    const auto pattern = hobpt_.pattern_at(e.hobp_index).value_or(0);
    const auto set = slot.value / config_.table_ways;
    const auto value = (pattern << (set_bits_ + config_.partial_tag_bits)) | (e.partial_tag << set_bits_) | set;
    return BlockAddress{value & low_mask(kBlockAddressBits)};
  }

  SpatialRegion region_at(SlotId slot) const { return SpatialRegion{reconstruct_trigger(slot), entry(slot).footprint}; }

  std::optional<SlotId> successor(SlotId slot) const {
    const auto s = entry(slot).successor;
    if (s == kNoSuccessor) return std::nullopt;
    return SlotId{s};
  }

  /// Follows successor pointers from `start`, returning up to `count`
  /// regions including the start. Chains may lead through slots that were
  /// overwritten since the pointer was set; the current occupant is returned.
  std::vector<std::pair<SlotId, SpatialRegion>> chase(SlotId start, std::size_t count) const {
    std::vector<std::pair<SlotId, SpatialRegion>> out;
    std::optional<SlotId> cur = start;
    (void)entry(start);
    while (cur && out.size() < count) {
      out.emplace_back(*cur, region_at(*cur));
      cur = successor(*cur);
    }
    return out;
  }

  const Entry& entry(SlotId slot) const {
    if (slot.value >= entries_.size() || !entries_[slot.value].valid) {
      throw Error(ErrorKind::invalid_slot, "MANA_Table slot " + std::to_string(slot.value) + " is empty");
    }
    return entries_[slot.value];
  }

  bool occupied(SlotId slot) const { return slot.value < entries_.size() && entries_[slot.value].valid; }
  std::optional<SlotId> last_inserted() const { return last_inserted_; }
  const HobpTable& hobpt() const { return hobpt_; }
  const ManaConfig& config() const { return config_; }
  std::size_t size() const { return entries_.size(); }

  std::uint64_t entry_bits() const {
    return std::uint64_t{hobpt_.index_bits()} + config_.partial_tag_bits + config_.geometry.footprint_bits() +
           successor_bits();
  }
  unsigned successor_bits() const { return log2_exact(config_.table_entries); }

  std::uint64_t storage_bits() const {
    return entry_bits() * config_.table_entries + hobpt_.entries() * config_.hobp_width();
  }

 private:
  ManaConfig config_;
  std::uint64_t sets_;
  unsigned set_bits_;
  std::vector<Entry> entries_;
  HobpTable hobpt_;
  std::optional<SlotId> last_inserted_;
  std::uint64_t clock_ = 0;
};

/// A window of chased regions plus the slot the next chase continues from.
struct StreamAddressBuffer {
  std::deque<std::pair<SlotId, SpatialRegion>> window;
  SlotId cursor;
  std::uint64_t last_use = 0;
  bool valid = false;
};

class ManaPrefetcher final : public InstructionPrefetcher {
 public:
  explicit ManaPrefetcher(const ManaConfig& config = {})
      : config_(config), src_(config.geometry, config.srq_length), table_(config), sabs_(config.sab_count) {}

  std::string_view name() const override { return "mana"; }

  /// Feeds one retired block to the region creator; a region pushed out of
  /// the SRQ is recorded in the table and returned.
  std::optional<SpatialRegion> train(BlockAddress retired_block) {
    auto step = src_.observe(retired_block);
    if (step.evicted) table_.insert(*step.evicted);
    return step.evicted;
  }

  /// Prefetch candidates for a fetch-stream block. The lookahead counts the
  /// matched region itself, so with L = 1 only the current region's
  /// footprint is ever prefetched.
  std::vector<BlockAddress> on_fetch(BlockAddress block) {
    std::vector<BlockAddress> out;
    on_fetch(block, out);
    return out;
  }

  void on_fetch(BlockAddress block, std::vector<BlockAddress>& out) override {
    const std::size_t first_new = out.size();
    for (auto& sab : sabs_) {
      if (!sab.valid) continue;
      auto it = std::find_if(sab.window.begin(), sab.window.end(), [&](const auto& entry) {
        return config_.geometry.covers(entry.second.trigger, block);
      });
      if (it == sab.window.end()) continue;
      sab.last_use = ++clock_;
      const auto ahead = static_cast<std::size_t>(std::distance(it, sab.window.end()));
      if (ahead < config_.lookahead) extend(sab, config_.lookahead - ahead, block, out, first_new);
      return;
    }

    const auto slot = table_.lookup(block);
    if (!slot) return;
    auto& sab = *std::min_element(sabs_.begin(), sabs_.end(), [](const auto& a, const auto& b) {
      if (a.valid != b.valid) return !a.valid;
      return a.last_use < b.last_use;
    });
    sab = StreamAddressBuffer{};
    sab.valid = true;
    sab.last_use = ++clock_;
    sab.cursor = *slot;
    const auto seed = table_.region_at(*slot);
    sab.window.emplace_back(*slot, seed);
    emit(seed, block, out, first_new);
    if (config_.lookahead > 1) extend(sab, config_.lookahead - 1, block, out, first_new);
  }

  void on_retire(const TraceRecord& record, std::vector<BlockAddress>&) override { train(record.block()); }

  std::uint64_t storage_bits() const override { return table_.storage_bits(); }

  const ManaTable& table() const { return table_; }
  ManaTable& table() { return table_; }
  const RegionCreator& region_creator() const { return src_; }
  const std::vector<StreamAddressBuffer>& sabs() const { return sabs_; }
  const ManaConfig& config() const { return config_; }

 private:
  void extend(StreamAddressBuffer& sab, std::size_t count, BlockAddress fetched, std::vector<BlockAddress>& out,
              std::size_t first_new) {
    for (std::size_t n = 0; n < count; ++n) {
      const auto next = table_.successor(sab.cursor);
      if (!next) return;
      const auto region = table_.region_at(*next);
      sab.cursor = *next;
      sab.window.emplace_back(*next, region);
      while (sab.window.size() > config_.sab_capacity) sab.window.pop_front();
      emit(region, fetched, out, first_new);
    }
  }

  // Trigger first, then footprint blocks; skips the block being fetched and
  // anything already emitted by this call.
  void emit(const SpatialRegion& region, BlockAddress fetched, std::vector<BlockAddress>& out,
            std::size_t first_new) const {
    auto push = [&](BlockAddress b) {
      if (b == fetched) return;
      if (std::find(out.begin() + static_cast<std::ptrdiff_t>(first_new), out.end(), b) != out.end()) return;
      out.push_back(b);
    };
    push(region.trigger);
    for (auto b : region.footprint_blocks(config_.geometry)) push(b);
  }

  ManaConfig config_;
  RegionCreator src_;
  ManaTable table_;
  std::vector<StreamAddressBuffer> sabs_;
  std::uint64_t clock_ = 0;
};

}  // namespace mana
