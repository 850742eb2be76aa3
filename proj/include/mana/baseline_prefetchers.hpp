#pragma once

// Comparison prefetchers: next-line, RDIP (return-address-stack signatures
// indexing a Miss Table) and PIF (index table over a circular history of
// spatial regions).

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "mana/error.hpp"
#include "mana/prefetcher.hpp"
#include "mana/spatial_region.hpp"
#include "mana/storage_model.hpp"
#include "mana/types.hpp"

namespace mana {

// ---------------------------------------------------------------------------
// Next-line

struct NextLineConfig {
  std::uint32_t degree = 1;

  void validate() const {
    if (degree == 0) throw Error(ErrorKind::invalid_config, "degree must be at least 1", {}, "degree");
  }
};

class NextLinePrefetcher final : public InstructionPrefetcher {
 public:
  explicit NextLinePrefetcher(const NextLineConfig& config = {}) : config_(config) { config_.validate(); }

  std::string_view name() const override { return "next_line"; }

  void on_fetch(BlockAddress block, std::vector<BlockAddress>& out) override {
    for (std::uint32_t d = 1; d <= config_.degree; ++d) {
      auto next = block.offset_by(d);
      if (!next) break;
      out.push_back(*next);
    }
  }

  std::vector<BlockAddress> on_fetch(BlockAddress block) {
    std::vector<BlockAddress> out;
    on_fetch(block, out);
    return out;
  }

  std::uint64_t storage_bits() const override { return 0; }

 private:
  NextLineConfig config_;
};

// ---------------------------------------------------------------------------
// RDIP

/// Circular return address stack plus the signature derived from it.
class RasSignature {
 public:
  explicit RasSignature(std::size_t depth = 16) : entries_(depth, 0) {
    if (depth < 4) throw Error(ErrorKind::invalid_config, "RAS depth must be at least 4", {}, "ras_depth");
  }

  /// Call pushes the return address; ret pops. Returns the new signature:
  /// XOR of the top four entries, low bit 1 after a call and 0 after a return.
  std::uint32_t on_call(std::uint64_t return_address) {
    top_ = (top_ + 1) % entries_.size();
    entries_[top_] = return_address;
    depth_ = std::min(depth_ + 1, entries_.size());
    return signature_ = (fold() | 1u);
  }

  std::uint32_t on_return() {
    if (depth_ > 0) {
      entries_[top_] = 0;
      top_ = (top_ + entries_.size() - 1) % entries_.size();
      --depth_;
    }
    return signature_ = (fold() & ~1u);
  }

  std::uint32_t signature() const { return signature_; }

  /// i-th entry from the top (0 = top); zero when absent.
  std::uint64_t at(std::size_t i) const {
    if (i >= depth_) return 0;
    return entries_[(top_ + entries_.size() - i) % entries_.size()];
  }
  std::uint64_t& mutable_at(std::size_t i) { return entries_[(top_ + entries_.size() - i) % entries_.size()]; }
  std::size_t depth() const { return depth_; }

 private:
  std::uint32_t fold() const {
    std::uint64_t x = 0;
    for (std::size_t i = 0; i < 4; ++i) x ^= at(i);
    return static_cast<std::uint32_t>(x);
  }

  std::vector<std::uint64_t> entries_;
  std::size_t top_ = 0;
  std::size_t depth_ = 0;
  std::uint32_t signature_ = 0;
};

struct RdipConfig {
  std::size_t ras_depth = 16;
  std::uint64_t table_entries = 4096;
  std::uint64_t table_ways = 4;
  std::size_t triggers_per_entry = 3;
  RegionGeometry geometry{2, 6};

  void validate() const {
    geometry.validate();
    if (ras_depth < 4) throw Error(ErrorKind::invalid_config, "ras_depth must be at least 4", {}, "ras_depth");
    if (table_ways == 0 || table_entries % table_ways != 0 || !is_power_of_two(table_entries / table_ways)) {
      throw Error(ErrorKind::invalid_geometry, "miss table set count must be a power of two", {}, "table_entries");
    }
    if (triggers_per_entry == 0) {
      throw Error(ErrorKind::invalid_config, "triggers_per_entry must be positive", {}, "triggers_per_entry");
    }
  }
};

class RdipPrefetcher final : public InstructionPrefetcher {
 public:
  struct TriggerSlot {
    SpatialRegion region;
    std::uint64_t last_use = 0;
  };
  struct Entry {
    bool valid = false;
    std::uint32_t signature = 0;
    std::vector<TriggerSlot> slots;
    std::uint64_t last_use = 0;
  };

  explicit RdipPrefetcher(const RdipConfig& config = {})
      : config_(config), ras_(config.ras_depth), sets_(config.table_entries / config.table_ways),
        table_(config.table_entries) {
    config_.validate();
  }

  std::string_view name() const override { return "rdip"; }

  void on_fetch(BlockAddress, std::vector<BlockAddress>&) override {}

  void on_retire(const TraceRecord& record, std::vector<BlockAddress>& out) override {
    if (record.branch_kind == BranchKind::call || record.branch_kind == BranchKind::ret) {
      on_call_or_return(record, out);
    }
  }

  /// Updates the RAS and signatures, then returns the blocks recorded under
  /// the new signature.
  void on_call_or_return(const TraceRecord& record, std::vector<BlockAddress>& out) {
    previous_ = ras_.signature();
    // Fixed 4-byte instructions: the return lands right after the call.
    const auto sig = record.branch_kind == BranchKind::call ? ras_.on_call(record.address + 4) : ras_.on_return();
    if (auto* e = find(sig)) {
      e->last_use = ++clock_;
      for (const auto& slot : e->slots) {
        out.push_back(slot.region.trigger);
        for (auto b : slot.region.footprint_blocks(config_.geometry)) out.push_back(b);
      }
    }
  }

  std::vector<BlockAddress> on_call_or_return(const TraceRecord& record) {
    std::vector<BlockAddress> out;
    on_call_or_return(record, out);
    return out;
  }

  /// Records a miss against the signature that preceded the current one, so
  /// that replay runs one signature ahead of the fetch stream.
  void on_demand_miss(BlockAddress block) override {
    auto* e = find(previous_);
    if (e == nullptr) e = &allocate(previous_);
    e->last_use = ++clock_;
    for (auto& slot : e->slots) {
      if (config_.geometry.covers(slot.region.trigger, block)) {
        if (auto bit = config_.geometry.bit_for(slot.region.trigger, block)) {
          slot.region.footprint |= std::uint64_t{1} << *bit;
        }
        slot.last_use = ++clock_;
        return;
      }
    }
    if (e->slots.size() < config_.triggers_per_entry) {
      e->slots.push_back(TriggerSlot{SpatialRegion{block, 0}, ++clock_});
      return;
    }
    auto lru = std::min_element(e->slots.begin(), e->slots.end(),
                                [](const auto& a, const auto& b) { return a.last_use < b.last_use; });
    *lru = TriggerSlot{SpatialRegion{block, 0}, ++clock_};
  }

  std::uint64_t storage_bits() const override {
    storage::RecordParams p;
    p.rdip_entries = config_.table_entries;
    p.rdip_ways = config_.table_ways;
    p.rdip_triggers_per_entry = static_cast<unsigned>(config_.triggers_per_entry);
    p.footprint_bits = config_.geometry.footprint_bits();
    return config_.table_entries * storage::record_size_bits(storage::RecordKind::rdip_miss_table_entry, p);
  }

  const Entry* entry_for(std::uint32_t signature) const { return const_cast<RdipPrefetcher*>(this)->find(signature); }
  std::uint32_t current_signature() const { return ras_.signature(); }
  std::uint32_t previous_signature() const { return previous_; }
  const RasSignature& ras() const { return ras_; }

 private:
  Entry* find(std::uint32_t sig) {
    const auto first = (sig & (sets_ - 1)) * config_.table_ways;
    for (auto i = first; i < first + config_.table_ways; ++i) {
      if (table_[i].valid && table_[i].signature == sig) return &table_[i];
    }
    return nullptr;
  }

  Entry& allocate(std::uint32_t sig) {
    const auto first = (sig & (sets_ - 1)) * config_.table_ways;
    auto victim = first;
    for (auto i = first; i < first + config_.table_ways; ++i) {
      if (!table_[i].valid) {
        victim = i;
        break;
      }
      if (table_[i].last_use < table_[victim].last_use) victim = i;
    }
    table_[victim] = Entry{true, sig, {}, ++clock_};
    return table_[victim];
  }

  RdipConfig config_;
  RasSignature ras_;
  std::uint32_t previous_ = 0;
  std::uint64_t sets_;
  std::vector<Entry> table_;
  std::uint64_t clock_ = 0;
};

// ---------------------------------------------------------------------------
// PIF

struct PifConfig {
  RegionGeometry geometry{2, 6};
  std::size_t compactor_length = 18;
  std::uint64_t history_entries = 32768;
  std::uint64_t index_entries = 8192;
  std::uint64_t index_ways = 4;
  std::size_t sab_count = 4;
  std::size_t sab_capacity = 7;
  std::size_t lookahead = 5;

  void validate() const {
    geometry.validate();
    if (compactor_length == 0) {
      throw Error(ErrorKind::invalid_config, "compactor_length must be positive", {}, "compactor_length");
    }
    if (history_entries == 0) {
      throw Error(ErrorKind::invalid_config, "history_entries must be positive", {}, "history_entries");
    }
    if (index_ways == 0 || index_entries % index_ways != 0 || !is_power_of_two(index_entries / index_ways)) {
      throw Error(ErrorKind::invalid_geometry, "index table set count must be a power of two", {}, "index_entries");
    }
    if (sab_count == 0) throw Error(ErrorKind::invalid_config, "sab_count must be positive", {}, "sab_count");
    if (lookahead == 0) throw Error(ErrorKind::invalid_config, "lookahead must be positive", {}, "lookahead");
    if (sab_capacity < lookahead) {
      throw Error(ErrorKind::invalid_config, "sab_capacity must be at least the lookahead", {}, "sab_capacity");
    }
  }
};

class PifPrefetcher final : public InstructionPrefetcher {
 public:
  struct IndexEntry {
    bool valid = false;
    BlockAddress trigger;
    std::uint64_t position = 0;  // absolute history position
    std::uint64_t last_use = 0;
  };

  explicit PifPrefetcher(const PifConfig& config = {})
      : config_(config),
        compactor_(config.geometry, config.compactor_length),
        history_(config.history_entries),
        index_sets_(config.index_entries / config.index_ways),
        index_(config.index_entries),
        sabs_(config.sab_count) {
    config_.validate();
  }

  std::string_view name() const override { return "pif"; }

  void train(BlockAddress retired_block) {
    auto step = compactor_.observe(retired_block);
    if (step.evicted) append(*step.evicted);
  }

  void on_retire(const TraceRecord& record, std::vector<BlockAddress>&) override { train(record.block()); }

  void on_fetch(BlockAddress block, std::vector<BlockAddress>& out) override {
    for (auto& sab : sabs_) {
      if (!sab.valid) continue;
      auto it = std::find_if(sab.window.begin(), sab.window.end(),
                             [&](const auto& e) { return config_.geometry.covers(e.second.trigger, block); });
      if (it == sab.window.end()) continue;
      sab.last_use = ++clock_;
      const auto ahead = static_cast<std::size_t>(std::distance(it, sab.window.end()));
      if (ahead < config_.lookahead) extend(sab, config_.lookahead - ahead, block, out);
      return;
    }

    const auto pos = lookup(block);
    if (!pos) return;
    auto& sab = *std::min_element(sabs_.begin(), sabs_.end(), [](const auto& a, const auto& b) {
      if (a.valid != b.valid) return !a.valid;
      return a.last_use < b.last_use;
    });
    sab = Sab{};
    sab.valid = true;
    sab.last_use = ++clock_;
    sab.cursor = *pos;
    const auto& seed = history_[*pos % history_.size()];
    sab.window.emplace_back(*pos, seed);
    emit(seed, block, out);
    if (config_.lookahead > 1) extend(sab, config_.lookahead - 1, block, out);
  }

  std::vector<BlockAddress> on_fetch(BlockAddress block) {
    std::vector<BlockAddress> out;
    on_fetch(block, out);
    return out;
  }

  /// Absolute history position recorded for `trigger`, dropping pointers
  /// whose ring slot has been overwritten since.
  std::optional<std::uint64_t> lookup(BlockAddress trigger) {
    auto* e = find_index(trigger);
    if (e == nullptr) return std::nullopt;
    if (!readable(e->position) || history_[e->position % history_.size()].trigger != trigger) {
      e->valid = false;
      return std::nullopt;
    }
    e->last_use = ++clock_;
    return e->position;
  }

  std::uint64_t storage_bits() const override {
    storage::RecordParams p;
    p.pif_index_entries = config_.index_entries;
    p.pif_index_ways = config_.index_ways;
    p.pif_history_entries = config_.history_entries;
    p.footprint_bits = config_.geometry.footprint_bits();
    if (!is_power_of_two(config_.history_entries)) {
      return config_.history_entries * (kBlockAddressBits + p.footprint_bits);
    }
    return storage::pif_total_bits(p);
  }

  std::uint64_t write_position() const { return write_pos_; }
  const SpatialRegion& history_at(std::uint64_t position) const { return history_[position % history_.size()]; }
  bool readable(std::uint64_t position) const {
    return position < write_pos_ && write_pos_ - position <= history_.size();
  }
  const IndexEntry* index_entry(BlockAddress trigger) const {
    return const_cast<PifPrefetcher*>(this)->find_index(trigger);
  }

 private:
  struct Sab {
    std::deque<std::pair<std::uint64_t, SpatialRegion>> window;
    std::uint64_t cursor = 0;
    std::uint64_t last_use = 0;
    bool valid = false;
  };

  void append(const SpatialRegion& region) {
    const auto pos = write_pos_++;
    history_[pos % history_.size()] = region;
    auto* e = find_index(region.trigger);
    if (e == nullptr) {
      const auto first = (region.trigger.value & (index_sets_ - 1)) * config_.index_ways;
      auto victim = first;
      for (auto i = first; i < first + config_.index_ways; ++i) {
        if (!index_[i].valid) {
          victim = i;
          break;
        }
        if (index_[i].last_use < index_[victim].last_use) victim = i;
      }
      e = &index_[victim];
    }
    *e = IndexEntry{true, region.trigger, pos, ++clock_};
  }

  IndexEntry* find_index(BlockAddress trigger) {
    const auto first = (trigger.value & (index_sets_ - 1)) * config_.index_ways;
    for (auto i = first; i < first + config_.index_ways; ++i) {
      if (index_[i].valid && index_[i].trigger == trigger) return &index_[i];
    }
    return nullptr;
  }

  void extend(Sab& sab, std::size_t count, BlockAddress fetched, std::vector<BlockAddress>& out) {
    for (std::size_t n = 0; n < count; ++n) {
      const auto next = sab.cursor + 1;
      if (!readable(next)) return;
      const auto& region = history_[next % history_.size()];
      sab.cursor = next;
      sab.window.emplace_back(next, region);
      while (sab.window.size() > config_.sab_capacity) sab.window.pop_front();
      emit(region, fetched, out);
    }
  }

  void emit(const SpatialRegion& region, BlockAddress fetched, std::vector<BlockAddress>& out) const {
    if (region.trigger != fetched) out.push_back(region.trigger);
    for (auto b : region.footprint_blocks(config_.geometry)) {
      if (b != fetched) out.push_back(b);
    }
  }

  PifConfig config_;
  RegionCreator compactor_;
  std::vector<SpatialRegion> history_;
  std::uint64_t write_pos_ = 0;
  std::uint64_t index_sets_;
  std::vector<IndexEntry> index_;
  std::vector<Sab> sabs_;
  std::uint64_t clock_ = 0;
};

}  // namespace mana
