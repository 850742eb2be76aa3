#pragma once

// Bit-level storage accounting for prefetcher metadata records and the
// MANA_Table/HOBPT partial-tag trade-off.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mana/error.hpp"
#include "mana/types.hpp"

namespace mana::storage {

inline constexpr std::uint64_t kBitsPerKB = 8192;

enum class RecordKind { rdip_miss_table_entry, shotgun_ubtb_entry, pif_index_plus_history_entry, mana_table_entry };

inline RecordKind parse_record_kind(std::string_view name) {
  if (name == "rdip_miss_table_entry") return RecordKind::rdip_miss_table_entry;
  if (name == "shotgun_ubtb_entry") return RecordKind::shotgun_ubtb_entry;
  if (name == "pif_index_plus_history_entry") return RecordKind::pif_index_plus_history_entry;
  if (name == "mana_table_entry") return RecordKind::mana_table_entry;
  throw Error(ErrorKind::unknown_kind, "unknown record kind '" + std::string(name) + "'");
}

/// Geometries the per-record arithmetic is evaluated under. Defaults are the
/// published configurations of each design over a 46-bit address space.
struct RecordParams {
  unsigned address_bits = kAddressBits;
  unsigned block_offset_bits = kBlockOffsetBits;
  unsigned footprint_bits = 8;

  // RDIP Miss Table: 32-bit signatures, 4K entries, 4-way, 3 triggers/entry.
  unsigned rdip_signature_bits = 32;
  std::uint64_t rdip_entries = 4096;
  std::uint64_t rdip_ways = 4;
  unsigned rdip_triggers_per_entry = 3;

  // Shotgun U-BTB: 2K entries, 4-way; size and type fields; call+return footprints.
  std::uint64_t btb_entries = 2048;
  std::uint64_t btb_ways = 4;
  unsigned btb_size_bits = 5;
  unsigned btb_type_bits = 1;
  unsigned btb_footprints = 2;

  // PIF: 8K-entry 4-way index table pointing into a 32K-region history.
  std::uint64_t pif_index_entries = 8192;
  std::uint64_t pif_index_ways = 4;
  std::uint64_t pif_history_entries = 32768;

  // MANA_Table record fields.
  unsigned mana_hobp_index_bits = 7;
  unsigned mana_partial_tag_bits = 2;
  unsigned mana_successor_bits = 12;
};

namespace detail {

inline unsigned index_bits(std::uint64_t entries, std::uint64_t ways, std::string_view what) {
  if (ways == 0 || entries % ways != 0 || !is_power_of_two(entries / ways)) {
    throw Error(ErrorKind::invalid_geometry, std::string(what) + ": set count must be a power of two");
  }
  return log2_exact(entries / ways);
}

inline unsigned checked_sub(unsigned a, unsigned b, std::string_view what) {
  if (b > a) throw Error(ErrorKind::invalid_geometry, std::string(what) + ": field widths exceed the address");
  return a - b;
}

}  // namespace detail

inline std::uint64_t record_size_bits(RecordKind kind, const RecordParams& p = {}) {
  const unsigned block_bits = detail::checked_sub(p.address_bits, p.block_offset_bits, "address");
  switch (kind) {
    case RecordKind::rdip_miss_table_entry: {
      const unsigned tag =
          detail::checked_sub(p.rdip_signature_bits, detail::index_bits(p.rdip_entries, p.rdip_ways, "rdip"), "rdip");
      return tag + std::uint64_t{p.rdip_triggers_per_entry} * (block_bits + p.footprint_bits);
    }
    case RecordKind::shotgun_ubtb_entry: {
      // Basic-block tag is an instruction address tag; the target is a full address.
      const unsigned tag =
          detail::checked_sub(p.address_bits, detail::index_bits(p.btb_entries, p.btb_ways, "btb"), "btb");
      return tag + p.address_bits + p.btb_size_bits + p.btb_type_bits +
             std::uint64_t{p.btb_footprints} * p.footprint_bits;
    }
    case RecordKind::pif_index_plus_history_entry: {
      const unsigned tag =
          detail::checked_sub(block_bits, detail::index_bits(p.pif_index_entries, p.pif_index_ways, "pif"), "pif");
      if (!is_power_of_two(p.pif_history_entries)) {
        throw Error(ErrorKind::invalid_geometry, "pif: history size must be a power of two");
      }
      const unsigned pointer = log2_exact(p.pif_history_entries);
      return std::uint64_t{tag} + pointer + block_bits + p.footprint_bits;
    }
    case RecordKind::mana_table_entry:
      return std::uint64_t{p.mana_hobp_index_bits} + p.mana_partial_tag_bits + p.footprint_bits +
             p.mana_successor_bits;
  }
  throw Error(ErrorKind::unknown_kind, "unknown record kind");
}

/// Whole-structure storage of the PIF index table plus history buffer.
inline std::uint64_t pif_total_bits(const RecordParams& p = {}) {
  const unsigned block_bits = p.address_bits - p.block_offset_bits;
  const unsigned tag = block_bits - detail::index_bits(p.pif_index_entries, p.pif_index_ways, "pif");
  return p.pif_index_entries * (tag + log2_exact(p.pif_history_entries)) +
         p.pif_history_entries * (block_bits + p.footprint_bits);
}

/// Distinct high-order-bit patterns observed per partial-tag width, as index
/// bits. Widths between measured points reuse the next narrower measurement,
/// which can only over-provision (wider partial tags leave fewer patterns).
inline constexpr std::array<std::pair<unsigned, unsigned>, 6> kObservedHobpIndexBits{{
    {0, 9}, {1, 8}, {2, 7}, {5, 5}, {8, 3}, {11, 3}}};

inline constexpr std::array<unsigned, 6> kPartialTagTableRows{0, 1, 2, 5, 8, 11};

struct StorageParams {
  unsigned address_bits = kAddressBits;
  unsigned block_offset_bits = kBlockOffsetBits;
  std::uint64_t table_entries = 4096;
  std::uint64_t table_sets = 1024;
  unsigned partial_tag_bits = 2;
  unsigned footprint_bits = 8;
  unsigned successor_bits = 12;
  // Overrides the observed-pattern lookup; HOBPT capacity is 2^bits.
  std::optional<unsigned> hobp_index_bits;
};

struct StorageBreakdown {
  unsigned partial_tag_bits = 0;
  unsigned hobp_index_bits = 0;
  unsigned hobp_width = 0;
  std::uint64_t hobpt_entries = 0;
  std::uint64_t entry_bits = 0;
  std::uint64_t mana_table_bits = 0;
  std::uint64_t hobpt_bits = 0;
  std::uint64_t sum_bits = 0;
};

inline StorageBreakdown mana_storage_breakdown(const StorageParams& p) {
  if (!is_power_of_two(p.table_entries) || !is_power_of_two(p.table_sets) || p.table_sets > p.table_entries) {
    throw Error(ErrorKind::invalid_geometry, "table entries and sets must be powers of two");
  }
  if (p.block_offset_bits > p.address_bits) {
    throw Error(ErrorKind::invalid_geometry, "block offset wider than the address");
  }
  const unsigned block_bits = p.address_bits - p.block_offset_bits;
  const unsigned set_bits = log2_exact(p.table_sets);
  if (p.partial_tag_bits + set_bits > block_bits) {
    throw Error(ErrorKind::invalid_geometry,
                "partial tag of " + std::to_string(p.partial_tag_bits) + " bits does not fit the block address");
  }

  StorageBreakdown b;
  b.partial_tag_bits = p.partial_tag_bits;
  b.hobp_width = block_bits - set_bits - p.partial_tag_bits;
  if (p.hobp_index_bits) {
    b.hobp_index_bits = *p.hobp_index_bits;
  } else {
    for (auto [partial, bits] : kObservedHobpIndexBits) {
      if (partial <= p.partial_tag_bits) b.hobp_index_bits = bits;
    }
    // Never more patterns than the pattern width can express.
    b.hobp_index_bits = std::min(b.hobp_index_bits, b.hobp_width);
  }
  if (b.hobp_index_bits >= 64) throw Error(ErrorKind::invalid_geometry, "HOBP index too wide");
  b.hobpt_entries = std::uint64_t{1} << b.hobp_index_bits;
  b.entry_bits = std::uint64_t{b.hobp_index_bits} + p.partial_tag_bits + p.footprint_bits + p.successor_bits;
  b.mana_table_bits = b.entry_bits * p.table_entries;
  b.hobpt_bits = b.hobpt_entries * b.hobp_width;
  b.sum_bits = b.mana_table_bits + b.hobpt_bits;
  return b;
}

/// KB (8192 bits) rounded half-up to two decimals, trailing zeros dropped:
/// 118784 bits -> "14.5", 3584 bits -> "0.44".
inline std::string format_kb(std::uint64_t bits) {
  const std::uint64_t centi = (bits * 100 + kBitsPerKB / 2) / kBitsPerKB;
  std::string s = std::to_string(centi / 100);
  const auto frac = centi % 100;
  if (frac != 0) {
    s += '.';
    s += static_cast<char>('0' + frac / 10);
    if (frac % 10 != 0) s += static_cast<char>('0' + frac % 10);
  }
  return s;
}

inline std::vector<StorageBreakdown> partial_tag_table(StorageParams base = {}) {
  std::vector<StorageBreakdown> rows;
  for (unsigned partial : kPartialTagTableRows) {
    base.partial_tag_bits = partial;
    rows.push_back(mana_storage_breakdown(base));
  }
  return rows;
}

inline std::string render_text(const std::vector<StorageBreakdown>& rows) {
  std::string out = "Partial Tag Bits  HOBP Index Bits  HOBPT Storage  MANA_Table Storage  Sum\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%16u  %15u  %13s  %18s  %s\n", r.partial_tag_bits, r.hobp_index_bits,
                  (format_kb(r.hobpt_bits) + " KB").c_str(), (format_kb(r.mana_table_bits) + " KB").c_str(),
                  (format_kb(r.sum_bits) + " KB").c_str());
    out += line;
  }
  return out;
}

inline std::string render_csv(const std::vector<StorageBreakdown>& rows) {
  std::string out =
      "partial_tag_bits,hobp_index_bits,hobp_width,hobpt_entries,entry_bits,hobpt_bits,mana_table_bits,sum_bits,"
      "hobpt_kb,mana_table_kb,sum_kb\n";
  for (const auto& r : rows) {
    out += std::to_string(r.partial_tag_bits) + ',' + std::to_string(r.hobp_index_bits) + ',' +
           std::to_string(r.hobp_width) + ',' + std::to_string(r.hobpt_entries) + ',' + std::to_string(r.entry_bits) +
           ',' + std::to_string(r.hobpt_bits) + ',' + std::to_string(r.mana_table_bits) + ',' +
           std::to_string(r.sum_bits) + ',' + format_kb(r.hobpt_bits) + ',' + format_kb(r.mana_table_bits) + ',' +
           format_kb(r.sum_bits) + '\n';
  }
  return out;
}

}  // namespace mana::storage
