#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>

namespace mana {

inline constexpr unsigned kAddressBits = 46;
inline constexpr unsigned kBlockOffsetBits = 6;
inline constexpr unsigned kBlockAddressBits = kAddressBits - kBlockOffsetBits;
inline constexpr std::uint64_t kBlockBytes = std::uint64_t{1} << kBlockOffsetBits;
inline constexpr std::uint64_t kAddressLimit = std::uint64_t{1} << kAddressBits;
inline constexpr std::uint64_t kBlockLimit = std::uint64_t{1} << kBlockAddressBits;

using Cycle = std::uint64_t;

/// 64-byte instruction block number (instruction address >> 6).
struct BlockAddress {
  std::uint64_t value = 0;

  constexpr BlockAddress() = default;
  constexpr explicit BlockAddress(std::uint64_t v) : value(v) {}

  constexpr auto operator<=>(const BlockAddress&) const = default;

  /// Block `delta` positions away, or nullopt when it leaves the 40-bit space.
  constexpr std::optional<BlockAddress> offset_by(std::int64_t delta) const {
    if (delta < 0) {
      auto back = static_cast<std::uint64_t>(-delta);
      if (back > value) return std::nullopt;
      return BlockAddress{value - back};
    }
    auto fwd = static_cast<std::uint64_t>(delta);
    if (fwd >= kBlockLimit - value) return std::nullopt;
    return BlockAddress{value + fwd};
  }
};

constexpr BlockAddress block_of(std::uint64_t instruction_address) {
  return BlockAddress{instruction_address >> kBlockOffsetBits};
}

constexpr std::uint64_t address_of(BlockAddress block) { return block.value << kBlockOffsetBits; }

constexpr bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

constexpr unsigned log2_exact(std::uint64_t v) {
  unsigned n = 0;
  while (v > 1) {
    v >>= 1;
    ++n;
  }
  return n;
}

constexpr std::uint64_t low_mask(unsigned bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

}  // namespace mana

template <>
struct std::hash<mana::BlockAddress> {
  std::size_t operator()(const mana::BlockAddress& b) const noexcept {
    return std::hash<std::uint64_t>{}(b.value);
  }
};
