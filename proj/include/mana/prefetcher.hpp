#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "mana/trace.hpp"
#include "mana/types.hpp"

namespace mana {

/// Hooks the simulation engine drives for every instruction prefetcher.
/// Candidates are appended to `out` in issue order.
class InstructionPrefetcher {
 public:
  virtual ~InstructionPrefetcher() = default;

  virtual std::string_view name() const = 0;

  /// A new block entered the fetch stream, before its demand access.
  virtual void on_fetch(BlockAddress block, std::vector<BlockAddress>& out) = 0;

  /// A record retired (after its demand access).
  virtual void on_retire(const TraceRecord& record, std::vector<BlockAddress>& out) {
    (void)record;
    (void)out;
  }

  /// The demand access for `block` missed in the L1-I.
  virtual void on_demand_miss(BlockAddress block) { (void)block; }

  /// Metadata storage cost in bits.
  virtual std::uint64_t storage_bits() const = 0;
};

class NoPrefetcher final : public InstructionPrefetcher {
 public:
  std::string_view name() const override { return "none"; }
  void on_fetch(BlockAddress, std::vector<BlockAddress>&) override {}
  std::uint64_t storage_bits() const override { return 0; }
};

}  // namespace mana
