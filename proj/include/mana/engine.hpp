#pragma once

// Trace-driven fetch simulation: drives one prefetcher against an L1-I/L2
// hierarchy while a no-prefetch shadow L1 sees the same demand stream, and
// classifies every post-warmup miss.

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include "mana/baseline_prefetchers.hpp"
#include "mana/cache.hpp"
#include "mana/error.hpp"
#include "mana/mana_prefetcher.hpp"
#include "mana/prefetcher.hpp"
#include "mana/trace.hpp"

namespace mana {

struct NoPrefetcherConfig {};

using PrefetcherConfig = std::variant<NoPrefetcherConfig, NextLineConfig, RdipConfig, PifConfig, ManaConfig>;

inline std::string_view prefetcher_kind_name(const PrefetcherConfig& config) {
  static constexpr std::string_view names[] = {"none", "next_line", "rdip", "pif", "mana"};
  return names[config.index()];
}

inline std::unique_ptr<InstructionPrefetcher> make_prefetcher(const PrefetcherConfig& config) {
  struct Factory {
    std::unique_ptr<InstructionPrefetcher> operator()(const NoPrefetcherConfig&) const {
      return std::make_unique<NoPrefetcher>();
    }
    std::unique_ptr<InstructionPrefetcher> operator()(const NextLineConfig& c) const {
      return std::make_unique<NextLinePrefetcher>(c);
    }
    std::unique_ptr<InstructionPrefetcher> operator()(const RdipConfig& c) const {
      return std::make_unique<RdipPrefetcher>(c);
    }
    std::unique_ptr<InstructionPrefetcher> operator()(const PifConfig& c) const {
      return std::make_unique<PifPrefetcher>(c);
    }
    std::unique_ptr<InstructionPrefetcher> operator()(const ManaConfig& c) const {
      c.validate();
      return std::make_unique<ManaPrefetcher>(c);
    }
  };
  return std::visit(Factory{}, config);
}

inline CacheGeometry default_l1() { return CacheGeometry{32 * 1024, 8, kBlockBytes, 4, 10}; }
inline CacheGeometry default_l2() { return CacheGeometry{512 * 1024, 8, kBlockBytes, 10, 20}; }

struct EngineConfig {
  // l1.fill_latency_from_below is the L2 hit latency; l2.fill_latency_from_below
  // is the extra latency beyond the L2.
  CacheGeometry l1 = default_l1();
  CacheGeometry l2 = default_l2();
  PrefetcherConfig prefetcher = ManaConfig{};
  // Instructions simulated before counting starts; defaults to half the trace.
  std::optional<std::uint64_t> warmup_instructions;
};

struct DistinctRecordCounts {
  std::uint64_t mana_trigger = 0;
  std::uint64_t pif_trigger = 0;
  std::uint64_t rdip_signature = 0;

  bool operator==(const DistinctRecordCounts&) const = default;
};

/// All fractions are relative to baseline_misses and are 0 when there are
/// no baseline misses.
struct RunReport {
  std::string prefetcher;
  std::uint64_t instructions = 0;
  std::uint64_t measured_instructions = 0;
  std::uint64_t baseline_misses = 0;
  std::uint64_t demand_misses = 0;
  std::uint64_t non_covered_misses = 0;
  std::uint64_t untimely_misses = 0;
  double covered_fraction = 0;
  double non_covered_fraction = 0;
  double untimely_fraction = 0;
  double overprediction_ratio = 0;
  std::uint64_t prefetches_issued = 0;
  std::uint64_t prefetches_useful = 0;
  std::uint64_t prefetches_useless = 0;
  std::uint64_t prefetches_in_flight_at_end = 0;
  std::uint64_t l1_external_requests = 0;
  std::uint64_t l2_external_requests = 0;
  double bandwidth_ratio_vs_no_prefetch_32k = 0;
  std::uint64_t fetch_stall_cycles = 0;
  DistinctRecordCounts distinct_record_counts;
  std::uint64_t storage_bits = 0;

  bool operator==(const RunReport&) const = default;
};

/// Throws invariant_violation when the counters are inconsistent.
inline void check_report_identities(const RunReport& r) {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::invariant_violation, what); };
  if (r.non_covered_misses + r.untimely_misses != r.demand_misses) fail("non_covered + untimely != demand_misses");
  if (r.prefetches_useful + r.prefetches_useless + r.prefetches_in_flight_at_end != r.prefetches_issued) {
    fail("useful + useless + in-flight != issued prefetches");
  }
  if (r.covered_fraction > 1.0 || r.non_covered_fraction < 0 || r.untimely_fraction < 0 ||
      r.overprediction_ratio < 0) {
    fail("fraction out of range");
  }
}

enum class RecordCountKind { mana_trigger, pif_trigger, rdip_signature };

inline RecordCountKind parse_record_count_kind(std::string_view name) {
  if (name == "mana_trigger") return RecordCountKind::mana_trigger;
  if (name == "pif_trigger") return RecordCountKind::pif_trigger;
  if (name == "rdip_signature") return RecordCountKind::rdip_signature;
  throw Error(ErrorKind::unknown_kind, "unknown record kind '" + std::string(name) + "'");
}

/// Number of distinct prefetching records the trace would create with
/// unbounded metadata: region triggers for MANA and PIF, RAS signatures for
/// RDIP (the initial empty-stack signature included).
inline std::uint64_t count_distinct_records(std::span<const TraceRecord> trace, RecordCountKind kind) {
  switch (kind) {
    case RecordCountKind::mana_trigger:
    case RecordCountKind::pif_trigger: {
      const bool mana = kind == RecordCountKind::mana_trigger;
      RegionCreator src(mana ? ManaConfig{}.geometry : PifConfig{}.geometry,
                        mana ? ManaConfig{}.srq_length : PifConfig{}.compactor_length);
      std::unordered_set<BlockAddress> triggers;
      for (const auto& r : trace) {
        if (src.observe(r.block()).opened) triggers.insert(r.block());
      }
      return triggers.size();
    }
    case RecordCountKind::rdip_signature: {
      RasSignature ras(RdipConfig{}.ras_depth);
      std::unordered_set<std::uint32_t> sigs{ras.signature()};
      for (const auto& r : trace) {
        if (r.branch_kind == BranchKind::call) sigs.insert(ras.on_call(r.address + 4));
        if (r.branch_kind == BranchKind::ret) sigs.insert(ras.on_return());
      }
      return sigs.size();
    }
  }
  return 0;
}

inline DistinctRecordCounts count_all_distinct_records(std::span<const TraceRecord> trace) {
  return {count_distinct_records(trace, RecordCountKind::mana_trigger),
          count_distinct_records(trace, RecordCountKind::pif_trigger),
          count_distinct_records(trace, RecordCountKind::rdip_signature)};
}

inline RunReport run(std::span<const TraceRecord> trace, const EngineConfig& config) {
  if (trace.empty()) throw Error(ErrorKind::empty_trace, "trace has no records");
  const std::uint64_t warmup = config.warmup_instructions.value_or(trace.size() / 2);
  if (warmup >= trace.size()) {
    throw Error(ErrorKind::invalid_config, "warmup must be shorter than the trace", {}, "warmup");
  }

  FetchHierarchy cache(config.l1, config.l2);
  SetAssocCache shadow(config.l1);
  SetAssocCache shadow32k(default_l1());
  auto prefetcher = make_prefetcher(config.prefetcher);

  RunReport rep;
  rep.prefetcher = std::string(prefetcher->name());
  rep.instructions = trace.size();
  std::uint64_t shadow32k_misses = 0;

  Cycle now = 0;
  std::optional<BlockAddress> last_block;
  std::vector<BlockAddress> candidates;
  auto issue = [&] {
    for (auto b : candidates) cache.prefetch_access(b, now);
    candidates.clear();
  };

  cache.set_measuring(false);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const bool measuring = i >= warmup;
    if (measuring && !cache.measuring()) cache.set_measuring(true);
    const auto& rec = trace[i];
    const auto block = rec.block();

    if (block != last_block) {
      last_block = block;
      prefetcher->on_fetch(block, candidates);
      issue();

      const auto outcome = cache.demand_access(block, now);
      const bool shadow_hit = shadow.access(block);
      const bool shadow32k_hit = shadow32k.access(block);
      if (measuring) {
        if (!shadow_hit) ++rep.baseline_misses;
        if (!shadow32k_hit) ++shadow32k_misses;
        if (outcome.kind == AccessKind::miss_no_inflight) ++rep.non_covered_misses;
        if (outcome.kind == AccessKind::miss_inflight_prefetch) ++rep.untimely_misses;
      }
      if (outcome.is_miss()) {
        if (measuring) rep.fetch_stall_cycles += outcome.completes_at - now;
        now = outcome.completes_at;
        cache.tick(now);
        prefetcher->on_demand_miss(block);
      }
    }

    prefetcher->on_retire(rec, candidates);
    issue();
    ++now;
  }
  cache.finish();

  const auto& c = cache.counters();
  rep.measured_instructions = trace.size() - warmup;
  rep.demand_misses = rep.non_covered_misses + rep.untimely_misses;
  rep.prefetches_issued = c.prefetches_issued;
  rep.prefetches_useful = c.prefetches_useful;
  rep.prefetches_useless = c.prefetches_useless;
  rep.prefetches_in_flight_at_end = c.prefetches_in_flight_at_end;
  rep.l1_external_requests = c.l1_external_requests;
  rep.l2_external_requests = c.l2_external_requests;
  if (rep.baseline_misses > 0) {
    const auto base = static_cast<double>(rep.baseline_misses);
    rep.covered_fraction = 1.0 - static_cast<double>(rep.demand_misses) / base;
    rep.non_covered_fraction = static_cast<double>(rep.non_covered_misses) / base;
    rep.untimely_fraction = static_cast<double>(rep.untimely_misses) / base;
    rep.overprediction_ratio = static_cast<double>(rep.prefetches_useless) / base;
  }
  if (shadow32k_misses > 0) {
    rep.bandwidth_ratio_vs_no_prefetch_32k =
        static_cast<double>(rep.l1_external_requests) / static_cast<double>(shadow32k_misses);
  }
  rep.distinct_record_counts = count_all_distinct_records(trace);
  rep.storage_bits = prefetcher->storage_bits();
  if (c.demand_misses != rep.demand_misses || c.untimely_misses != rep.untimely_misses) {
    throw Error(ErrorKind::invariant_violation, "engine and cache disagree on demand misses");
  }
  check_report_identities(rep);
  return rep;
}

}  // namespace mana
