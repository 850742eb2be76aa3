#include <gtest/gtest.h>

#include <random>

#include "mana/engine.hpp"

using namespace mana;

namespace {

std::vector<TraceRecord> blocks_to_trace(const std::vector<std::uint64_t>& blocks) {
  std::vector<TraceRecord> out;
  for (auto b : blocks) out.push_back(TraceRecord{b * kBlockBytes});
  return out;
}

EngineConfig small_l1(PrefetcherConfig pf) {
  EngineConfig c;
  c.l1.total_bytes = 16 * 1024;
  c.l1.ways = 4;
  c.prefetcher = std::move(pf);
  return c;
}

std::vector<PrefetcherConfig> all_prefetchers() {
  return {NoPrefetcherConfig{}, NextLineConfig{}, RdipConfig{}, PifConfig{}, ManaConfig{}};
}

}  // namespace

TEST(Engine, AllDistinctBlocksAreNotCovered) {
  std::vector<std::uint64_t> blocks;
  for (std::uint64_t i = 0; i < 4000; ++i) blocks.push_back(1000 * i + 7);
  const auto r = run(blocks_to_trace(blocks), EngineConfig{});
  EXPECT_EQ(r.baseline_misses, 2000u);
  EXPECT_EQ(r.non_covered_misses, r.baseline_misses);
  EXPECT_DOUBLE_EQ(r.covered_fraction, 0.0);
}

TEST(Engine, LoopThatFitsHasNoMeasuredMisses) {
  const auto trace = generate({SyntheticKind::sequential_loop, 1, 100, 20, 0});
  for (const auto& pf : all_prefetchers()) {
    EngineConfig c;
    c.prefetcher = pf;
    const auto r = run(trace, c);
    EXPECT_EQ(r.baseline_misses, 0u);
    EXPECT_EQ(r.demand_misses, 0u);
    EXPECT_EQ(r.covered_fraction, 0.0);
    EXPECT_EQ(r.untimely_fraction, 0.0);
    EXPECT_EQ(r.non_covered_fraction, 0.0);
  }
  // With no warmup the misses are the compulsory ones only.
  EngineConfig cold;
  cold.warmup_instructions = 0;
  cold.prefetcher = NoPrefetcherConfig{};
  EXPECT_EQ(run(trace, cold).baseline_misses, 100u);
}

TEST(Engine, ManaBeatsNextLineOnSegmentedLoop) {
  const std::uint64_t iters = 60;
  const auto trace = generate({SyntheticKind::segmented_loop, 8, 16, iters, 0});
  const auto mana = run(trace, small_l1(ManaConfig{}));
  const auto nl = run(trace, small_l1(NextLineConfig{}));
  EXPECT_GT(mana.covered_fraction, nl.covered_fraction);
  // Brute-force miss log for next-line: only segment heads miss with no
  // prefetch in flight, once per segment per measured iteration.
  EXPECT_EQ(nl.non_covered_misses, 8u * (iters / 2));
  EXPECT_EQ(nl.baseline_misses, 8u * 16u * (iters / 2));
}

TEST(Engine, LookaheadMonotoneOnSegmentedLoops) {
  for (auto [segs, blocks] : {std::pair<std::uint64_t, std::uint64_t>{8, 16}, {12, 16}, {8, 24}, {16, 12}}) {
    const auto trace = generate({SyntheticKind::segmented_loop, segs, blocks, 60, 0});
    double prev = -1;
    for (std::size_t l : {1u, 2u, 3u}) {
      ManaConfig m;
      m.lookahead = l;
      const auto r = run(trace, small_l1(m));
      EXPECT_GE(r.covered_fraction, prev) << segs << "x" << blocks << " L=" << l;
      prev = r.covered_fraction;
    }
  }
}

TEST(Engine, ShadowBaselineIgnoresPrefetcher) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto trace = generate({SyntheticKind::random_walk, 300, 8, 20, seed});
    std::optional<std::uint64_t> baseline;
    for (const auto& pf : all_prefetchers()) {
      const auto r = run(trace, small_l1(pf));
      if (!baseline) baseline = r.baseline_misses;
      EXPECT_EQ(r.baseline_misses, *baseline) << r.prefetcher;
    }
  }
}

TEST(Engine, IdentitiesHoldAcrossTracesAndPrefetchers) {
  std::vector<std::vector<TraceRecord>> traces{
      generate({SyntheticKind::segmented_loop, 8, 16, 30, 0}),
      generate({SyntheticKind::call_chain, 12, 9, 40, 0}),
      generate({SyntheticKind::random_walk, 500, 6, 10, 4}),
  };
  for (const auto& trace : traces) {
    for (const auto& pf : all_prefetchers()) {
      for (std::uint64_t kb : {8u, 32u}) {
        auto c = small_l1(pf);
        c.l1.total_bytes = kb * 1024;
        const auto r = run(trace, c);
        ASSERT_EQ(r.non_covered_misses + r.untimely_misses, r.demand_misses);
        ASSERT_EQ(r.prefetches_useful + r.prefetches_useless + r.prefetches_in_flight_at_end, r.prefetches_issued);
        if (r.baseline_misses > 0) {
          ASSERT_NEAR(r.non_covered_fraction + r.untimely_fraction,
                      static_cast<double>(r.demand_misses) / static_cast<double>(r.baseline_misses), 1e-12);
        }
        ASSERT_GE(r.non_covered_fraction, 0.0);
        ASSERT_GE(r.untimely_fraction, 0.0);
        ASSERT_GE(r.overprediction_ratio, 0.0);
      }
    }
  }
}

TEST(Engine, NoPrefetcherIssuesNothing) {
  const auto trace = generate({SyntheticKind::random_walk, 300, 8, 20, 9});
  const auto r = run(trace, small_l1(NoPrefetcherConfig{}));
  EXPECT_EQ(r.prefetches_issued, 0u);
  EXPECT_EQ(r.demand_misses, r.baseline_misses);
  EXPECT_EQ(r.covered_fraction, 0.0);
}

TEST(Engine, Deterministic) {
  const auto trace = generate({SyntheticKind::random_walk, 200, 8, 20, 5});
  for (const auto& pf : all_prefetchers()) EXPECT_EQ(run(trace, small_l1(pf)), run(trace, small_l1(pf)));
}

TEST(Engine, RejectsEmptyTraceAndLongWarmup) {
  try {
    run({}, EngineConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_trace);
  }
  EngineConfig c;
  c.warmup_instructions = 4;
  std::vector<TraceRecord> four(4, TraceRecord{0});
  EXPECT_THROW(run(four, c), Error);
}

TEST(Engine, ReportsStorageOfTheActivePrefetcher) {
  const auto trace = generate({SyntheticKind::sequential_loop, 1, 4, 4, 0});
  EngineConfig c;
  EXPECT_EQ(run(trace, c).storage_bits, 122368u);
  c.prefetcher = NoPrefetcherConfig{};
  EXPECT_EQ(run(trace, c).storage_bits, 0u);
}

TEST(CountRecords, SequentialBlocks) {
  const auto trace = generate({SyntheticKind::sequential_loop, 1, 16, 1, 0});
  EXPECT_EQ(count_distinct_records(trace, RecordCountKind::mana_trigger), 2u);
  EXPECT_EQ(count_distinct_records(trace, RecordCountKind::rdip_signature), 1u);
}

TEST(CountRecords, RepetitionDoesNotAddRecords) {
  for (auto kind : {SyntheticKind::segmented_loop, SyntheticKind::call_chain, SyntheticKind::random_walk}) {
    const auto once = generate({kind, 6, 10, 1, 2});
    std::vector<TraceRecord> ten;
    for (int i = 0; i < 10; ++i) ten.insert(ten.end(), once.begin(), once.end());
    EXPECT_EQ(count_all_distinct_records(once), count_all_distinct_records(ten));
  }
}

TEST(CountRecords, CallsCreateSignatures) {
  const auto trace = generate({SyntheticKind::call_chain, 4, 6, 3, 0});
  EXPECT_GT(count_distinct_records(trace, RecordCountKind::rdip_signature), 1u);
  EXPECT_THROW(parse_record_count_kind("btb"), Error);
}
