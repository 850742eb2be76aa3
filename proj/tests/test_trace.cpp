#include <gtest/gtest.h>

#include <random>
#include <set>
#include <vector>

#include "mana/trace.hpp"

using namespace mana;

namespace {

std::vector<std::uint8_t> header() { return {'M', 'I', 'T', '1', 0x01}; }

void push_record(std::vector<std::uint8_t>& bytes, std::uint64_t addr, std::uint8_t flags) {
  for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<std::uint8_t>(addr >> (8 * b)));
  bytes.push_back(flags);
}

ErrorKind parse_error(const std::vector<std::uint8_t>& bytes, std::uint64_t* offset = nullptr) {
  try {
    parse_trace(bytes);
  } catch (const Error& e) {
    if (offset != nullptr) *offset = e.offset().value_or(~0ull);
    return e.kind();
  }
  ADD_FAILURE() << "expected a parse error";
  return ErrorKind::usage;
}

std::vector<TraceRecord> random_records(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<std::uint64_t> addr(0, kAddressLimit - 1);
  std::uniform_int_distribution<int> kind(0, kBranchKindCount - 1);
  std::bernoulli_distribution taken(0.5);
  std::vector<TraceRecord> out(n);
  for (auto& r : out) {
    r.address = addr(rng);
    r.branch_kind = static_cast<BranchKind>(kind(rng));
    r.taken = r.branch_kind != BranchKind::none && taken(rng);
  }
  return out;
}

}  // namespace

TEST(TraceFormat, SingleRecord) {
  auto bytes = header();
  push_record(bytes, 0x40, 0);
  const auto recs = parse_trace(bytes);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0], (TraceRecord{0x40, BranchKind::none, false}));
}

TEST(TraceFormat, HeaderOnlyIsEmpty) { EXPECT_TRUE(parse_trace(header()).empty()); }

TEST(TraceFormat, FlagByteLayout) {
  auto bytes = header();
  push_record(bytes, 0x1000, 0x03 | 0x08);  // call, taken
  push_record(bytes, 0x2000, 0x04);         // ret, not taken
  const auto recs = parse_trace(bytes);
  EXPECT_EQ(recs[0], (TraceRecord{0x1000, BranchKind::call, true}));
  EXPECT_EQ(recs[1], (TraceRecord{0x2000, BranchKind::ret, false}));
  EXPECT_EQ(write_trace(recs), bytes);
}

TEST(TraceFormat, RejectsHighAddressBits) {
  auto bytes = header();
  push_record(bytes, 0x40, 0);
  push_record(bytes, std::uint64_t{1} << 50, 0);
  std::uint64_t off = 0;
  EXPECT_EQ(parse_error(bytes, &off), ErrorKind::address_out_of_range);
  EXPECT_EQ(off, 5u + 9u);

  auto edge = header();
  push_record(edge, kAddressLimit - 1, 0);
  EXPECT_EQ(parse_trace(edge)[0].address, kAddressLimit - 1);
  auto over = header();
  push_record(over, kAddressLimit, 0);
  EXPECT_EQ(parse_error(over), ErrorKind::address_out_of_range);
}

TEST(TraceFormat, HeaderErrors) {
  std::uint64_t off = 99;
  EXPECT_EQ(parse_error({'M', 'I', 'T', '2', 1}, &off), ErrorKind::bad_magic);
  EXPECT_EQ(off, 0u);
  EXPECT_EQ(parse_error({}), ErrorKind::bad_magic);
  EXPECT_EQ(parse_error({'M', 'I', 'T', '1', 2}, &off), ErrorKind::bad_version);
  EXPECT_EQ(off, 4u);
}

TEST(TraceFormat, TruncatedRecordReportsOffset) {
  auto bytes = header();
  push_record(bytes, 0x40, 0);
  bytes.push_back(0x11);
  bytes.push_back(0x22);
  std::uint64_t off = 0;
  EXPECT_EQ(parse_error(bytes, &off), ErrorKind::truncated_record);
  EXPECT_EQ(off, 14u);
}

TEST(TraceFormat, RejectsMalformedFlags) {
  auto reserved = header();
  push_record(reserved, 0x40, 0x10);
  EXPECT_EQ(parse_error(reserved), ErrorKind::invalid_record);
  auto bad_kind = header();
  push_record(bad_kind, 0x40, 0x07);
  EXPECT_EQ(parse_error(bad_kind), ErrorKind::invalid_record);
  auto taken_none = header();
  push_record(taken_none, 0x40, 0x08);
  EXPECT_EQ(parse_error(taken_none), ErrorKind::invalid_record);
}

TEST(TraceFormat, WriteSizes) {
  EXPECT_EQ(write_trace({}).size(), 5u);
  std::vector<TraceRecord> three{{0}, {64}, {128, BranchKind::call, true}};
  EXPECT_EQ(write_trace(three).size(), 5u + 27u);
}

TEST(TraceFormat, WriteRejectsInvalidRecords) {
  std::vector<TraceRecord> bad{{0x40}, {kAddressLimit}};
  EXPECT_THROW(write_trace(bad), Error);
  std::vector<TraceRecord> taken_none{{0x40, BranchKind::none, true}};
  try {
    write_trace(taken_none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_record);
  }
}

TEST(TraceFormat, BinaryRoundTripProperty) {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 3; ++round) {
    const auto recs = random_records(rng, 10000);
    EXPECT_EQ(parse_trace(write_trace(recs)), recs);
  }
}

TEST(TraceText, RoundTripProperty) {
  std::mt19937_64 rng(11);
  const auto recs = random_records(rng, 10000);
  EXPECT_EQ(parse_text_trace(format_text_trace(recs)), recs);
}

TEST(TraceText, CommentsAndSuffixes) {
  const auto recs = parse_text_trace(
      "# header comment\n"
      "40\n"
      "4b b+   # conditional taken at 0x4b\n"
      "\n"
      "1000 c+\n"
      "1004 r\n"
      "2000 j+\n"
      "3000 i\n");
  ASSERT_EQ(recs.size(), 6u);
  EXPECT_EQ(recs[0], (TraceRecord{0x40}));
  EXPECT_EQ(recs[1], (TraceRecord{0x4b, BranchKind::conditional, true}));
  EXPECT_EQ(recs[2], (TraceRecord{0x1000, BranchKind::call, true}));
  EXPECT_EQ(recs[3], (TraceRecord{0x1004, BranchKind::ret, false}));
  EXPECT_EQ(recs[4], (TraceRecord{0x2000, BranchKind::unconditional_direct, true}));
  EXPECT_EQ(recs[5], (TraceRecord{0x3000, BranchKind::indirect, false}));
}

TEST(TraceText, Errors) {
  EXPECT_THROW(parse_text_trace("xyz\n"), Error);
  EXPECT_THROW(parse_text_trace("40 q\n"), Error);
  EXPECT_THROW(parse_text_trace("40 c extra\n"), Error);
  try {
    parse_text_trace("40\n400000000000\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::address_out_of_range);
    EXPECT_EQ(e.offset(), 2u);
  }
}

TEST(Generate, SequentialLoop) {
  const auto recs = generate({SyntheticKind::sequential_loop, 1, 2, 2, 0});
  ASSERT_EQ(recs.size(), 4u);
  std::vector<std::uint64_t> blocks;
  for (const auto& r : recs) blocks.push_back(r.block().value);
  EXPECT_EQ(blocks, (std::vector<std::uint64_t>{0, 1, 0, 1}));
  EXPECT_EQ(recs[0].address, 0u);
  EXPECT_EQ(recs[1].address, 64u);
}

TEST(Generate, SegmentedLoopDistinctBlocks) {
  for (std::uint64_t iters : {1u, 3u, 50u}) {
    const auto recs = generate({SyntheticKind::segmented_loop, 8, 16, iters, 0});
    EXPECT_EQ(recs.size(), 8u * 16u * iters);
    std::set<std::uint64_t> distinct;
    for (const auto& r : recs) distinct.insert(r.address / 64);
    EXPECT_EQ(distinct.size(), 128u);
  }
}

TEST(Generate, SegmentedLoopSegmentsAreFarApart) {
  const auto recs = generate({SyntheticKind::segmented_loop, 8, 16, 1, 0});
  for (std::size_t s = 1; s < 8; ++s) {
    EXPECT_GE(recs[s * 16].address - recs[(s - 1) * 16].address, std::uint64_t{1} << 20);
  }
}

TEST(Generate, CallChainIsBalanced) {
  for (std::uint64_t segs : {1u, 2u, 3u, 7u}) {
    for (std::uint64_t blocks : {1u, 2u, 5u}) {
      const auto recs = generate({SyntheticKind::call_chain, segs, blocks, 4, 0});
      std::int64_t depth = 0, calls = 0, rets = 0;
      for (const auto& r : recs) {
        if (r.branch_kind == BranchKind::call) ++calls, ++depth;
        if (r.branch_kind == BranchKind::ret) ++rets, --depth;
        ASSERT_GE(depth, 0);
      }
      EXPECT_EQ(calls, rets) << segs << "x" << blocks;
      EXPECT_EQ(calls, static_cast<std::int64_t>((segs - 1) * 4));
    }
  }
}

TEST(Generate, RandomWalkDeterministicPerSeed) {
  const SyntheticTraceSpec a{SyntheticKind::random_walk, 16, 4, 20, 42};
  EXPECT_EQ(write_trace(generate(a)), write_trace(generate(a)));
  auto b = a;
  b.seed = 43;
  EXPECT_NE(generate(a), generate(b));
}

TEST(Generate, AddressesStayIn46Bits) {
  for (auto kind : {SyntheticKind::sequential_loop, SyntheticKind::segmented_loop, SyntheticKind::call_chain,
                    SyntheticKind::random_walk}) {
    for (const auto& r : generate({kind, 8, 16, 2, 1})) {
      ASSERT_LT(r.address, kAddressLimit);
      ASSERT_TRUE(r.valid());
    }
  }
}

TEST(Generate, RejectsEmptySpec) {
  EXPECT_THROW(generate({SyntheticKind::sequential_loop, 0, 2, 2, 0}), Error);
  EXPECT_THROW(generate({SyntheticKind::segmented_loop, 1, 2, 0, 0}), Error);
  EXPECT_THROW(parse_synthetic_kind("spiral"), Error);
}
