#pragma once

// Instruction trace model, the MIT1 binary and text encodings, and the
// synthetic workload generators.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mana/error.hpp"
#include "mana/types.hpp"

namespace mana {

/// Ordinals are the on-disk encoding (flag bits 0-2); do not reorder.
enum class BranchKind : std::uint8_t {
  none = 0,
  conditional = 1,
  unconditional_direct = 2,
  call = 3,
  ret = 4,
  indirect = 5,
};

inline constexpr std::uint8_t kBranchKindCount = 6;

struct TraceRecord {
  std::uint64_t address = 0;
  BranchKind branch_kind = BranchKind::none;
  bool taken = false;

  bool operator==(const TraceRecord&) const = default;

  BlockAddress block() const { return block_of(address); }
  bool valid() const {
    return address < kAddressLimit && !(branch_kind == BranchKind::none && taken);
  }
};

inline constexpr std::array<char, 4> kTraceMagic{'M', 'I', 'T', '1'};
inline constexpr std::uint8_t kTraceVersion = 0x01;
inline constexpr std::size_t kTraceHeaderBytes = 5;
inline constexpr std::size_t kTraceRecordBytes = 9;

inline std::vector<std::uint8_t> write_trace(std::span<const TraceRecord> records) {
  std::vector<std::uint8_t> out;
  out.reserve(kTraceHeaderBytes + records.size() * kTraceRecordBytes);
  for (char c : kTraceMagic) out.push_back(static_cast<std::uint8_t>(c));
  out.push_back(kTraceVersion);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.valid()) {
      throw Error(ErrorKind::invalid_record,
                  "record " + std::to_string(i) + " violates the trace record invariants", i);
    }
    for (unsigned b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(r.address >> (8 * b)));
    auto flags = static_cast<std::uint8_t>(static_cast<std::uint8_t>(r.branch_kind) | (r.taken ? 0x08 : 0));
    out.push_back(flags);
  }
  return out;
}

inline std::vector<TraceRecord> parse_trace(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kTraceMagic.size() ||
      !std::equal(kTraceMagic.begin(), kTraceMagic.end(), bytes.begin(),
                  [](char m, std::uint8_t b) { return static_cast<std::uint8_t>(m) == b; })) {
    throw Error(ErrorKind::bad_magic, "trace does not start with \"MIT1\"", 0);
  }
  if (bytes.size() < kTraceHeaderBytes) {
    throw Error(ErrorKind::truncated_record, "trace header is missing its version byte", 4);
  }
  if (bytes[4] != kTraceVersion) {
    throw Error(ErrorKind::bad_version, "unsupported trace version " + std::to_string(bytes[4]), 4);
  }

  std::vector<TraceRecord> records;
  records.reserve((bytes.size() - kTraceHeaderBytes) / kTraceRecordBytes);
  for (std::size_t off = kTraceHeaderBytes; off < bytes.size(); off += kTraceRecordBytes) {
    if (bytes.size() - off < kTraceRecordBytes) {
      throw Error(ErrorKind::truncated_record,
                  "trace ends inside a record at byte " + std::to_string(off), off);
    }
    std::uint64_t addr = 0;
    for (unsigned b = 0; b < 8; ++b) addr |= std::uint64_t{bytes[off + b]} << (8 * b);
    if (addr >= kAddressLimit) {
      throw Error(ErrorKind::address_out_of_range,
                  "address has bits above bit 45 set at byte " + std::to_string(off), off);
    }
    const std::uint8_t flags = bytes[off + 8];
    const std::uint8_t kind = flags & 0x07;
    const bool taken = (flags & 0x08) != 0;
    if ((flags & 0xF0) != 0 || kind >= kBranchKindCount ||
        (kind == static_cast<std::uint8_t>(BranchKind::none) && taken)) {
      throw Error(ErrorKind::invalid_record,
                  "malformed flag byte at byte " + std::to_string(off + 8), off + 8);
    }
    records.push_back(TraceRecord{addr, static_cast<BranchKind>(kind), taken});
  }
  return records;
}

// Text form: "<hex address>[ <suffix>][+]" where suffix is one of c r b j i.
// The suffix is whitespace-separated because b and c are also hex digits.

namespace detail {

constexpr char suffix_for(BranchKind kind) {
  switch (kind) {
    case BranchKind::call: return 'c';
    case BranchKind::ret: return 'r';
    case BranchKind::conditional: return 'b';
    case BranchKind::unconditional_direct: return 'j';
    case BranchKind::indirect: return 'i';
    case BranchKind::none: return '\0';
  }
  return '\0';
}

}  // namespace detail

inline std::string format_text_trace(std::span<const TraceRecord> records) {
  std::string out;
  char buf[32];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(r.address));
    out += buf;
    if (r.branch_kind != BranchKind::none) {
      out += ' ';
      out += detail::suffix_for(r.branch_kind);
      if (r.taken) out += '+';
    }
    out += '\n';
  }
  return out;
}

inline std::vector<TraceRecord> parse_text_trace(std::string_view text) {
  std::vector<TraceRecord> records;
  std::uint64_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    std::istringstream in{std::string(line)};
    std::string addr_tok, kind_tok, extra;
    if (!(in >> addr_tok)) continue;
    in >> kind_tok >> extra;
    if (!extra.empty()) {
      throw Error(ErrorKind::invalid_record, "trailing text on line " + std::to_string(line_no), line_no);
    }

    TraceRecord rec;
    std::size_t used = 0;
    try {
      rec.address = std::stoull(addr_tok, &used, 16);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != addr_tok.size()) {
      throw Error(ErrorKind::invalid_record, "bad hex address on line " + std::to_string(line_no), line_no);
    }
    if (rec.address >= kAddressLimit) {
      throw Error(ErrorKind::address_out_of_range,
                  "address above 46 bits on line " + std::to_string(line_no), line_no);
    }
    if (!kind_tok.empty()) {
      if (kind_tok.back() == '+') {
        rec.taken = true;
        kind_tok.pop_back();
      }
      if (kind_tok.size() != 1) {
        throw Error(ErrorKind::invalid_record, "bad branch suffix on line " + std::to_string(line_no), line_no);
      }
      switch (kind_tok[0]) {
        case 'c': rec.branch_kind = BranchKind::call; break;
        case 'r': rec.branch_kind = BranchKind::ret; break;
        case 'b': rec.branch_kind = BranchKind::conditional; break;
        case 'j': rec.branch_kind = BranchKind::unconditional_direct; break;
        case 'i': rec.branch_kind = BranchKind::indirect; break;
        default:
          throw Error(ErrorKind::invalid_record, "bad branch suffix on line " + std::to_string(line_no), line_no);
      }
    }
    records.push_back(rec);
  }
  return records;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_error, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io_error, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io_error, "short write to " + path);
}

/// Loads a trace file. Files starting with the MIT1 magic are decoded as
/// binary; anything else is treated as the text format.
inline std::vector<TraceRecord> load_trace_file(const std::string& path) {
  auto bytes = read_file_bytes(path);
  // "MIT" prefix: a binary trace, possibly with a bad magic or version byte.
  if (bytes.size() >= 3 && std::equal(kTraceMagic.begin(), kTraceMagic.begin() + 3, bytes.begin(),
                                      [](char m, std::uint8_t b) { return static_cast<std::uint8_t>(m) == b; })) {
    return parse_trace(bytes);
  }
  return parse_text_trace(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

// ---------------------------------------------------------------------------
// Synthetic traces. Each generated record is one instruction at the start of
// a 64-byte block, so one record == one block visit.

enum class SyntheticKind { sequential_loop, segmented_loop, call_chain, random_walk };

struct SyntheticTraceSpec {
  SyntheticKind kind = SyntheticKind::sequential_loop;
  std::uint64_t segment_count = 1;
  std::uint64_t blocks_per_segment = 1;
  std::uint64_t iterations = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (segment_count == 0 || blocks_per_segment == 0 || iterations == 0) {
      throw Error(ErrorKind::invalid_config, "segments, blocks and iterations must all be positive");
    }
  }
};

inline SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "loop" || name == "sequential_loop") return SyntheticKind::sequential_loop;
  if (name == "segmented" || name == "segmented_loop") return SyntheticKind::segmented_loop;
  if (name == "calls" || name == "call_chain") return SyntheticKind::call_chain;
  if (name == "random" || name == "random_walk") return SyntheticKind::random_walk;
  throw Error(ErrorKind::unknown_kind, "unknown trace kind '" + std::string(name) + "'");
}

/// Segment bases for segmented_loop: 1 MiB + 4 KiB apart. The 4 KiB skew
/// keeps triggers of different segments in different metadata-table sets
/// while segment heads still alias in small L1 caches.
inline constexpr std::uint64_t kSegmentStride = (std::uint64_t{1} << 20) + 4096;
inline constexpr std::uint64_t kSegmentedBase = std::uint64_t{1} << 32;
inline constexpr std::uint64_t kCallChainBase = std::uint64_t{1} << 28;
inline constexpr std::uint64_t kRandomWalkBase = std::uint64_t{1} << 22;

inline std::vector<TraceRecord> generate(const SyntheticTraceSpec& spec) {
  spec.validate();
  const auto segs = spec.segment_count;
  const auto blocks = spec.blocks_per_segment;
  std::vector<TraceRecord> out;

  switch (spec.kind) {
    case SyntheticKind::sequential_loop: {
      const auto total = segs * blocks;
      if (total > kBlockLimit) throw Error(ErrorKind::invalid_config, "loop does not fit in the address space");
      out.reserve(total * spec.iterations);
      for (std::uint64_t it = 0; it < spec.iterations; ++it) {
        for (std::uint64_t b = 0; b < total; ++b) {
          TraceRecord r{b * kBlockBytes};
          if (b + 1 == total) {
            r.branch_kind = BranchKind::conditional;
            r.taken = it + 1 < spec.iterations;
          }
          out.push_back(r);
        }
      }
      break;
    }
    case SyntheticKind::segmented_loop: {
      if (blocks * kBlockBytes > kSegmentStride ||
          kSegmentedBase + segs * kSegmentStride > kAddressLimit) {
        throw Error(ErrorKind::invalid_config, "segmented loop does not fit in the address space");
      }
      out.reserve(segs * blocks * spec.iterations);
      for (std::uint64_t it = 0; it < spec.iterations; ++it) {
        for (std::uint64_t s = 0; s < segs; ++s) {
          const auto base = kSegmentedBase + s * kSegmentStride;
          for (std::uint64_t b = 0; b < blocks; ++b) {
            TraceRecord r{base + b * kBlockBytes};
            if (b + 1 == blocks) {
              r.branch_kind = BranchKind::unconditional_direct;
              r.taken = true;
            }
            out.push_back(r);
          }
        }
      }
      break;
    }
    case SyntheticKind::call_chain: {
      // Segment s is a function that calls segment s+1 halfway through.
      const std::uint64_t stride = std::max<std::uint64_t>(4096, (blocks * kBlockBytes + 4095) / 4096 * 4096);
      if (kCallChainBase + segs * stride > kAddressLimit) {
        throw Error(ErrorKind::invalid_config, "call chain does not fit in the address space");
      }
      const std::uint64_t split = (blocks + 1) / 2;
      auto base = [&](std::uint64_t s) { return kCallChainBase + s * stride; };
      for (std::uint64_t it = 0; it < spec.iterations; ++it) {
        for (std::uint64_t s = 0; s < segs; ++s) {
          const bool leaf = s + 1 == segs;
          const std::uint64_t upto = leaf ? blocks : split;
          for (std::uint64_t b = 0; b < upto; ++b) {
            TraceRecord r{base(s) + b * kBlockBytes};
            if (b + 1 == upto) {
              r.branch_kind = leaf ? (s == 0 ? BranchKind::conditional : BranchKind::ret) : BranchKind::call;
              r.taken = leaf ? (s == 0 ? it + 1 < spec.iterations : true) : true;
            }
            out.push_back(r);
          }
        }
        for (std::uint64_t s = segs - 1; s-- > 0;) {
          // Resume just after the call instruction, in the same block.
          for (std::uint64_t b = split - 1; b < blocks; ++b) {
            TraceRecord r{base(s) + b * kBlockBytes + (b + 1 == split ? 4 : 0)};
            if (b + 1 == blocks) {
              if (s == 0) {
                r.branch_kind = BranchKind::conditional;
                r.taken = it + 1 < spec.iterations;
              } else {
                r.branch_kind = BranchKind::ret;
                r.taken = true;
              }
            }
            out.push_back(r);
          }
        }
      }
      break;
    }
    case SyntheticKind::random_walk: {
      const auto total = segs * blocks;
      if (kRandomWalkBase / kBlockBytes + total > kBlockLimit) {
        throw Error(ErrorKind::invalid_config, "random walk does not fit in the address space");
      }
      std::mt19937_64 rng(spec.seed);
      std::uniform_int_distribution<std::uint64_t> pick(0, segs - 1);
      const auto visits = spec.iterations * segs;
      out.reserve(visits * blocks);
      for (std::uint64_t v = 0; v < visits; ++v) {
        const auto s = pick(rng);
        const auto base = kRandomWalkBase + s * blocks * kBlockBytes;
        for (std::uint64_t b = 0; b < blocks; ++b) {
          TraceRecord r{base + b * kBlockBytes};
          if (b + 1 == blocks) {
            r.branch_kind = BranchKind::indirect;
            r.taken = true;
          }
          out.push_back(r);
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace mana
