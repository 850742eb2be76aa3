#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mana {

enum class ErrorKind {
  bad_magic,
  bad_version,
  truncated_record,
  address_out_of_range,
  invalid_record,
  invalid_geometry,
  unknown_kind,
  invalid_slot,
  empty_trace,
  unknown_sweep_key,
  invalid_config,
  io_error,
  usage,
  invariant_violation,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::bad_magic: return "BadMagic";
    case ErrorKind::bad_version: return "BadVersion";
    case ErrorKind::truncated_record: return "TruncatedRecord";
    case ErrorKind::address_out_of_range: return "AddressOutOfRange";
    case ErrorKind::invalid_record: return "InvalidRecord";
    case ErrorKind::invalid_geometry: return "InvalidGeometry";
    case ErrorKind::unknown_kind: return "UnknownKind";
    case ErrorKind::invalid_slot: return "InvalidSlot";
    case ErrorKind::empty_trace: return "EmptyTrace";
    case ErrorKind::unknown_sweep_key: return "UnknownSweepKey";
    case ErrorKind::invalid_config: return "InvalidConfig";
    case ErrorKind::io_error: return "IoError";
    case ErrorKind::usage: return "Usage";
    case ErrorKind::invariant_violation: return "InvariantViolation";
  }
  return "Unknown";
}

/// Every failure raised by the library. `offset` is set for trace decoding
/// errors (byte offset into the stream, or line number for text traces);
/// `key` names the offending configuration path when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::uint64_t> offset = std::nullopt,
        std::optional<std::string> key = std::nullopt)
      : std::runtime_error(message), kind_(kind), offset_(offset), key_(std::move(key)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::optional<std::uint64_t>& offset() const noexcept { return offset_; }
  const std::optional<std::string>& key() const noexcept { return key_; }

 private:
  ErrorKind kind_;
  std::optional<std::uint64_t> offset_;
  std::optional<std::string> key_;
};

}  // namespace mana
