#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gsa {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string to_hex(ByteView data);
/// Throws ParseError on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

/// Big-endian writer for the canonical encodings: every field is a 4-byte
/// big-endian length followed by its content.
class Writer {
 public:
  Writer& u8(std::uint8_t v);
  Writer& u16(std::uint16_t v);
  Writer& u32(std::uint32_t v);
  Writer& u64(std::uint64_t v);
  Writer& raw(ByteView data);

  Writer& field(ByteView data);
  Writer& field(std::string_view text) { return field(as_bytes(text)); }
  Writer& field_u8(std::uint8_t v);
  Writer& field_u32(std::uint32_t v);
  Writer& field_u64(std::uint64_t v);
  Writer& field_i64(std::int64_t v) { return field_u64(static_cast<std::uint64_t>(v)); }
  /// A list field: count, then each item as its own length-prefixed field.
  Writer& field_list(const std::vector<Bytes>& items);
  Writer& field_strings(const std::vector<std::string>& items);

  const Bytes& bytes() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

/// Strict reader; every accessor throws ParseError on truncated input.
class Reader {
 public:
  explicit Reader(ByteView data) : data_(data) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  ByteView raw(std::size_t n);

  ByteView field();
  std::string field_string();
  std::uint8_t field_u8();
  std::uint32_t field_u32();
  std::uint64_t field_u64();
  std::int64_t field_i64() { return static_cast<std::int64_t>(field_u64()); }
  std::vector<Bytes> field_list();
  std::vector<std::string> field_strings();

  void expect_version(std::uint16_t version);
  bool done() const noexcept { return pos_ == data_.size(); }
  /// Throws ParseError if unread bytes remain.
  void expect_end() const;

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

}  // namespace gsa
