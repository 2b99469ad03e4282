#include "gsa/bytes.hpp"

#include "gsa/errors.hpp"

namespace gsa {

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

namespace {
int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw ParseError("hex string has odd length");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nibble(hex[2 * i]);
    int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw ParseError("invalid hex character");
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

Writer& Writer::u8(std::uint8_t v) {
  out_.push_back(v);
  return *this;
}

Writer& Writer::u16(std::uint16_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
  return *this;
}

Writer& Writer::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  return *this;
}

Writer& Writer::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  return *this;
}

Writer& Writer::raw(ByteView data) {
  out_.insert(out_.end(), data.begin(), data.end());
  return *this;
}

Writer& Writer::field(ByteView data) {
  if (data.size() > UINT32_MAX) throw ContractViolation("field longer than 2^32-1 bytes");
  u32(static_cast<std::uint32_t>(data.size()));
  return raw(data);
}

Writer& Writer::field_u8(std::uint8_t v) {
  u32(1);
  return u8(v);
}

Writer& Writer::field_u32(std::uint32_t v) {
  u32(4);
  return u32(v);
}

Writer& Writer::field_u64(std::uint64_t v) {
  u32(8);
  return u64(v);
}

Writer& Writer::field_list(const std::vector<Bytes>& items) {
  Writer inner;
  inner.u32(static_cast<std::uint32_t>(items.size()));
  for (const auto& item : items) inner.field(item);
  return field(inner.bytes());
}

Writer& Writer::field_strings(const std::vector<std::string>& items) {
  Writer inner;
  inner.u32(static_cast<std::uint32_t>(items.size()));
  for (const auto& item : items) inner.field(item);
  return field(inner.bytes());
}

std::uint8_t Reader::u8() { return raw(1)[0]; }

std::uint16_t Reader::u16() {
  auto b = raw(2);
  return static_cast<std::uint16_t>(b[0] << 8 | b[1]);
}

std::uint32_t Reader::u32() {
  auto b = raw(4);
  std::uint32_t v = 0;
  for (auto x : b) v = v << 8 | x;
  return v;
}

std::uint64_t Reader::u64() {
  auto b = raw(8);
  std::uint64_t v = 0;
  for (auto x : b) v = v << 8 | x;
  return v;
}

ByteView Reader::raw(std::size_t n) {
  if (data_.size() - pos_ < n) throw ParseError("truncated input");
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

ByteView Reader::field() { return raw(u32()); }

std::string Reader::field_string() {
  auto b = field();
  return {reinterpret_cast<const char*>(b.data()), b.size()};
}

std::uint8_t Reader::field_u8() {
  if (u32() != 1) throw ParseError("expected 1-byte field");
  return u8();
}

std::uint32_t Reader::field_u32() {
  if (u32() != 4) throw ParseError("expected 4-byte field");
  return u32();
}

std::uint64_t Reader::field_u64() {
  if (u32() != 8) throw ParseError("expected 8-byte field");
  return u64();
}

std::vector<Bytes> Reader::field_list() {
  Reader inner(field());
  std::uint32_t count = inner.u32();
  std::vector<Bytes> items;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto item = inner.field();
    items.emplace_back(item.begin(), item.end());
  }
  inner.expect_end();
  return items;
}

std::vector<std::string> Reader::field_strings() {
  Reader inner(field());
  std::uint32_t count = inner.u32();
  std::vector<std::string> items;
  for (std::uint32_t i = 0; i < count; ++i) items.push_back(inner.field_string());
  inner.expect_end();
  return items;
}

void Reader::expect_version(std::uint16_t version) {
  if (u16() != version) throw ParseError("unsupported encoding version");
}

void Reader::expect_end() const {
  if (!done()) throw ParseError("trailing bytes after encoding");
}

}  // namespace gsa
