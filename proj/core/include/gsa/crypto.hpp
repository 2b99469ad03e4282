#pragma once

// Hashing and deterministic randomness, backed by libsodium.

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

#include "gsa/bytes.hpp"

namespace gsa {

/// Domain-separated SHA-256: H(len(domain) || domain || parts...).
Digest sha256(std::string_view domain, std::initializer_list<ByteView> parts);
Digest sha256(ByteView data);

/// Seeded ChaCha20 keystream. Identical seeds give identical streams on
/// every platform; not thread-safe, give each execution context its own.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);
  explicit Rng(const Digest& key);

  void fill(std::span<std::uint8_t> out);
  std::uint64_t next_u64();
  /// Uniform in [0, bound) without modulo bias. `bound` must be > 0.
  std::uint64_t uniform(std::uint64_t bound);
  /// Independent child stream; does not advance this stream.
  Rng fork(std::string_view label) const;

  result_type operator()() { return next_u64(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

 private:
  void refill();

  Digest key_{};
  std::uint64_t block_ = 0;
  std::array<std::uint8_t, 512> buffer_{};
  std::size_t used_ = 512;
};

}  // namespace gsa
