#include "gsa/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>

#include "gsa/errors.hpp"

namespace gsa {

namespace {
void ensure_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw ConfigurationError("libsodium initialisation failed");
}
}  // namespace

Digest sha256(std::string_view domain, std::initializer_list<ByteView> parts) {
  ensure_sodium();
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  std::uint8_t len[4] = {static_cast<std::uint8_t>(domain.size() >> 24), static_cast<std::uint8_t>(domain.size() >> 16),
                         static_cast<std::uint8_t>(domain.size() >> 8), static_cast<std::uint8_t>(domain.size())};
  crypto_hash_sha256_update(&st, len, sizeof len);
  crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(domain.data()), domain.size());
  for (auto part : parts) {
    // Length-prefix every part so concatenations stay unambiguous.
    std::uint8_t plen[8];
    for (int i = 0; i < 8; ++i) plen[i] = static_cast<std::uint8_t>(static_cast<std::uint64_t>(part.size()) >> (56 - 8 * i));
    crypto_hash_sha256_update(&st, plen, sizeof plen);
    crypto_hash_sha256_update(&st, part.data(), part.size());
  }
  Digest out;
  crypto_hash_sha256_final(&st, out.data());
  return out;
}

Digest sha256(ByteView data) {
  ensure_sodium();
  Digest out;
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

Rng::Rng(std::uint64_t seed) {
  std::uint8_t be[8];
  for (int i = 0; i < 8; ++i) be[i] = static_cast<std::uint8_t>(seed >> (56 - 8 * i));
  key_ = sha256("gsa.rng.seed", {ByteView(be, 8)});
}

Rng::Rng(const Digest& key) : key_(key) { ensure_sodium(); }

void Rng::refill() {
  std::uint8_t nonce[crypto_stream_chacha20_NONCEBYTES];
  for (int i = 0; i < 8; ++i) nonce[i] = static_cast<std::uint8_t>(block_ >> (56 - 8 * i));
  ++block_;
  crypto_stream_chacha20(buffer_.data(), buffer_.size(), nonce, key_.data());
  used_ = 0;
}

void Rng::fill(std::span<std::uint8_t> out) {
  std::size_t pos = 0;
  while (pos < out.size()) {
    if (used_ == buffer_.size()) refill();
    std::size_t n = std::min(out.size() - pos, buffer_.size() - used_);
    std::memcpy(out.data() + pos, buffer_.data() + used_, n);
    used_ += n;
    pos += n;
  }
}

std::uint64_t Rng::next_u64() {
  std::uint8_t b[8];
  fill(b);
  std::uint64_t v = 0;
  for (auto x : b) v = v << 8 | x;
  return v;
}

std::uint64_t Rng::uniform(std::uint64_t bound) {
  if (bound == 0) throw ContractViolation("uniform bound must be positive");
  const std::uint64_t limit = max() - max() % bound;
  for (;;) {
    std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

Rng Rng::fork(std::string_view label) const {
  std::uint8_t pos[8];
  for (int i = 0; i < 8; ++i) pos[i] = static_cast<std::uint8_t>(block_ >> (56 - 8 * i));
  return Rng(sha256("gsa.rng.fork", {ByteView(key_), as_bytes(label), ByteView(pos, 8)}));
}

}  // namespace gsa
