#include "hash.hpp"

#include <mutex>

#include "error.hpp"

namespace tcat {

void ensure_crypto_init() {
  static const int rc = sodium_init();
  if (rc < 0) raise(Errc::crypto, "libsodium initialization failed");
}

Digest sha256(BytesView data) {
  ensure_crypto_init();
  Digest d;
  crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
  return d;
}

Sha256::Sha256() {
  ensure_crypto_init();
  crypto_hash_sha256_init(&state_);
}

Sha256& Sha256::update(BytesView data) {
  crypto_hash_sha256_update(&state_, data.data(), data.size());
  return *this;
}

Sha256& Sha256::update_byte(std::uint8_t b) {
  crypto_hash_sha256_update(&state_, &b, 1);
  return *this;
}

Digest Sha256::finish() {
  Digest d;
  crypto_hash_sha256_final(&state_, d.bytes.data());
  return d;
}

}  // namespace tcat
