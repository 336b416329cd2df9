#pragma once

#include <sodium.h>

#include <array>
#include <compare>
#include <cstdint>
#include <string>

#include "bytes.hpp"

namespace tcat {

struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  auto operator<=>(const Digest&) const = default;
  std::string hex() const { return to_hex(BytesView(bytes.data(), bytes.size())); }
  BytesView view() const { return BytesView(bytes.data(), bytes.size()); }
};

Digest sha256(BytesView data);

class Sha256 {
 public:
  Sha256();
  Sha256& update(BytesView data);
  Sha256& update_byte(std::uint8_t b);
  Digest finish();

 private:
  crypto_hash_sha256_state state_;
};

// Initializes libsodium once; throws on failure.
void ensure_crypto_init();

}  // namespace tcat
