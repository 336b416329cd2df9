#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "bytes.hpp"
#include "hash.hpp"

namespace tcat {

using PublicKey = std::array<std::uint8_t, 32>;
using SecretKey = std::array<std::uint8_t, 64>;  // libsodium layout: seed || public key
using Signature = std::array<std::uint8_t, 64>;

struct KeyPair {
  PublicKey public_key{};
  SecretKey secret_key{};
};

KeyPair generate_keypair();
KeyPair keypair_from_seed(std::span<const std::uint8_t, 32> seed);
PublicKey public_of(const SecretKey& sk);

// Ed25519 over a domain-separated message: context string, then the root.
// The fingerprint (SHA-256 of the public key) travels with the signature so
// a verifier can tell "wrong key" from "bad signature" in reports.
struct SignedRoot {
  Digest root;
  Signature signature{};
  Digest signer_fingerprint;

  static constexpr std::size_t kWireSize = 32 + 64 + 32;
  Bytes wire_bytes() const;
  static SignedRoot from_wire(BytesView data);
};

SignedRoot sign_root(const Digest& root, const KeyPair& kp);
// False on any mismatch (wrong key, wrong root, forged bytes); never throws
// on malformed input.
bool verify_signed_root(const SignedRoot& sr, const PublicKey& pk);

Digest key_fingerprint(const PublicKey& pk);

// Key files are a PEM-like wrapper around base64 of the raw key bytes.
void write_secret_key_file(const std::string& path, const KeyPair& kp);
KeyPair read_secret_key_file(const std::string& path);
void write_public_key_file(const std::string& path, const PublicKey& pk);
PublicKey read_public_key_file(const std::string& path);

}  // namespace tcat
