#include "sign.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>

#include "error.hpp"

namespace tcat {

namespace {

constexpr char kRootContext[] = "tcat-attestation-root/v1";

Bytes signing_message(const Digest& root) {
  ByteWriter w;
  w.raw(BytesView(reinterpret_cast<const std::uint8_t*>(kRootContext), sizeof(kRootContext) - 1));
  w.raw(root.view());
  return w.take();
}

}  // namespace

KeyPair generate_keypair() {
  ensure_crypto_init();
  KeyPair kp;
  crypto_sign_keypair(kp.public_key.data(), kp.secret_key.data());
  return kp;
}

KeyPair keypair_from_seed(std::span<const std::uint8_t, 32> seed) {
  ensure_crypto_init();
  KeyPair kp;
  crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
  return kp;
}

PublicKey public_of(const SecretKey& sk) {
  PublicKey pk;
  std::copy(sk.begin() + 32, sk.end(), pk.begin());
  return pk;
}

Digest key_fingerprint(const PublicKey& pk) {
  return sha256(BytesView(pk.data(), pk.size()));
}

Bytes SignedRoot::wire_bytes() const {
  ByteWriter w;
  w.raw(root.view());
  w.raw(BytesView(signature.data(), signature.size()));
  w.raw(signer_fingerprint.view());
  return w.take();
}

SignedRoot SignedRoot::from_wire(BytesView data) {
  if (data.size() != kWireSize) raise(Errc::format, "signed root block has wrong size");
  ByteReader r(data);
  SignedRoot sr;
  BytesView v = r.raw(32);
  std::copy(v.begin(), v.end(), sr.root.bytes.begin());
  v = r.raw(64);
  std::copy(v.begin(), v.end(), sr.signature.begin());
  v = r.raw(32);
  std::copy(v.begin(), v.end(), sr.signer_fingerprint.bytes.begin());
  return sr;
}

SignedRoot sign_root(const Digest& root, const KeyPair& kp) {
  ensure_crypto_init();
  SignedRoot sr;
  sr.root = root;
  Bytes msg = signing_message(root);
  if (crypto_sign_detached(sr.signature.data(), nullptr, msg.data(), msg.size(),
                           kp.secret_key.data()) != 0)
    raise(Errc::crypto, "signing failed");
  sr.signer_fingerprint = key_fingerprint(kp.public_key);
  return sr;
}

bool verify_signed_root(const SignedRoot& sr, const PublicKey& pk) {
  try {
    ensure_crypto_init();
    if (key_fingerprint(pk) != sr.signer_fingerprint) return false;
    Bytes msg = signing_message(sr.root);
    return crypto_sign_verify_detached(sr.signature.data(), msg.data(), msg.size(), pk.data()) == 0;
  } catch (...) {
    return false;
  }
}

namespace {

std::string b64_encode(BytesView data) {
  std::string out(sodium_base64_encoded_len(data.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
  sodium_bin2base64(out.data(), out.size(), data.data(), data.size(),
                    sodium_base64_VARIANT_ORIGINAL);
  out.resize(std::strlen(out.c_str()));
  return out;
}

Bytes b64_decode(const std::string& text) {
  Bytes out(text.size());
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), " \t\r\n", &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0)
    raise(Errc::format, "invalid base64 in key file");
  out.resize(len);
  return out;
}

std::string wrap_pem(const std::string& label, BytesView data) {
  std::string body = b64_encode(data);
  std::string out = "-----BEGIN " + label + "-----\n";
  for (std::size_t i = 0; i < body.size(); i += 64) {
    out += body.substr(i, 64);
    out += '\n';
  }
  out += "-----END " + label + "-----\n";
  return out;
}

Bytes unwrap_pem(const std::string& label, const std::string& text) {
  const std::string begin = "-----BEGIN " + label + "-----";
  const std::string end = "-----END " + label + "-----";
  std::size_t b = text.find(begin);
  std::size_t e = text.find(end);
  if (b == std::string::npos || e == std::string::npos || e < b)
    raise(Errc::format, "key file does not contain a " + label + " block");
  std::string body = text.substr(b + begin.size(), e - b - begin.size());
  return b64_decode(body);
}

std::string read_text_file(const std::string& path) {
  Bytes data = read_file(path);
  return std::string(data.begin(), data.end());
}

constexpr char kSecretLabel[] = "TCAT ED25519 SECRET KEY";
constexpr char kPublicLabel[] = "TCAT ED25519 PUBLIC KEY";

}  // namespace

void write_secret_key_file(const std::string& path, const KeyPair& kp) {
  write_file(path, wrap_pem(kSecretLabel, BytesView(kp.secret_key.data(), kp.secret_key.size())));
}

KeyPair read_secret_key_file(const std::string& path) {
  Bytes raw = unwrap_pem(kSecretLabel, read_text_file(path));
  if (raw.size() != 64) raise(Errc::format, "secret key must be 64 bytes");
  KeyPair kp;
  std::copy(raw.begin(), raw.end(), kp.secret_key.begin());
  kp.public_key = public_of(kp.secret_key);
  return kp;
}

void write_public_key_file(const std::string& path, const PublicKey& pk) {
  write_file(path, wrap_pem(kPublicLabel, BytesView(pk.data(), pk.size())));
}

PublicKey read_public_key_file(const std::string& path) {
  Bytes raw = unwrap_pem(kPublicLabel, read_text_file(path));
  if (raw.size() != 32) raise(Errc::format, "public key must be 32 bytes");
  PublicKey pk;
  std::copy(raw.begin(), raw.end(), pk.begin());
  return pk;
}

}  // namespace tcat
