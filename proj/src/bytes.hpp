#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace tcat {

using Bytes = std::vector<std::uint8_t>;
using BytesView = std::span<const std::uint8_t>;

inline BytesView as_view(const Bytes& b) { return BytesView(b.data(), b.size()); }
inline BytesView as_view(const std::string& s) {
  return BytesView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

// All multi-byte integers in canonical encodings are little-endian.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(BytesView data) { out_.insert(out_.end(), data.begin(), data.end()); }
  void raw(const Bytes& data) { raw(as_view(data)); }
  // length-prefixed block: u64 byte count, then the bytes
  void lp(BytesView data) {
    u64(data.size());
    raw(data);
  }
  void lp(const Bytes& data) { lp(as_view(data)); }

  const Bytes& bytes() const& { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(BytesView data) : data_(data) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  BytesView raw(std::size_t n) { return take(n); }
  Bytes lp() {
    std::uint64_t n = u64();
    if (n > remaining()) raise(Errc::format, "length prefix exceeds remaining bytes");
    BytesView v = take(static_cast<std::size_t>(n));
    return Bytes(v.begin(), v.end());
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }
  void expect_done() const {
    if (!done()) raise(Errc::format, "trailing bytes after structure");
  }

 private:
  BytesView take(std::size_t n) {
    if (n > remaining()) raise(Errc::format, "truncated structure");
    BytesView v = data_.subspan(pos_, n);
    pos_ += n;
    return v;
  }
  std::uint64_t le(int n) {
    BytesView v = take(static_cast<std::size_t>(n));
    std::uint64_t r = 0;
    for (int i = 0; i < n; ++i) r |= static_cast<std::uint64_t>(v[i]) << (8 * i);
    return r;
  }
  BytesView data_;
  std::size_t pos_ = 0;
};

std::string to_hex(BytesView data);
Bytes from_hex(const std::string& hex);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, BytesView data);
void write_file(const std::string& path, const std::string& text);

}  // namespace tcat
