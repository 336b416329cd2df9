#include "detmath.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace tcat {

namespace {

float pow2_scale(float v, int k) {
  // Multiplies v (in [0.5, 1.5] for exp's polynomial output) by 2^k without
  // calling ldexp. Split products keep intermediates in range.
  if (k > 127) {
    int k2 = k - 127;
    if (k2 > 127) return v * std::numeric_limits<float>::infinity();
    return (v * 0x1p127f) * std::bit_cast<float>(static_cast<std::uint32_t>(k2 + 127) << 23);
  }
  if (k >= -126) {
    return v * std::bit_cast<float>(static_cast<std::uint32_t>(k + 127) << 23);
  }
  if (k >= -252) {
    int k1 = k / 2;  // trunc toward zero keeps both halves >= -126
    int k2 = k - k1;
    return (v * std::bit_cast<float>(static_cast<std::uint32_t>(k1 + 127) << 23)) *
           std::bit_cast<float>(static_cast<std::uint32_t>(k2 + 127) << 23);
  }
  return v * 0.0f;
}

}  // namespace

float det_exp(float x) {
  if (std::isnan(x)) return x;
  if (x > 89.0f) return std::numeric_limits<float>::infinity();
  if (x < -104.0f) return 0.0f;

  // k = round(x / ln 2), r = x - k ln 2 via Cody-Waite split so r is nearly
  // exact; |r| <= 0.3466.
  float fk = x * 1.44269504f;
  fk = fk + (fk >= 0.0f ? 0.5f : -0.5f);
  int k = static_cast<int>(fk);
  float kf = static_cast<float>(k);
  const float ln2_hi = 6.9314575195e-01f;
  const float ln2_lo = 1.4286067653e-06f;
  float r = x - kf * ln2_hi;
  r = r - kf * ln2_lo;

  // exp(r) by degree-6 Taylor, Horner order fixed.
  float p = 1.0f / 720.0f;
  p = p * r + 1.0f / 120.0f;
  p = p * r + 1.0f / 24.0f;
  p = p * r + 1.0f / 6.0f;
  p = p * r + 0.5f;
  p = p * r + 1.0f;
  p = p * r + 1.0f;

  return pow2_scale(p, k);
}

float det_log(float x) {
  if (std::isnan(x)) return x;
  if (x < 0.0f) return std::numeric_limits<float>::quiet_NaN();
  if (x == 0.0f) return -std::numeric_limits<float>::infinity();
  if (std::isinf(x)) return x;

  std::uint32_t bits = std::bit_cast<std::uint32_t>(x);
  int e = 0;
  if (bits < 0x00800000u) {
    // Subnormal: scale by 2^23 (exact) into the normal range.
    x = x * 8388608.0f;
    e = -23;
    bits = std::bit_cast<std::uint32_t>(x);
  }
  e += static_cast<int>(bits >> 23) - 127;
  float m = std::bit_cast<float>((bits & 0x007FFFFFu) | 0x3F800000u);
  if (m > 1.4142135f) {
    m = m * 0.5f;
    e += 1;
  }

  // ln m = 2 atanh(t) with t = (m-1)/(m+1), |t| <= 0.1717; odd series to t^9.
  float t = (m - 1.0f) / (m + 1.0f);
  float s = t * t;
  float p = 2.0f / 9.0f;
  p = p * s + 2.0f / 7.0f;
  p = p * s + 2.0f / 5.0f;
  p = p * s + 2.0f / 3.0f;
  p = p * s + 2.0f;
  float lnm = p * t;

  const float ln2_hi = 6.9313812256e-01f;
  const float ln2_lo = 9.0580006145e-06f;
  float ef = static_cast<float>(e);
  float r = ef * ln2_lo + lnm;
  return r + ef * ln2_hi;
}

}  // namespace tcat
