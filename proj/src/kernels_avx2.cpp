// AVX2 variants of the pixel kernels. Compiled with -mavx2; only reached
// after the dispatcher has confirmed CPU support.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cstring>

#include "fluidlevel/kernels.hpp"

namespace fluidlevel::kernels {

void threshold_mask_avx2(const std::uint8_t* src, std::size_t n, std::uint8_t threshold,
                         std::uint8_t* dst) {
  const __m256i thr = _mm256_set1_epi8(static_cast<char>(threshold));
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + i));
    // unsigned v >= thr  <=>  max(v, thr) == v
    const __m256i ge = _mm256_cmpeq_epi8(_mm256_max_epu8(v, thr), v);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + i), ge);
  }
  for (; i < n; ++i) dst[i] = src[i] >= threshold ? 255 : 0;
}

void luma_bt601_avx2(const std::uint8_t* rgb, std::size_t pixel_count, std::uint8_t* gray) {
  // 8 pixels per iteration: two 128-bit loads of 12 RGB bytes each, bytes
  // deinterleaved into 32-bit lanes. (s + 500) / 1000 is computed as a
  // truncated f32 division, exact for s <= 255000 (24-bit mantissa and the
  // fractional parts of s/1000 are >= 1/1000 away from any integer).
  const __m256i pick_r = _mm256_setr_epi8(0, -1, -1, -1, 3, -1, -1, -1, 6, -1, -1, -1, 9, -1,
                                          -1, -1, 0, -1, -1, -1, 3, -1, -1, -1, 6, -1, -1, -1,
                                          9, -1, -1, -1);
  const __m256i pick_g = _mm256_setr_epi8(1, -1, -1, -1, 4, -1, -1, -1, 7, -1, -1, -1, 10, -1,
                                          -1, -1, 1, -1, -1, -1, 4, -1, -1, -1, 7, -1, -1, -1,
                                          10, -1, -1, -1);
  const __m256i pick_b = _mm256_setr_epi8(2, -1, -1, -1, 5, -1, -1, -1, 8, -1, -1, -1, 11, -1,
                                          -1, -1, 2, -1, -1, -1, 5, -1, -1, -1, 8, -1, -1, -1,
                                          11, -1, -1, -1);
  const __m256i wr = _mm256_set1_epi32(299);
  const __m256i wg = _mm256_set1_epi32(587);
  const __m256i wb = _mm256_set1_epi32(114);
  const __m256i half = _mm256_set1_epi32(500);
  const __m256 thousand = _mm256_set1_ps(1000.0f);

  std::size_t px = 0;
  // The second 128-bit load starts at byte 3*px + 12 and reads 16 bytes, so
  // it needs 3*px + 28 <= 3*pixel_count.
  while (px + 10 <= pixel_count) {
    const __m128i lo = _mm_loadu_si128(reinterpret_cast<const __m128i*>(rgb + 3 * px));
    const __m128i hi = _mm_loadu_si128(reinterpret_cast<const __m128i*>(rgb + 3 * px + 12));
    const __m256i bytes = _mm256_set_m128i(hi, lo);

    const __m256i r = _mm256_shuffle_epi8(bytes, pick_r);
    const __m256i g = _mm256_shuffle_epi8(bytes, pick_g);
    const __m256i b = _mm256_shuffle_epi8(bytes, pick_b);

    __m256i s = _mm256_mullo_epi32(r, wr);
    s = _mm256_add_epi32(s, _mm256_mullo_epi32(g, wg));
    s = _mm256_add_epi32(s, _mm256_mullo_epi32(b, wb));
    s = _mm256_add_epi32(s, half);

    const __m256i q = _mm256_cvttps_epi32(_mm256_div_ps(_mm256_cvtepi32_ps(s), thousand));

    // Pack the eight 32-bit results down to 8 bytes.
    const __m256i packed16 = _mm256_packus_epi32(q, q);           // per lane: y0..y3 y0..y3
    const __m256i packed8 = _mm256_packus_epi16(packed16, packed16);
    const std::uint32_t lo4 = static_cast<std::uint32_t>(
        _mm_cvtsi128_si32(_mm256_castsi256_si128(packed8)));
    const std::uint32_t hi4 = static_cast<std::uint32_t>(
        _mm_cvtsi128_si32(_mm256_extracti128_si256(packed8, 1)));
    std::memcpy(gray + px, &lo4, 4);
    std::memcpy(gray + px + 4, &hi4, 4);
    px += 8;
  }
  if (px < pixel_count) luma_bt601_scalar(rgb + 3 * px, pixel_count - px, gray + px);
}

void sum_sumsq_u8_avx2(const std::uint8_t* src, std::size_t n, std::uint64_t& sum,
                       std::uint64_t& sum_sq) {
  const __m256i zero = _mm256_setzero_si256();
  __m256i sum_acc = _mm256_setzero_si256();    // 4 x u64 partial sums
  __m256i sq_acc64 = _mm256_setzero_si256();   // 4 x u64 partial sums of squares
  __m256i sq_acc32 = _mm256_setzero_si256();   // 8 x u32, drained periodically

  std::size_t i = 0;
  std::size_t block = 0;
  for (; i + 32 <= n; i += 32, ++block) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + i));
    sum_acc = _mm256_add_epi64(sum_acc, _mm256_sad_epu8(v, zero));

    const __m256i v16lo = _mm256_unpacklo_epi8(v, zero);
    const __m256i v16hi = _mm256_unpackhi_epi8(v, zero);
    sq_acc32 = _mm256_add_epi32(sq_acc32, _mm256_madd_epi16(v16lo, v16lo));
    sq_acc32 = _mm256_add_epi32(sq_acc32, _mm256_madd_epi16(v16hi, v16hi));

    // Each madd lane gains at most 2*255^2 per iteration; drain well before
    // a u32 lane could overflow.
    if (block % 8192 == 8191) {
      sq_acc64 = _mm256_add_epi64(sq_acc64, _mm256_unpacklo_epi32(sq_acc32, zero));
      sq_acc64 = _mm256_add_epi64(sq_acc64, _mm256_unpackhi_epi32(sq_acc32, zero));
      sq_acc32 = _mm256_setzero_si256();
    }
  }
  sq_acc64 = _mm256_add_epi64(sq_acc64, _mm256_unpacklo_epi32(sq_acc32, zero));
  sq_acc64 = _mm256_add_epi64(sq_acc64, _mm256_unpackhi_epi32(sq_acc32, zero));

  alignas(32) std::uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), sum_acc);
  std::uint64_t s = lanes[0] + lanes[1] + lanes[2] + lanes[3];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), sq_acc64);
  std::uint64_t sq = lanes[0] + lanes[1] + lanes[2] + lanes[3];

  for (; i < n; ++i) {
    s += src[i];
    sq += static_cast<std::uint64_t>(src[i]) * src[i];
  }
  sum = s;
  sum_sq = sq;
}

}  // namespace fluidlevel::kernels

#endif  // x86_64
