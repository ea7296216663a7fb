#include "fluidlevel/kernels.hpp"

#include <cstdlib>

namespace fluidlevel::kernels {

void threshold_mask_scalar(const std::uint8_t* src, std::size_t n, std::uint8_t threshold,
                           std::uint8_t* dst) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] >= threshold ? 255 : 0;
}

void histogram256_scalar(const std::uint8_t* src, std::size_t n, std::uint32_t hist[256]) {
  // Four sub-tables break the store-to-load dependency on repeated values.
  std::uint32_t h0[256] = {0}, h1[256] = {0}, h2[256] = {0}, h3[256] = {0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    ++h0[src[i]];
    ++h1[src[i + 1]];
    ++h2[src[i + 2]];
    ++h3[src[i + 3]];
  }
  for (; i < n; ++i) ++h0[src[i]];
  for (int b = 0; b < 256; ++b) hist[b] += h0[b] + h1[b] + h2[b] + h3[b];
}

void luma_bt601_scalar(const std::uint8_t* rgb, std::size_t pixel_count, std::uint8_t* gray) {
  for (std::size_t i = 0; i < pixel_count; ++i) {
    const std::uint32_t s = 299u * rgb[3 * i] + 587u * rgb[3 * i + 1] + 114u * rgb[3 * i + 2];
    gray[i] = static_cast<std::uint8_t>((s + 500u) / 1000u);
  }
}

void sum_sumsq_u8_scalar(const std::uint8_t* src, std::size_t n, std::uint64_t& sum,
                         std::uint64_t& sum_sq) {
  std::uint64_t s = 0, sq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    s += src[i];
    sq += static_cast<std::uint64_t>(src[i]) * src[i];
  }
  sum = s;
  sum_sq = sq;
}

namespace {

enum class Backend { scalar, avx2 };

Backend pick_backend() {
#if defined(__x86_64__) || defined(_M_X64)
  if (const char* e = std::getenv("FLUIDLEVEL_FORCE_SCALAR"); e && e[0] == '1')
    return Backend::scalar;
  if (__builtin_cpu_supports("avx2")) return Backend::avx2;
#endif
  return Backend::scalar;
}

Backend backend() {
  static const Backend b = pick_backend();
  return b;
}

}  // namespace

const char* active_backend() { return backend() == Backend::avx2 ? "avx2" : "scalar"; }

void threshold_mask(const std::uint8_t* src, std::size_t n, std::uint8_t threshold,
                    std::uint8_t* dst) {
#if defined(__x86_64__) || defined(_M_X64)
  if (backend() == Backend::avx2) {
    threshold_mask_avx2(src, n, threshold, dst);
    return;
  }
#endif
  threshold_mask_scalar(src, n, threshold, dst);
}

void histogram256(const std::uint8_t* src, std::size_t n, std::uint32_t hist[256]) {
  histogram256_scalar(src, n, hist);
}

void luma_bt601(const std::uint8_t* rgb, std::size_t pixel_count, std::uint8_t* gray) {
#if defined(__x86_64__) || defined(_M_X64)
  if (backend() == Backend::avx2) {
    luma_bt601_avx2(rgb, pixel_count, gray);
    return;
  }
#endif
  luma_bt601_scalar(rgb, pixel_count, gray);
}

void sum_sumsq_u8(const std::uint8_t* src, std::size_t n, std::uint64_t& sum,
                  std::uint64_t& sum_sq) {
#if defined(__x86_64__) || defined(_M_X64)
  if (backend() == Backend::avx2) {
    sum_sumsq_u8_avx2(src, n, sum, sum_sq);
    return;
  }
#endif
  sum_sumsq_u8_scalar(src, n, sum, sum_sq);
}

}  // namespace fluidlevel::kernels
