#pragma once

#include <cstddef>
#include <cstdint>

namespace fluidlevel::kernels {

// Scalar reference kernels. These define the semantics; SIMD variants must
// match them byte for byte (checked by the equivalence tests).

/// dst[i] = 255 if src[i] >= threshold else 0.
void threshold_mask_scalar(const std::uint8_t* src, std::size_t n, std::uint8_t threshold,
                           std::uint8_t* dst);

/// 256-bin intensity histogram, accumulated into hist (not cleared first).
void histogram256_scalar(const std::uint8_t* src, std::size_t n, std::uint32_t hist[256]);

/// Interleaved RGB -> gray, Y = round(0.299 R + 0.587 G + 0.114 B), computed
/// exactly as (299 R + 587 G + 114 B + 500) / 1000 in integers.
void luma_bt601_scalar(const std::uint8_t* rgb, std::size_t pixel_count, std::uint8_t* gray);

/// Sum and sum of squares of a byte buffer.
void sum_sumsq_u8_scalar(const std::uint8_t* src, std::size_t n, std::uint64_t& sum,
                         std::uint64_t& sum_sq);

#if defined(__x86_64__) || defined(_M_X64)
void threshold_mask_avx2(const std::uint8_t* src, std::size_t n, std::uint8_t threshold,
                         std::uint8_t* dst);
void luma_bt601_avx2(const std::uint8_t* rgb, std::size_t pixel_count, std::uint8_t* gray);
void sum_sumsq_u8_avx2(const std::uint8_t* src, std::size_t n, std::uint64_t& sum,
                       std::uint64_t& sum_sq);
#endif

// Dispatching entry points. The backend is picked once per process: AVX2 when
// the CPU supports it, scalar otherwise. FLUIDLEVEL_FORCE_SCALAR=1 in the
// environment pins the scalar path. Histogramming has no profitable SIMD
// formulation on AVX2, so it always runs the scalar kernel.
void threshold_mask(const std::uint8_t* src, std::size_t n, std::uint8_t threshold,
                    std::uint8_t* dst);
void histogram256(const std::uint8_t* src, std::size_t n, std::uint32_t hist[256]);
void luma_bt601(const std::uint8_t* rgb, std::size_t pixel_count, std::uint8_t* gray);
void sum_sumsq_u8(const std::uint8_t* src, std::size_t n, std::uint64_t& sum,
                  std::uint64_t& sum_sq);

/// Name of the backend the dispatcher resolved to: "scalar" or "avx2".
const char* active_backend();

}  // namespace fluidlevel::kernels
