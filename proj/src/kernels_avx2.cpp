#include "photostat/kernels.hpp"

// =====================================================================
// AVX2 kernels. Compiled with -mavx2 for this translation unit only;
// callers must gate on runtime CPU support. The dispatcher additionally
// guarantees the integer bounds stated at each kernel, so the 64-bit
// accumulators and 32-bit lane tricks below are exact and the results
// match the scalar reference bit for bit.
// =====================================================================

#include <immintrin.h>

namespace photostat {

namespace {

// Requires: every window sum < 2^32 and n_windows * total^2 < 2^63
// (dispatcher checks via the final prefix entry).
WindowMoments avx2_window_moments(const std::uint64_t* prefix,
                                  std::size_t n_windows, std::size_t k) {
    WindowMoments m;
    m.windows = n_windows;
    __m256i acc_s = _mm256_setzero_si256();
    __m256i acc_q = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 4 <= n_windows; i += 4) {
        __m256i hi = _mm256_loadu_si256(
            reinterpret_cast<const __m256i*>(prefix + i + k));
        __m256i lo =
            _mm256_loadu_si256(reinterpret_cast<const __m256i*>(prefix + i));
        __m256i d = _mm256_sub_epi64(hi, lo); // fits 32 bits per lane
        acc_s = _mm256_add_epi64(acc_s, d);
        acc_q = _mm256_add_epi64(acc_q, _mm256_mul_epu32(d, d));
    }
    alignas(32) std::uint64_t ls[4], lq[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(ls), acc_s);
    _mm256_store_si256(reinterpret_cast<__m256i*>(lq), acc_q);
    std::uint64_t sum = ls[0] + ls[1] + ls[2] + ls[3];
    std::uint64_t sumsq = lq[0] + lq[1] + lq[2] + lq[3];
    for (; i < n_windows; ++i) {
        std::uint64_t d = prefix[i + k] - prefix[i];
        sum += d;
        sumsq += d * d;
    }
    m.sum = sum;
    m.sumsq = sumsq;
    return m;
}

// Requires: final entries of both prefixes < 2^31 (window sums convert
// through signed 32-bit lanes). Same expression tree as the scalar kernel
// (cvt, div, mul, sub, div; no FMA), so outputs are bit-identical.
void avx2_variance_trace(const std::uint64_t* prefix1,
                         const std::uint64_t* prefix2, std::size_t n_windows,
                         std::size_t w, double zero_mean_value, double* mean,
                         double* vnorm) {
    const double wd = static_cast<double>(w);
    const __m256d vw = _mm256_set1_pd(wd);
    const __m256d vzero_conv = _mm256_set1_pd(zero_mean_value);
    const __m256i izero = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 4 <= n_windows; i += 4) {
        __m256i d1 = _mm256_sub_epi64(
            _mm256_loadu_si256(reinterpret_cast<const __m256i*>(prefix1 + i + w)),
            _mm256_loadu_si256(reinterpret_cast<const __m256i*>(prefix1 + i)));
        __m256i d2 = _mm256_sub_epi64(
            _mm256_loadu_si256(reinterpret_cast<const __m256i*>(prefix2 + i + w)),
            _mm256_loadu_si256(reinterpret_cast<const __m256i*>(prefix2 + i)));
        // pack the low 32 bits of each 64-bit lane into a __m128i
        __m128i p1 = _mm_castps_si128(_mm_shuffle_ps(
            _mm_castsi128_ps(_mm256_castsi256_si128(d1)),
            _mm_castsi128_ps(_mm256_extracti128_si256(d1, 1)),
            _MM_SHUFFLE(2, 0, 2, 0)));
        __m128i p2 = _mm_castps_si128(_mm_shuffle_ps(
            _mm_castsi128_ps(_mm256_castsi256_si128(d2)),
            _mm_castsi128_ps(_mm256_extracti128_si256(d2, 1)),
            _MM_SHUFFLE(2, 0, 2, 0)));
        __m256d m = _mm256_div_pd(_mm256_cvtepi32_pd(p1), vw);
        __m256d ex2 = _mm256_div_pd(_mm256_cvtepi32_pd(p2), vw);
        __m256d v =
            _mm256_div_pd(_mm256_sub_pd(ex2, _mm256_mul_pd(m, m)), m);
        __m256d empty =
            _mm256_castsi256_pd(_mm256_cmpeq_epi64(d1, izero));
        _mm256_storeu_pd(mean + i,
                         _mm256_blendv_pd(m, _mm256_setzero_pd(), empty));
        _mm256_storeu_pd(vnorm + i, _mm256_blendv_pd(v, vzero_conv, empty));
    }
    for (; i < n_windows; ++i) {
        std::uint64_t d1 = prefix1[i + w] - prefix1[i];
        std::uint64_t d2 = prefix2[i + w] - prefix2[i];
        if (d1 == 0) {
            mean[i] = 0.0;
            vnorm[i] = zero_mean_value;
        } else {
            double m = static_cast<double>(d1) / wd;
            double ex2 = static_cast<double>(d2) / wd;
            mean[i] = m;
            vnorm[i] = (ex2 - m * m) / m;
        }
    }
}

} // namespace

const KernelOps& avx2_kernels_impl() {
    static const KernelOps ops{"avx2", &avx2_window_moments,
                               &avx2_variance_trace};
    return ops;
}

} // namespace photostat
