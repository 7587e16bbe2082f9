#include "photostat/kernels.hpp"

#include <cstdlib>
#include <string>

namespace photostat {

#if defined(PHOTOSTAT_HAVE_AVX2)
const KernelOps& avx2_kernels_impl(); // kernels_avx2.cpp
#endif

namespace {

bool cpu_has_avx2() {
#if defined(PHOTOSTAT_HAVE_AVX2)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

// PHOTOSTAT_KERNELS=scalar|avx2|auto (default auto). avx2 without CPU
// support silently degrades to scalar rather than faulting.
bool dispatch_avx2() {
    static const bool value = [] {
        const char* e = std::getenv("PHOTOSTAT_KERNELS");
        if (e && std::string(e) == "scalar") return false;
        return cpu_has_avx2();
    }();
    return value;
}

// Vector paths assume window sums fit 32-bit lanes and 64-bit accumulators
// never wrap; prefix arrays are monotone so the final entry bounds every
// window sum.
bool fits_avx2_moments(const std::uint64_t* prefix, std::size_t n_windows,
                       std::size_t k) {
    if (n_windows == 0) return false;
    std::uint64_t total = prefix[n_windows - 1 + k];
    if (total > 0xFFFFFFFFull) return false;
    u128 bound = static_cast<u128>(total) * total;
    return bound * n_windows < (static_cast<u128>(1) << 63);
}

bool fits_avx2_trace(const std::uint64_t* prefix1, const std::uint64_t* prefix2,
                     std::size_t n_windows, std::size_t w) {
    if (n_windows == 0) return false;
    return prefix1[n_windows - 1 + w] < (1u << 31) &&
           prefix2[n_windows - 1 + w] < (1u << 31);
}

} // namespace

const KernelOps* avx2_kernels_if_supported() {
#if defined(PHOTOSTAT_HAVE_AVX2)
    if (cpu_has_avx2()) return &avx2_kernels_impl();
#endif
    return nullptr;
}

bool avx2_kernels_available() { return cpu_has_avx2(); }

std::string active_kernel_name() {
    return dispatch_avx2() ? "avx2" : "scalar";
}

WindowMoments window_moments(const std::uint64_t* prefix,
                             std::size_t n_windows, std::size_t k) {
    if (n_windows == 0) return {};
#if defined(PHOTOSTAT_HAVE_AVX2)
    if (dispatch_avx2() && fits_avx2_moments(prefix, n_windows, k))
        return avx2_kernels_impl().window_moments(prefix, n_windows, k);
#endif
    return scalar_kernels().window_moments(prefix, n_windows, k);
}

void variance_trace(const std::uint64_t* prefix1, const std::uint64_t* prefix2,
                    std::size_t n_windows, std::size_t w,
                    double zero_mean_value, double* mean, double* vnorm) {
    if (n_windows == 0) return;
#if defined(PHOTOSTAT_HAVE_AVX2)
    if (dispatch_avx2() && fits_avx2_trace(prefix1, prefix2, n_windows, w)) {
        avx2_kernels_impl().variance_trace(prefix1, prefix2, n_windows, w,
                                           zero_mean_value, mean, vnorm);
        return;
    }
#endif
    scalar_kernels().variance_trace(prefix1, prefix2, n_windows, w,
                                    zero_mean_value, mean, vnorm);
}

} // namespace photostat
