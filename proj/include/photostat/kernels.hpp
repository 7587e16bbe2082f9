#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace photostat {

using u128 = unsigned __int128;

// Moments of sliding-window sums. prefix has n+1 entries (prefix[0] = 0,
// prefix[i] = counts[0] + ... + counts[i-1]); window w covers counts
// [i, i+k) so its sum is prefix[i+k] - prefix[i]. All accumulation is in
// integers, so results are exact and identical across kernel variants.
struct WindowMoments {
    std::uint64_t windows = 0;
    u128 sum = 0;
    u128 sumsq = 0;
};

// Per-start-index normalized variance over windows of fixed width w:
// mean[i] = S1/w, vnorm[i] = (S2/w - mean^2)/mean with S1, S2 the window
// sums of counts and squared counts. Windows with S1 = 0 get
// vnorm = zero_mean_value (convention of the caller).
struct KernelOps {
    const char* name;
    WindowMoments (*window_moments)(const std::uint64_t* prefix,
                                    std::size_t n_windows, std::size_t k);
    void (*variance_trace)(const std::uint64_t* prefix1,
                           const std::uint64_t* prefix2, std::size_t n_windows,
                           std::size_t w, double zero_mean_value, double* mean,
                           double* vnorm);
};

// Active implementation: AVX2 when the CPU supports it and the input fits
// the vector paths' overflow bounds, scalar otherwise. PHOTOSTAT_KERNELS
// (scalar|avx2|auto) forces a choice; forcing avx2 on unsupported hardware
// falls back to scalar.
const KernelOps& scalar_kernels();
// non-null only when compiled in and the CPU supports AVX2
const KernelOps* avx2_kernels_if_supported();
bool avx2_kernels_available();
std::string active_kernel_name();

WindowMoments window_moments(const std::uint64_t* prefix,
                             std::size_t n_windows, std::size_t k);
void variance_trace(const std::uint64_t* prefix1, const std::uint64_t* prefix2,
                    std::size_t n_windows, std::size_t w,
                    double zero_mean_value, double* mean, double* vnorm);

} // namespace photostat
