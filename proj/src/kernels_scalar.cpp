#include "photostat/kernels.hpp"

namespace photostat {

// =====================================================================
// Reference kernels. 128-bit integer accumulation: exact for any input,
// and the yardstick the vector variants are equivalence-tested against.
// =====================================================================

namespace {

WindowMoments scalar_window_moments(const std::uint64_t* prefix,
                                    std::size_t n_windows, std::size_t k) {
    WindowMoments m;
    m.windows = n_windows;
    u128 sum = 0, sumsq = 0;
    for (std::size_t i = 0; i < n_windows; ++i) {
        std::uint64_t d = prefix[i + k] - prefix[i];
        sum += d;
        sumsq += static_cast<u128>(d) * d;
    }
    m.sum = sum;
    m.sumsq = sumsq;
    return m;
}

void scalar_variance_trace(const std::uint64_t* prefix1,
                           const std::uint64_t* prefix2, std::size_t n_windows,
                           std::size_t w, double zero_mean_value, double* mean,
                           double* vnorm) {
    const double wd = static_cast<double>(w);
    for (std::size_t i = 0; i < n_windows; ++i) {
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

const KernelOps& scalar_kernels() {
    static const KernelOps ops{"scalar", &scalar_window_moments,
                               &scalar_variance_trace};
    return ops;
}

} // namespace photostat
