#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <vector>

#include "photostat/kernels.hpp"
#include "photostat/rng.hpp"

using namespace photostat;

namespace {

std::vector<std::uint64_t> make_prefix(const std::vector<std::uint32_t>& c) {
    std::vector<std::uint64_t> p(c.size() + 1, 0);
    for (std::size_t i = 0; i < c.size(); ++i) p[i + 1] = p[i] + c[i];
    return p;
}

std::vector<std::uint64_t> make_prefix_sq(const std::vector<std::uint32_t>& c) {
    std::vector<std::uint64_t> p(c.size() + 1, 0);
    for (std::size_t i = 0; i < c.size(); ++i)
        p[i + 1] = p[i] + static_cast<std::uint64_t>(c[i]) * c[i];
    return p;
}

// windowed moments the slow way, straight off the counts
WindowMoments brute_moments(const std::vector<std::uint32_t>& c, std::size_t k) {
    WindowMoments m;
    m.windows = c.size() - k + 1;
    for (std::size_t i = 0; i + k <= c.size(); ++i) {
        std::uint64_t s = 0;
        for (std::size_t j = i; j < i + k; ++j) s += c[j];
        m.sum += s;
        m.sumsq += static_cast<u128>(s) * s;
    }
    return m;
}

std::vector<std::uint32_t> random_counts(Rng& rng, std::size_t n,
                                         std::uint32_t hi) {
    std::vector<std::uint32_t> c(n);
    for (auto& v : c) v = static_cast<std::uint32_t>(rng.below(hi + 1));
    return c;
}

} // namespace

TEST_CASE("scalar window moments match brute force") {
    Rng rng(7);
    for (std::size_t n : {1u, 2u, 5u, 33u, 257u}) {
        for (std::uint32_t hi : {1u, 3u, 1000u}) {
            auto c = random_counts(rng, n, hi);
            auto p = make_prefix(c);
            for (std::size_t k : {std::size_t(1), std::size_t(2), n}) {
                if (k > n) continue;
                WindowMoments a =
                    scalar_kernels().window_moments(p.data(), n - k + 1, k);
                WindowMoments b = brute_moments(c, k);
                CHECK(a.windows == b.windows);
                CHECK(a.sum == b.sum);
                CHECK(a.sumsq == b.sumsq);
            }
        }
    }
}

TEST_CASE("avx2 window moments bit-identical to scalar") {
    const KernelOps* avx2 = avx2_kernels_if_supported();
    if (!avx2) {
        MESSAGE("AVX2 not available on this host; dispatch covers scalar only");
        return;
    }
    Rng rng(11);
    for (std::size_t n : {1u,  2u,  3u,   4u,   5u,    7u,   8u,
                          9u,  63u, 64u,  65u,  1023u, 4096u}) {
        auto c = random_counts(rng, n, 5000);
        auto p = make_prefix(c);
        for (std::size_t k = 1; k <= n; k = k * 3 + 1) {
            std::size_t w = n - k + 1;
            WindowMoments a = scalar_kernels().window_moments(p.data(), w, k);
            WindowMoments b = avx2->window_moments(p.data(), w, k);
            CHECK(a.windows == b.windows);
            CHECK(a.sum == b.sum);
            CHECK(a.sumsq == b.sumsq);
        }
    }
}

TEST_CASE("avx2 variance trace bit-identical to scalar") {
    const KernelOps* avx2 = avx2_kernels_if_supported();
    if (!avx2) return;
    Rng rng(13);
    for (std::size_t n : {5u, 64u, 301u, 2048u}) {
        auto c = random_counts(rng, n, 6);
        // sprinkle all-zero stretches so the empty-window lane is exercised
        for (std::size_t i = 0; i + 8 < n; i += 8) c[i] = c[i + 1] = 0;
        auto p1 = make_prefix(c);
        auto p2 = make_prefix_sq(c);
        for (std::size_t w : {std::size_t(1), std::size_t(2), std::size_t(17)}) {
            if (w > n) continue;
            std::size_t nw = n - w + 1;
            std::vector<double> ms(nw), vs(nw), ma(nw), va(nw);
            scalar_kernels().variance_trace(p1.data(), p2.data(), nw, w, 1.0,
                                            ms.data(), vs.data());
            avx2->variance_trace(p1.data(), p2.data(), nw, w, 1.0, ma.data(),
                                 va.data());
            for (std::size_t i = 0; i < nw; ++i) {
                CHECK(ms[i] == ma[i]); // bitwise: same expression tree
                CHECK(vs[i] == va[i]);
            }
        }
    }
}

TEST_CASE("dispatcher falls back to scalar outside vector bounds") {
    // values large enough that window sums exceed 32 bits: the dispatcher
    // must still return exact 128-bit results via the scalar path
    std::vector<std::uint32_t> c(64, 0xFFFFFFFFu);
    std::vector<std::uint64_t> p(c.size() + 1, 0);
    for (std::size_t i = 0; i < c.size(); ++i) p[i + 1] = p[i] + c[i];
    WindowMoments a = window_moments(p.data(), 33, 32);
    WindowMoments b = scalar_kernels().window_moments(p.data(), 33, 32);
    CHECK(a.sum == b.sum);
    CHECK(a.sumsq == b.sumsq);
    u128 wsum = static_cast<u128>(0xFFFFFFFFu) * 32;
    CHECK(a.sum == wsum * 33);
    CHECK(a.sumsq == wsum * wsum * 33);
}

TEST_CASE("variance trace conventions") {
    std::vector<std::uint32_t> c = {2, 2, 2, 0, 0, 0, 1, 2, 3};
    auto p1 = make_prefix(c);
    auto p2 = make_prefix_sq(c);
    std::size_t w = 3, nw = c.size() - w + 1;
    std::vector<double> mean(nw), v(nw);
    variance_trace(p1.data(), p2.data(), nw, w, 1.0, mean.data(), v.data());
    CHECK(mean[0] == 2.0);
    CHECK(v[0] == 0.0);   // constant window: no dispersion
    CHECK(mean[3] == 0.0);
    CHECK(v[3] == 1.0);   // empty window: reference value by convention
    CHECK(mean[6] == 2.0);
    CHECK(v[6] == doctest::Approx((2.0 / 3.0) / 2.0)); // var 2/3, mean 2
}

TEST_CASE("active kernel name reports a known implementation") {
    std::string name = active_kernel_name();
    CHECK((name == "scalar" || name == "avx2"));
    if (avx2_kernels_available()) CHECK(name == "avx2");
}
