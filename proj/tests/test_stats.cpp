#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "photostat/rng.hpp"
#include "photostat/stats.hpp"

using namespace photostat;

namespace {

PulseCountSeries series_from(std::vector<std::uint16_t> counts,
                             std::int64_t rep = 500000) {
    PulseCountSeries s;
    s.rep_period_ps = rep;
    s.counts = std::move(counts);
    return s;
}

// windowed Mandel Q by direct double loops
double brute_q(const std::vector<std::uint16_t>& c, std::uint64_t k) {
    double s = 0, s2 = 0;
    std::uint64_t nw = c.size() - k + 1;
    for (std::uint64_t i = 0; i < nw; ++i) {
        double w = 0;
        for (std::uint64_t j = i; j < i + k; ++j) w += c[j];
        s += w;
        s2 += w * w;
    }
    double mean = s / static_cast<double>(nw);
    double ex2 = s2 / static_cast<double>(nw);
    return (ex2 - mean * mean) / mean - 1.0;
}

} // namespace

TEST_CASE("binning into pulse periods") {
    std::vector<TimetagRecord> recs = {
        {0, 100},      // pulse 0, delay 100
        {1, 27999},    // pulse 0, delay at the cutoff boundary
        {0, 28001},    // pulse 0, past cutoff -> rejected
        {1, 500000},   // pulse 1, delay 0
        {0, 999999},   // pulse 1, delay 499999 -> rejected
        {1, 1500000},  // pulse 3
        {0, 2500000},  // pulse 5 >= n_pulses -> rejected
    };
    PulseCountSeries s = bin_to_pulses(recs, 5, 500000, 28000);
    CHECK(s.counts.size() == 5);
    CHECK(s.counts[0] == 2);
    CHECK(s.counts[1] == 1);
    CHECK(s.counts[2] == 0);
    CHECK(s.counts[3] == 1);
    CHECK(s.counts[4] == 0);
    CHECK(s.rejected == 3);
    CHECK(s.accepted == 4);
    CHECK(s.accepted + s.rejected == recs.size());

    // cutoff <= 0 keeps any in-period delay
    PulseCountSeries all = bin_to_pulses(recs, 5, 500000, 0);
    CHECK(all.rejected == 1); // only the tag past the last period
    CHECK_THROWS_AS(bin_to_pulses(recs, 0, 500000, 0), std::invalid_argument);
    CHECK_THROWS_AS(bin_to_pulses(recs, 5, 0, 0), std::invalid_argument);
}

TEST_CASE("per-pulse distribution estimate") {
    PulseCountSeries s = series_from({0, 1, 2, 0, 3});
    PhotocountStats st = estimate_pn(s);
    CHECK(st.n_pulses == 5);
    CHECK(st.p0 == doctest::Approx(0.4));
    CHECK(st.p1 == doctest::Approx(0.2));
    CHECK(st.p2 == doctest::Approx(0.2));
    CHECK(st.p_more == doctest::Approx(0.2));
    CHECK(st.p0 + st.p1 + st.p2 + st.p_more == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(st.mean == doctest::Approx(1.2));
    CHECK(st.variance == doctest::Approx(1.36));
    CHECK(st.variance_norm == doctest::Approx(1.36 / 1.2));
    CHECK(st.mandel_q == doctest::Approx(1.36 / 1.2 - 1.0));
    CHECK_FALSE(st.no_signal);

    // clipped streams: p0+p1+p2 = 1 and mean = p1 + 2 p2 exactly
    PulseCountSeries clipped = series_from({0, 1, 2, 1, 0, 0, 2, 1});
    PhotocountStats cs = estimate_pn(clipped);
    CHECK(cs.p_more == 0.0);
    CHECK(cs.p0 + cs.p1 + cs.p2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cs.mean == doctest::Approx(cs.p1 + 2 * cs.p2).epsilon(1e-12));

    PhotocountStats dead = estimate_pn(series_from({0, 0, 0, 0}));
    CHECK(dead.no_signal);
    CHECK(dead.mean == 0.0);
}

TEST_CASE("windowed Mandel Q matches direct evaluation") {
    Rng rng(99);
    std::vector<std::uint16_t> c(317);
    for (auto& v : c) v = static_cast<std::uint16_t>(rng.below(4));
    PulseCountSeries s = series_from(c);
    std::vector<std::uint64_t> ks = {1, 2, 3, 7, 50, 317};
    QCurve curve = mandel_q_curve(s, ks, 0);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        CHECK(curve[i].k == ks[i]);
        CHECK(curve[i].n_windows == c.size() - ks[i] + 1);
        CHECK(curve[i].mandel_q ==
              doctest::Approx(brute_q(c, ks[i])).epsilon(1e-12));
        CHECK(curve[i].mandel_q >= -1.0);
        CHECK(curve[i].window_s ==
              doctest::Approx(static_cast<double>(ks[i]) * 0.5e-6));
    }
    CHECK_THROWS_AS(mandel_q_curve(s, {0}, 0), std::invalid_argument);
    CHECK_THROWS_AS(mandel_q_curve(s, {1000}, 0), std::invalid_argument);
}

TEST_CASE("one-period point equals the per-pulse estimate exactly") {
    Rng rng(5);
    std::vector<std::uint16_t> c(4096);
    for (auto& v : c) v = static_cast<std::uint16_t>(rng.poisson(0.3));
    PulseCountSeries s = series_from(c);
    PhotocountStats st = estimate_pn(s);
    QCurve curve = mandel_q_curve(s, {1}, 50);
    CHECK(curve[0].mandel_q == st.mandel_q); // bitwise: same accumulation
}

TEST_CASE("one-photon-per-pulse stream pins Q at -1 with zero spread") {
    PulseCountSeries s = series_from(std::vector<std::uint16_t>(2000, 1));
    QCurve curve = mandel_q_curve(s, {1, 4, 32}, 100);
    for (const QCurvePoint& pt : curve) {
        CHECK(pt.mandel_q == -1.0);
        CHECK(pt.stderr_q == 0.0);
    }
}

TEST_CASE("independent Poisson stream: Q flat at zero across window sizes") {
    Rng rng(4242);
    std::vector<std::uint16_t> c(200000);
    for (auto& v : c) v = static_cast<std::uint16_t>(rng.poisson(0.05));
    PulseCountSeries s = series_from(c);
    QCurve curve = mandel_q_curve(s, default_k_grid(c.size(), 1024), 200);
    for (const QCurvePoint& pt : curve) {
        CHECK(std::abs(pt.mandel_q) < 3.0 * pt.stderr_q);
    }
}

TEST_CASE("bootstrap spread is reproducible") {
    Rng rng(77);
    std::vector<std::uint16_t> c(5000);
    for (auto& v : c) v = static_cast<std::uint16_t>(rng.poisson(0.3));
    PulseCountSeries s = series_from(c);
    QCurve a = mandel_q_curve(s, {1, 8, 64}, 200);
    QCurve b = mandel_q_curve(s, {1, 8, 64}, 200);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].mandel_q == b[i].mandel_q);
        CHECK(a[i].stderr_q == b[i].stderr_q);
        CHECK(a[i].stderr_q > 0.0);
    }
}

TEST_CASE("sliding normalized variance trace") {
    PulseCountSeries s = series_from({1, 1, 1, 1, 0, 0, 0, 2, 2, 4});
    VarianceTrace tr = sliding_variance(s, 4);
    CHECK(tr.mean.size() == 7);
    // constant nonzero window
    CHECK(tr.mean[0] == 1.0);
    CHECK(tr.vnorm[0] == 0.0);
    // all-zero window reports the Poisson reference value 1
    VarianceTrace z = sliding_variance(series_from({0, 0, 0, 0, 0}), 3);
    for (double v : z.vnorm) CHECK(v == 1.0);
    // spot value: window {0,2,2,4}: mean 2, var 2, V = 1
    CHECK(tr.mean[6] == 2.0);
    CHECK(tr.vnorm[6] == doctest::Approx(1.0));
    CHECK_THROWS_AS(sliding_variance(s, 0), std::invalid_argument);
    CHECK_THROWS_AS(sliding_variance(s, 11), std::invalid_argument);
}

TEST_CASE("start-stop histogram: pairing, signs, conservation") {
    std::vector<TimetagRecord> recs = {
        {0, 100},     {1, 100},     // zero-delay pair (counted once)
        {0, 1000},    {1, 1600},    // +600 -> bin center +1000
        {0, 2300},                  // stop for the 1600 start: -700
        {1, 9000000},               // beyond span from 2300: dropped
    };
    StartStopHistogram h = startstop_histogram(recs, 1000, 5000);
    CHECK(h.counts.size() == 11);
    CHECK(h.first_center_ps == -5000);
    CHECK(h.center_ps(5) == 0);
    std::uint64_t sum = 0;
    for (auto v : h.counts) sum += v;
    CHECK(sum == h.total_pairs);
    CHECK(h.total_pairs == 4);
    CHECK(h.counts[5] == 1);                       // the zero-delay pair
    CHECK(h.counts[6] == 1);                       // +1000 center (delay 600)
    CHECK(h.counts[4] == 2);                       // -1000 center: 100->1000 is -900
    CHECK(central_peak_area(h, 500) == 1);
    CHECK(central_peak_area(h, 1000) == 4);
    CHECK_THROWS_AS(startstop_histogram(recs, 0, 5000), std::invalid_argument);
}

TEST_CASE("ideal single photon stream has an empty central peak") {
    // one click per pulse, alternating arms: stops only come from other pulses
    std::vector<TimetagRecord> recs;
    for (std::uint64_t i = 0; i < 4000; ++i)
        recs.push_back({static_cast<std::uint8_t>(i & 1), i * 500000});
    StartStopHistogram h = startstop_histogram(recs, 1000, 5 * 500000);
    CHECK(central_peak_area(h, 250000) == 0);
    CHECK(h.total_pairs > 0);
}

TEST_CASE("default window grid is log spaced and bounded") {
    auto ks = default_k_grid(319769);
    CHECK(ks.front() == 1);
    for (std::size_t i = 1; i < ks.size(); ++i) CHECK(ks[i] == 2 * ks[i - 1]);
    CHECK(ks.back() <= 31976);
    auto big = default_k_grid(10000000);
    CHECK(big.back() <= 100000);
    CHECK(big.back() > 50000);
    auto tiny = default_k_grid(5);
    CHECK(tiny.size() == 1);
}
