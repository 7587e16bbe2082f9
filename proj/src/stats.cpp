#include "photostat/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "photostat/kernels.hpp"
#include "photostat/rng.hpp"

namespace photostat {

namespace {

std::vector<std::uint64_t> prefix_counts(const std::vector<std::uint16_t>& c) {
    std::vector<std::uint64_t> p(c.size() + 1, 0);
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        acc += c[i];
        p[i + 1] = acc;
    }
    return p;
}

std::vector<std::uint64_t> prefix_squares(const std::vector<std::uint16_t>& c) {
    std::vector<std::uint64_t> p(c.size() + 1, 0);
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        acc += static_cast<std::uint64_t>(c[i]) * c[i];
        p[i + 1] = acc;
    }
    return p;
}

struct MomentStats {
    double mean = 0, variance = 0, vnorm = 0, q = 0;
    bool no_signal = true;
};

// Single conversion point from exact integer moments to doubles; every Q
// estimate (per-pulse, windowed, bootstrap replicas) goes through here so
// identical moments give bit-identical statistics.
MomentStats moment_stats(std::uint64_t windows, u128 sum, u128 sumsq) {
    MomentStats s;
    if (windows == 0) return s;
    double n = static_cast<double>(windows);
    s.mean = static_cast<double>(sum) / n;
    double ex2 = static_cast<double>(sumsq) / n;
    s.variance = ex2 - s.mean * s.mean;
    if (sum == 0) return s; // mean 0: dispersion undefined, stays flagged
    s.no_signal = false;
    s.vnorm = s.variance / s.mean;
    s.q = s.vnorm - 1.0;
    return s;
}

std::uint64_t bootstrap_seed(std::uint64_t n, std::uint64_t k) {
    std::uint64_t h = 0x9E3779B97F4A7C15ull;
    h ^= n * 0x100000001B3ull;
    h ^= k * 0xC6A4A7935BD1E995ull;
    h ^= h >> 29;
    return h;
}

} // namespace

PulseCountSeries bin_to_pulses(const std::vector<TimetagRecord>& records,
                               std::uint64_t n_pulses,
                               std::int64_t rep_period_ps,
                               std::int64_t reject_cutoff_ps) {
    if (n_pulses == 0)
        throw std::invalid_argument("bin_to_pulses: n_pulses must be >= 1");
    if (rep_period_ps <= 0)
        throw std::invalid_argument("bin_to_pulses: rep_period_ps must be > 0");
    PulseCountSeries out;
    out.rep_period_ps = rep_period_ps;
    out.counts.assign(n_pulses, 0);
    const std::uint64_t rep = static_cast<std::uint64_t>(rep_period_ps);
    for (const TimetagRecord& r : records) {
        std::uint64_t pulse = r.time_ps / rep;
        std::uint64_t delay = r.time_ps - pulse * rep;
        if (pulse >= n_pulses ||
            (reject_cutoff_ps > 0 &&
             delay > static_cast<std::uint64_t>(reject_cutoff_ps))) {
            ++out.rejected;
            continue;
        }
        if (out.counts[pulse] != 0xFFFF) ++out.counts[pulse];
        ++out.accepted;
    }
    return out;
}

PhotocountStats estimate_pn(const PulseCountSeries& series) {
    PhotocountStats st;
    st.n_pulses = series.counts.size();
    if (st.n_pulses == 0) {
        st.no_signal = true;
        return st;
    }
    std::uint64_t tally[3] = {0, 0, 0};
    std::uint64_t more = 0;
    for (std::uint16_t c : series.counts) {
        if (c <= 2)
            ++tally[c];
        else
            ++more;
    }
    double n = static_cast<double>(st.n_pulses);
    st.p0 = static_cast<double>(tally[0]) / n;
    st.p1 = static_cast<double>(tally[1]) / n;
    st.p2 = static_cast<double>(tally[2]) / n;
    st.p_more = static_cast<double>(more) / n;

    auto prefix = prefix_counts(series.counts);
    WindowMoments m = window_moments(prefix.data(), st.n_pulses, 1);
    MomentStats ms = moment_stats(m.windows, m.sum, m.sumsq);
    st.mean = ms.mean;
    st.variance = ms.variance;
    st.no_signal = ms.no_signal;
    if (!ms.no_signal) {
        st.variance_norm = ms.vnorm;
        st.mandel_q = ms.q;
    }
    return st;
}

std::vector<std::uint64_t> default_k_grid(std::uint64_t n_pulses,
                                          std::uint64_t max_k) {
    std::vector<std::uint64_t> ks;
    std::uint64_t cap = std::min<std::uint64_t>(max_k, n_pulses / 10);
    for (std::uint64_t k = 1; k >= 1 && k <= cap; k *= 2) ks.push_back(k);
    if (ks.empty()) ks.push_back(1);
    return ks;
}

QCurve mandel_q_curve(const PulseCountSeries& series,
                      const std::vector<std::uint64_t>& k_grid,
                      unsigned n_boot) {
    const std::uint64_t n = series.counts.size();
    if (n == 0) throw std::invalid_argument("mandel_q_curve: empty series");
    auto prefix = prefix_counts(series.counts);
    QCurve curve;
    curve.reserve(k_grid.size());
    for (std::uint64_t k : k_grid) {
        if (k == 0 || k > n)
            throw std::invalid_argument("mandel_q_curve: k must be in [1, n_pulses]");
        QCurvePoint pt;
        pt.k = k;
        pt.window_s = static_cast<double>(k) *
                      static_cast<double>(series.rep_period_ps) * 1e-12;
        pt.n_windows = n - k + 1;
        WindowMoments m = window_moments(prefix.data(), pt.n_windows, k);
        MomentStats ms = moment_stats(m.windows, m.sum, m.sumsq);
        pt.mandel_q = ms.no_signal ? 0.0 : ms.q;
        pt.no_signal = ms.no_signal;

        // Bootstrap over the floor(n/k) non-overlapping windows. Consecutive
        // windows are grouped into at most 4096 resampling blocks so large
        // series stay cheap and slow correlations are still spanned.
        if (!ms.no_signal && n_boot > 0) {
            std::uint64_t nb = n / k;
            std::uint64_t n_blocks = std::min<std::uint64_t>(nb, 4096);
            std::uint64_t per = nb / n_blocks;
            struct Block {
                std::uint64_t windows;
                std::uint64_t sum;
                u128 sumsq;
            };
            std::vector<Block> blocks(n_blocks);
            for (std::uint64_t b = 0; b < n_blocks; ++b) {
                std::uint64_t w0 = b * per;
                std::uint64_t w1 = (b + 1 == n_blocks) ? nb : w0 + per;
                Block blk{w1 - w0, 0, 0};
                for (std::uint64_t j = w0; j < w1; ++j) {
                    std::uint64_t s = prefix[(j + 1) * k] - prefix[j * k];
                    blk.sum += s;
                    blk.sumsq += static_cast<u128>(s) * s;
                }
                blocks[b] = blk;
            }
            Rng rng(bootstrap_seed(n, k));
            std::vector<double> qs;
            qs.reserve(n_boot);
            for (unsigned rep = 0; rep < n_boot; ++rep) {
                std::uint64_t windows = 0, sum = 0;
                u128 sumsq = 0;
                for (std::uint64_t b = 0; b < n_blocks; ++b) {
                    const Block& blk = blocks[rng.below(n_blocks)];
                    windows += blk.windows;
                    sum += blk.sum;
                    sumsq += blk.sumsq;
                }
                MomentStats rs = moment_stats(windows, sum, sumsq);
                if (!rs.no_signal) qs.push_back(rs.q);
            }
            if (qs.size() >= 2) {
                double mq = 0;
                for (double q : qs) mq += q;
                mq /= static_cast<double>(qs.size());
                double ss = 0;
                for (double q : qs) ss += (q - mq) * (q - mq);
                pt.stderr_q = std::sqrt(ss / static_cast<double>(qs.size() - 1));
            }
        }
        curve.push_back(pt);
    }
    return curve;
}

VarianceTrace sliding_variance(const PulseCountSeries& series,
                               std::uint64_t window) {
    const std::uint64_t n = series.counts.size();
    if (window == 0 || window > n)
        throw std::invalid_argument(
            "sliding_variance: window must be in [1, n_pulses]");
    auto p1 = prefix_counts(series.counts);
    auto p2 = prefix_squares(series.counts);
    VarianceTrace tr;
    tr.window = window;
    std::uint64_t n_windows = n - window + 1;
    tr.mean.resize(n_windows);
    tr.vnorm.resize(n_windows);
    variance_trace(p1.data(), p2.data(), n_windows, window, 1.0,
                   tr.mean.data(), tr.vnorm.data());
    return tr;
}

StartStopHistogram startstop_histogram(const std::vector<TimetagRecord>& records,
                                       std::int64_t bin_width_ps,
                                       std::int64_t span_ps) {
    if (bin_width_ps <= 0)
        throw std::invalid_argument("startstop_histogram: bin_width_ps must be > 0");
    if (span_ps < 0)
        throw std::invalid_argument("startstop_histogram: span_ps must be >= 0");
    std::vector<std::uint64_t> ta, tb;
    for (const TimetagRecord& r : records) {
        (r.channel == 0 ? ta : tb).push_back(r.time_ps);
    }
    const std::int64_t m_max = span_ps / bin_width_ps;
    StartStopHistogram h;
    h.bin_width_ps = bin_width_ps;
    h.first_center_ps = -m_max * bin_width_ps;
    h.counts.assign(static_cast<std::size_t>(2 * m_max + 1), 0);

    auto scan = [&](const std::vector<std::uint64_t>& starts,
                    const std::vector<std::uint64_t>& stops, bool strict,
                    int sign) {
        std::size_t j = 0;
        for (std::uint64_t t : starts) {
            while (j < stops.size() &&
                   (strict ? stops[j] <= t : stops[j] < t))
                ++j;
            if (j == stops.size()) break;
            std::int64_t d = static_cast<std::int64_t>(stops[j] - t);
            std::int64_t m = (d + bin_width_ps / 2) / bin_width_ps;
            if (m > m_max) continue;
            h.counts[static_cast<std::size_t>(m_max + sign * m)] += 1;
            h.total_pairs += 1;
        }
    };
    // A starts / next B stop (ties at zero delay counted here) ...
    scan(ta, tb, false, +1);
    // ... and B starts / next strictly later A stop for the negative side
    scan(tb, ta, true, -1);
    return h;
}

std::uint64_t central_peak_area(const StartStopHistogram& hist,
                                std::int64_t half_window_ps) {
    std::uint64_t area = 0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        std::int64_t c = hist.center_ps(i);
        if (c >= -half_window_ps && c <= half_window_ps) area += hist.counts[i];
    }
    return area;
}

} // namespace photostat
