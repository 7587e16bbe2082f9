#pragma once

#include <cstdint>
#include <vector>

#include "photostat/timetag.hpp"

namespace photostat {

// Counts per excitation period, both arms summed. rejected counts tags whose
// delay from the owning pulse exceeded the accepted window (late tags,
// attributed to dark counts / long-lived states, dropped before binning).
struct PulseCountSeries {
    std::int64_t rep_period_ps = 500000;
    std::vector<std::uint16_t> counts;
    std::uint64_t rejected = 0;
    std::uint64_t accepted = 0;
};

// Bin clicks into pulse periods (pulse i owns [i*T, (i+1)*T)). A tag is kept
// when its delay within the period is <= reject_cutoff_ps; cutoff <= 0 keeps
// everything. Tags past n_pulses periods are rejected.
PulseCountSeries bin_to_pulses(const std::vector<TimetagRecord>& records,
                               std::uint64_t n_pulses,
                               std::int64_t rep_period_ps,
                               std::int64_t reject_cutoff_ps);

// Per-pulse photocount distribution and dispersion. Population (biased)
// variance throughout. no_signal marks an all-zero series; variance_norm and
// mandel_q are then meaningless (set to 0) and must not be consumed.
struct PhotocountStats {
    std::uint64_t n_pulses = 0;
    double p0 = 0, p1 = 0, p2 = 0;
    double p_more = 0; // counts > 2 (only possible without dead-time clipping)
    double mean = 0;
    double variance = 0;
    double variance_norm = 0; // V = variance/mean
    double mandel_q = 0;      // Q = V - 1
    bool no_signal = false;
};
PhotocountStats estimate_pn(const PulseCountSeries& series);

// Mandel Q over sliding windows of k periods (windows advance one period).
// stderr by bootstrap over the floor(n/k) non-overlapping window sums,
// resampled n_boot times with a seed derived from (n, k) so results are
// reproducible. At k = 1 the estimate equals estimate_pn's mandel_q exactly
// (same accumulation path).
struct QCurvePoint {
    std::uint64_t k = 1;
    double window_s = 0;
    double mandel_q = 0;
    double stderr_q = 0;
    std::uint64_t n_windows = 0;
    bool no_signal = false;
};
using QCurve = std::vector<QCurvePoint>;
QCurve mandel_q_curve(const PulseCountSeries& series,
                      const std::vector<std::uint64_t>& k_grid,
                      unsigned n_boot = 200);

// Log-spaced default grid {1,2,4,...} capped at max_k and at n/10 so every
// point keeps at least 10 non-overlapping windows.
std::vector<std::uint64_t> default_k_grid(std::uint64_t n_pulses,
                                          std::uint64_t max_k = 100000);

// Normalized variance over every window of w consecutive periods (start
// index advances one period). All-zero windows report vnorm = 1 (the
// Poisson-reference convention used for displaying traces).
struct VarianceTrace {
    std::uint64_t window = 0;
    std::vector<double> mean;
    std::vector<double> vnorm;
};
VarianceTrace sliding_variance(const PulseCountSeries& series,
                               std::uint64_t window);

// Start-stop delay histogram: for every channel-A click, the delay to the
// next channel-B click at t_B >= t_A; negative side symmetrically from each
// B click to the next A click at t_A > t_B (strict, so simultaneous pairs
// are counted once, in bin 0). Only delays within +-span enter. Bin b covers
// [center - bin/2, center + bin/2) with center = b_index * bin_width.
struct StartStopHistogram {
    std::int64_t bin_width_ps = 1000;
    std::int64_t first_center_ps = 0; // center of bin 0
    std::vector<std::uint64_t> counts;
    std::uint64_t total_pairs = 0; // == sum(counts)
    std::int64_t center_ps(std::size_t i) const {
        return first_center_ps + static_cast<std::int64_t>(i) * bin_width_ps;
    }
};
StartStopHistogram startstop_histogram(const std::vector<TimetagRecord>& records,
                                       std::int64_t bin_width_ps,
                                       std::int64_t span_ps);

// Total counts in bins whose centers lie within +-half_window of zero delay.
std::uint64_t central_peak_area(const StartStopHistogram& hist,
                                std::int64_t half_window_ps);

} // namespace photostat
