#pragma once

#include <cstdint>
#include <vector>

#include "photostat/model.hpp"
#include "photostat/timetag.hpp"

namespace photostat {

// Shared detection chain: 50/50 splitter (split_ratio = probability of arm A),
// per-channel non-paralyzable dead time, homogeneous dark counts per channel.
struct DetectionConfig {
    double efficiency = 0.05;      // photon -> click probability (all losses)
    double split_ratio = 0.5;
    std::int64_t dead_time_ps = 250000;
    double dark_rate_cps = 100.0;  // per channel
};

struct RunConfig {
    std::uint64_t n_pulses = 319769;
    std::int64_t rep_period_ps = 500000;
    ExcitationConfig excitation;
    double isc_prob = 2e-4;
    double triplet_lifetime_s = 250e-6;
    double background_mean = 2.2e-3; // Poisson clicks per pulse, before split
    double reject_window_mult = 10.0; // accepted delay window, units of tau_rad
    DetectionConfig detection;
    std::uint64_t seed = 1;

    std::int64_t reject_cutoff_ps() const;
    BlinkingModel blinking() const;
    void validate() const; // throws std::invalid_argument naming the field
};

// Per-pulse emitter record for cross-checking estimators against the
// underlying trajectory. Never mixed into the timetag stream.
struct GroundTruth {
    std::vector<std::uint8_t> on;      // state at pulse arrival
    std::vector<std::uint8_t> emitted; // photons emitted this pulse (0/1)
    std::uint64_t emitted_total = 0;
    std::uint64_t on_pulses = 0;
};

// Pulsed single-emitter run. Per pulse, in fixed RNG order: emitter state
// update (shelving on excitation while emitting, recovery while dark, both
// taking effect next pulse), emission with probability sigma at an
// exponential(tau_rad) delay rounded to whole ps, detection thinning,
// splitter routing, then Poisson background uniform in the accepted delay
// window. Dark counts are appended per channel afterwards. Clicks are sorted
// by (time, channel, order of generation) and dead-time filtered per channel.
TimetagStream simulate_run(const RunConfig& cfg, GroundTruth* truth = nullptr);

// Pulsed attenuated-laser run: Poisson(mean_photons) photons exactly at the
// pulse time (pulse duration << dead time), same detection chain.
struct CoherentRunConfig {
    std::uint64_t n_pulses = 10000000;
    std::int64_t rep_period_ps = 500000;
    double mean_photons = 0.0467;
    DetectionConfig detection;
    std::uint64_t seed = 1;

    void validate() const;
};
TimetagStream simulate_coherent_run(const CoherentRunConfig& cfg);

} // namespace photostat
