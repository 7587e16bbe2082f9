#pragma once

#include <cstdint>

namespace photostat {

// Pulsed excitation of a single emitter.
struct ExcitationConfig {
    double pulse_energy_pj = 5.6;
    double sat_energy_pj = 5.6e-5;
    double pulse_duration_s = 1e-13;
    double rad_lifetime_s = 2.8e-9;
};

// Probability that one excitation pulse leaves the emitter excited
// (emission probability per pulse): sigma = s/(1+s) * (1 - exp(-(tau_p/tau_rad)(1+s))),
// s = E_p/E_sat. Requires sat_energy > 0, durations > 0.
double excited_state_population(double pulse_energy_pj, double sat_energy_pj,
                                double pulse_duration_s, double rad_lifetime_s);
double excited_state_population(const ExcitationConfig& cfg);

// Detected rate on the saturation curve: R = r0 * sigma(E_p).
double saturation_rate(double pulse_energy_pj, double r0_cps,
                       double sat_energy_pj, double pulse_duration_s,
                       double rad_lifetime_s);

// Per-pulse photocount statistics of an attenuated pulsed coherent source
// seen by a two-detector 50/50 splitter whose detectors are dead for the
// rest of the pulse after one click (counts clipped to one per arm):
//   p0 = e^-a, p1 = 2 e^-a/2 (1 - e^-a/2), p2 = (1 - e^-a/2)^2,
//   nbar = 2 (1 - e^-a/2), mandel_q = -(1 - e^-a/2) = -nbar/2.
struct CoherentPulseStats {
    double p0 = 0, p1 = 0, p2 = 0;
    double nbar = 0;
    double mandel_q = 0;
};
CoherentPulseStats coherent_pulse_stats(double mean_photons);

// Decomposition of measured per-pulse click probabilities (p1, p2) into an
// attenuated one-photon-per-pulse source (efficiency eta) plus Poisson
// background (mean gamma per pulse). Two photons in the same pulse register
// as two counts only when they land on distinct arms (probability 1/2).
// Background terms of order gamma^2 are kept, gamma^3 dropped.
struct BackgroundDecomposition {
    double eta = 0;
    double gamma = 0;
};
struct ClickProbabilities {
    double p1 = 0;
    double p2 = 0;
};
ClickProbabilities background_forward(double eta, double gamma);
// Newton inversion of background_forward. Requires 0 < p1 < 1, 0 <= p2 < p1.
BackgroundDecomposition invert_background(double p1, double p2);

// Two-state (emitting/dark) interruption model of the emitter.
// isc_prob is the shelving probability per excitation while emitting;
// triplet_lifetime_s the mean dark-state dwell time.
struct BlinkingModel {
    double isc_prob = 2e-4;
    double triplet_lifetime_s = 250e-6;
    double rep_period_s = 0.5e-6;

    double beta() const { return isc_prob + rep_period_s / triplet_lifetime_s; }
    // validity of the closed form below (small per-pulse rates)
    bool limiting_regime() const {
        return isc_prob < 1e-2 && rep_period_s / triplet_lifetime_s < 1e-2;
    }
};

// Source Mandel Q over a window of k pulse periods, closed form in the
// small per-pulse-rate limit:
//   Q_s(k) = (2 isc/beta^2) * {1 - (1/(k beta)) [1 - (1-beta)^k]} - 1.
// k = 1 returns exactly -1 (the analytic value; avoids cancellation noise).
// (1-beta)^k is evaluated via expm1/log1p so large k stays accurate.
double qs_model(const BlinkingModel& model, std::uint64_t k_periods);

// k -> infinity limit of qs_model: 2 isc/beta^2 - 1.
double qs_model_limit(const BlinkingModel& model);

} // namespace photostat
