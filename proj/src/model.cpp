#include "photostat/model.hpp"

#include <cmath>
#include <stdexcept>

namespace photostat {

double excited_state_population(double pulse_energy_pj, double sat_energy_pj,
                                double pulse_duration_s, double rad_lifetime_s) {
    if (!(sat_energy_pj > 0.0))
        throw std::invalid_argument("excited_state_population: sat_energy_pj must be > 0");
    if (!(pulse_duration_s > 0.0) || !(rad_lifetime_s > 0.0))
        throw std::invalid_argument("excited_state_population: durations must be > 0");
    if (pulse_energy_pj < 0.0)
        throw std::invalid_argument("excited_state_population: pulse_energy_pj must be >= 0");
    double s = pulse_energy_pj / sat_energy_pj;
    double arg = (pulse_duration_s / rad_lifetime_s) * (1.0 + s);
    return (s / (1.0 + s)) * (-std::expm1(-arg));
}

double excited_state_population(const ExcitationConfig& cfg) {
    return excited_state_population(cfg.pulse_energy_pj, cfg.sat_energy_pj,
                                    cfg.pulse_duration_s, cfg.rad_lifetime_s);
}

double saturation_rate(double pulse_energy_pj, double r0_cps,
                       double sat_energy_pj, double pulse_duration_s,
                       double rad_lifetime_s) {
    return r0_cps * excited_state_population(pulse_energy_pj, sat_energy_pj,
                                             pulse_duration_s, rad_lifetime_s);
}

CoherentPulseStats coherent_pulse_stats(double mean_photons) {
    if (mean_photons < 0.0)
        throw std::invalid_argument("coherent_pulse_stats: mean_photons must be >= 0");
    // x = per-arm click probability complement term 1 - e^{-a/2}
    double x = -std::expm1(-0.5 * mean_photons);
    CoherentPulseStats out;
    out.p0 = std::exp(-mean_photons);
    out.p1 = 2.0 * (1.0 - x) * x;
    out.p2 = x * x;
    out.nbar = 2.0 * x;
    out.mandel_q = -x;
    return out;
}

namespace {

// Enumerate source photon (0/1) x truncated Poisson background (0..2) and the
// chance all photons of a pulse land on one arm. Counts clip at one per arm.
// Returns {p1, p2, dp1/deta, dp1/dgamma, dp2/deta, dp2/dgamma}.
struct ForwardEval {
    double p1, p2, d1e, d1g, d2e, d2g;
};

ForwardEval background_forward_eval(double eta, double gamma) {
    double eg = std::exp(-gamma);
    // background weights w_b = e^-g g^b / b!, b <= 2; O(g^3) dropped
    double w0 = eg, w1 = eg * gamma, w2 = eg * gamma * gamma * 0.5;
    double dw0 = -eg, dw1 = eg * (1.0 - gamma), dw2 = eg * gamma * (1.0 - 0.5 * gamma);
    // m photons all on one arm with prob 2*(1/2)^m = (1/2)^{m-1}
    // single-count weight c1(m), double-count weight c2(m) = 1 - c1(m), m >= 1
    const double c1[4] = {0.0, 1.0, 0.5, 0.25};
    const double c2[4] = {0.0, 0.0, 0.5, 0.75};

    ForwardEval f{0, 0, 0, 0, 0, 0};
    const double ws[2] = {1.0 - eta, eta};
    const double dws[2] = {-1.0, 1.0};
    const double wb[3] = {w0, w1, w2};
    const double dwb[3] = {dw0, dw1, dw2};
    for (int s = 0; s <= 1; ++s) {
        for (int b = 0; b <= 2; ++b) {
            int m = s + b;
            if (m < 1 || m > 3) continue;
            double w = ws[s] * wb[b];
            f.p1 += w * c1[m];
            f.p2 += w * c2[m];
            f.d1e += dws[s] * wb[b] * c1[m];
            f.d1g += ws[s] * dwb[b] * c1[m];
            f.d2e += dws[s] * wb[b] * c2[m];
            f.d2g += ws[s] * dwb[b] * c2[m];
        }
    }
    return f;
}

} // namespace

ClickProbabilities background_forward(double eta, double gamma) {
    if (eta < 0.0 || eta > 1.0)
        throw std::invalid_argument("background_forward: eta must be in [0,1]");
    if (gamma < 0.0)
        throw std::invalid_argument("background_forward: gamma must be >= 0");
    ForwardEval f = background_forward_eval(eta, gamma);
    return {f.p1, f.p2};
}

BackgroundDecomposition invert_background(double p1, double p2) {
    if (!(p1 > 0.0) || p1 >= 1.0)
        throw std::invalid_argument("invert_background: p1 must be in (0,1)");
    if (p2 < 0.0 || p2 >= p1)
        throw std::invalid_argument("invert_background: p2 must be in [0,p1)");
    // leading order: p1 ~ eta + gamma, p2 ~ eta*gamma/2
    double eta = p1;
    double gamma = (eta > 0.0) ? 2.0 * p2 / eta : 0.0;
    for (int it = 0; it < 100; ++it) {
        ForwardEval f = background_forward_eval(eta, gamma);
        double r1 = f.p1 - p1;
        double r2 = f.p2 - p2;
        double det = f.d1e * f.d2g - f.d1g * f.d2e;
        if (det == 0.0) break;
        double de = (r1 * f.d2g - r2 * f.d1g) / det;
        double dg = (f.d1e * r2 - f.d2e * r1) / det;
        eta -= de;
        gamma -= dg;
        if (eta < 0.0) eta = 0.0;
        if (eta > 1.0) eta = 1.0;
        if (gamma < 0.0) gamma = 0.0;
        if (std::abs(de) < 1e-15 && std::abs(dg) < 1e-15) break;
    }
    return {eta, gamma};
}

double qs_model(const BlinkingModel& model, std::uint64_t k_periods) {
    if (k_periods == 0)
        throw std::invalid_argument("qs_model: k_periods must be >= 1");
    double beta = model.beta();
    if (!(beta > 0.0) || beta >= 1.0)
        throw std::invalid_argument("qs_model: beta must be in (0,1)");
    if (k_periods == 1) return -1.0; // window of one period: analytic value
    double k = static_cast<double>(k_periods);
    // 1 - (1-beta)^k without loss at small beta or huge k
    double one_minus_pow = -std::expm1(k * std::log1p(-beta));
    double brace = 1.0 - one_minus_pow / (k * beta);
    return (2.0 * model.isc_prob / (beta * beta)) * brace - 1.0;
}

double qs_model_limit(const BlinkingModel& model) {
    double beta = model.beta();
    return 2.0 * model.isc_prob / (beta * beta) - 1.0;
}

} // namespace photostat
