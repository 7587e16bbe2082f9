#include "photostat/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "photostat/report.hpp"
#include "photostat/rng.hpp"

namespace photostat {

namespace {

struct Click {
    std::uint64_t t;
    std::uint8_t ch;
    std::uint32_t seq; // generation order, deterministic tie-break
};

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void validate_detection(const DetectionConfig& d) {
    require(d.efficiency >= 0.0 && d.efficiency <= 1.0,
            "config field efficiency must be in [0,1]");
    require(d.split_ratio >= 0.0 && d.split_ratio <= 1.0,
            "config field split_ratio must be in [0,1]");
    require(d.dead_time_ps >= 0, "config field dead_time_ps must be >= 0");
    require(d.dark_rate_cps >= 0.0, "config field dark_rate_cps must be >= 0");
}

// Dark counts: homogeneous Poisson per channel over the whole run.
void append_dark(std::vector<Click>& clicks, Rng& rng, double rate_cps,
                 std::uint64_t t_end_ps, std::uint8_t ch,
                 std::uint32_t& seq) {
    if (rate_cps <= 0.0) return;
    const double mean_gap_s = 1.0 / rate_cps;
    double t = 0.0;
    for (;;) {
        t += rng.exponential(mean_gap_s) * 1e12;
        if (t >= static_cast<double>(t_end_ps)) break;
        clicks.push_back({static_cast<std::uint64_t>(t), ch, seq++});
    }
}

// Sort by (time, channel, generation order), then per-channel
// non-paralyzable dead time: a click is kept iff at least dead_time has
// passed since the last kept click on the same channel.
std::vector<TimetagRecord> finalize_clicks(std::vector<Click>& clicks,
                                           std::int64_t dead_time_ps) {
    std::sort(clicks.begin(), clicks.end(), [](const Click& a, const Click& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.ch != b.ch) return a.ch < b.ch;
        return a.seq < b.seq;
    });
    std::vector<TimetagRecord> out;
    out.reserve(clicks.size());
    const std::uint64_t dead = static_cast<std::uint64_t>(dead_time_ps);
    bool seen[2] = {false, false};
    std::uint64_t last[2] = {0, 0};
    for (const Click& c : clicks) {
        if (seen[c.ch] && c.t < last[c.ch] + dead) continue;
        seen[c.ch] = true;
        last[c.ch] = c.t;
        out.push_back({c.ch, c.t});
    }
    return out;
}

} // namespace

std::int64_t RunConfig::reject_cutoff_ps() const {
    return std::llround(reject_window_mult * excitation.rad_lifetime_s * 1e12);
}

BlinkingModel RunConfig::blinking() const {
    return {isc_prob, triplet_lifetime_s,
            static_cast<double>(rep_period_ps) * 1e-12};
}

void RunConfig::validate() const {
    require(n_pulses >= 1, "config field n_pulses must be >= 1");
    require(rep_period_ps > 0, "config field rep_period_ps must be > 0");
    require(excitation.sat_energy_pj > 0.0,
            "config field sat_energy_pj must be > 0");
    require(excitation.pulse_energy_pj >= 0.0,
            "config field pulse_energy_pj must be >= 0");
    require(excitation.pulse_duration_s > 0.0,
            "config field pulse_duration_s must be > 0");
    require(excitation.rad_lifetime_s > 0.0,
            "config field rad_lifetime_s must be > 0");
    require(isc_prob >= 0.0 && isc_prob <= 1.0,
            "config field isc_prob must be in [0,1]");
    require(triplet_lifetime_s > 0.0,
            "config field triplet_lifetime_s must be > 0");
    require(background_mean >= 0.0,
            "config field background_mean must be >= 0");
    require(reject_window_mult > 0.0,
            "config field reject_window_mult must be > 0");
    validate_detection(detection);
}

void CoherentRunConfig::validate() const {
    require(n_pulses >= 1, "config field n_pulses must be >= 1");
    require(rep_period_ps > 0, "config field rep_period_ps must be > 0");
    require(mean_photons >= 0.0, "config field coherent_mean must be >= 0");
    validate_detection(detection);
}

TimetagStream simulate_run(const RunConfig& cfg, GroundTruth* truth) {
    cfg.validate();
    Rng rng(cfg.seed);
    const double sigma = excited_state_population(cfg.excitation);
    const double rep_s = static_cast<double>(cfg.rep_period_ps) * 1e-12;
    const double recover_prob = -std::expm1(-rep_s / cfg.triplet_lifetime_s);
    const std::int64_t cutoff = cfg.reject_cutoff_ps();
    const double cutoff_d = static_cast<double>(cutoff);
    const double exp_neg_bg = std::exp(-cfg.background_mean);
    const std::uint64_t rep = static_cast<std::uint64_t>(cfg.rep_period_ps);
    const std::uint64_t t_end = cfg.n_pulses * rep;

    if (truth) {
        truth->on.assign(cfg.n_pulses, 0);
        truth->emitted.assign(cfg.n_pulses, 0);
        truth->emitted_total = 0;
        truth->on_pulses = 0;
    }

    std::vector<Click> clicks;
    clicks.reserve(static_cast<std::size_t>(
        static_cast<double>(cfg.n_pulses) *
            (cfg.detection.efficiency + cfg.background_mean) +
        1024));
    std::uint32_t seq = 0;
    bool on = true;
    // Per-pulse draw order (fixed; determinism per seed depends on it):
    // while emitting: emission, [detection, [delay, routing]], shelving;
    // while dark: recovery. Then background count and per background click
    // delay, routing. State changes take effect at the next pulse.
    for (std::uint64_t i = 0; i < cfg.n_pulses; ++i) {
        const std::uint64_t t0 = i * rep;
        if (truth && on) {
            truth->on[i] = 1;
            ++truth->on_pulses;
        }
        if (on) {
            if (rng.bernoulli(sigma)) {
                if (truth) {
                    truth->emitted[i] = 1;
                    ++truth->emitted_total;
                }
                if (rng.bernoulli(cfg.detection.efficiency)) {
                    double delay_s = rng.exponential(cfg.excitation.rad_lifetime_s);
                    std::uint64_t dps = static_cast<std::uint64_t>(
                        std::llround(delay_s * 1e12));
                    std::uint8_t ch =
                        rng.bernoulli(cfg.detection.split_ratio) ? 0 : 1;
                    clicks.push_back({t0 + dps, ch, seq++});
                }
            }
            if (rng.bernoulli(cfg.isc_prob)) on = false;
        } else {
            if (rng.bernoulli(recover_prob)) on = true;
        }
        std::uint64_t nb = rng.poisson(cfg.background_mean, exp_neg_bg);
        for (std::uint64_t b = 0; b < nb; ++b) {
            std::uint64_t dps =
                static_cast<std::uint64_t>(rng.uniform() * cutoff_d);
            std::uint8_t ch = rng.bernoulli(cfg.detection.split_ratio) ? 0 : 1;
            clicks.push_back({t0 + dps, ch, seq++});
        }
    }
    append_dark(clicks, rng, cfg.detection.dark_rate_cps, t_end, 0, seq);
    append_dark(clicks, rng, cfg.detection.dark_rate_cps, t_end, 1, seq);

    TimetagStream s;
    s.rep_period_ps = cfg.rep_period_ps;
    s.n_pulses = cfg.n_pulses;
    s.seed = cfg.seed;
    s.records = finalize_clicks(clicks, cfg.detection.dead_time_ps);
    s.metadata = render_kv({
        {"source", "sps"},
        {"n_pulses", std::to_string(cfg.n_pulses)},
        {"rep_period_ps", std::to_string(cfg.rep_period_ps)},
        {"pulse_energy_pj", fmt12(cfg.excitation.pulse_energy_pj)},
        {"sat_energy_pj", fmt12(cfg.excitation.sat_energy_pj)},
        {"pulse_duration_s", fmt12(cfg.excitation.pulse_duration_s)},
        {"rad_lifetime_s", fmt12(cfg.excitation.rad_lifetime_s)},
        {"isc_prob", fmt12(cfg.isc_prob)},
        {"triplet_lifetime_s", fmt12(cfg.triplet_lifetime_s)},
        {"background_mean", fmt12(cfg.background_mean)},
        {"reject_window_mult", fmt12(cfg.reject_window_mult)},
        {"efficiency", fmt12(cfg.detection.efficiency)},
        {"split_ratio", fmt12(cfg.detection.split_ratio)},
        {"dead_time_ps", std::to_string(cfg.detection.dead_time_ps)},
        {"dark_rate_cps", fmt12(cfg.detection.dark_rate_cps)},
        {"seed", std::to_string(cfg.seed)},
    });
    return s;
}

TimetagStream simulate_coherent_run(const CoherentRunConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const double exp_neg = std::exp(-cfg.mean_photons);
    const std::uint64_t rep = static_cast<std::uint64_t>(cfg.rep_period_ps);
    const std::uint64_t t_end = cfg.n_pulses * rep;

    std::vector<Click> clicks;
    clicks.reserve(static_cast<std::size_t>(
        static_cast<double>(cfg.n_pulses) * cfg.mean_photons + 1024));
    std::uint32_t seq = 0;
    // Per pulse: photon count, then one routing draw per photon. All photons
    // land exactly at the pulse time (pulse much shorter than the dead time).
    for (std::uint64_t i = 0; i < cfg.n_pulses; ++i) {
        const std::uint64_t t0 = i * rep;
        std::uint64_t np = rng.poisson(cfg.mean_photons, exp_neg);
        for (std::uint64_t p = 0; p < np; ++p) {
            std::uint8_t ch = rng.bernoulli(cfg.detection.split_ratio) ? 0 : 1;
            clicks.push_back({t0, ch, seq++});
        }
    }
    append_dark(clicks, rng, cfg.detection.dark_rate_cps, t_end, 0, seq);
    append_dark(clicks, rng, cfg.detection.dark_rate_cps, t_end, 1, seq);

    TimetagStream s;
    s.rep_period_ps = cfg.rep_period_ps;
    s.n_pulses = cfg.n_pulses;
    s.seed = cfg.seed;
    s.records = finalize_clicks(clicks, cfg.detection.dead_time_ps);
    s.metadata = render_kv({
        {"source", "coherent"},
        {"n_pulses", std::to_string(cfg.n_pulses)},
        {"rep_period_ps", std::to_string(cfg.rep_period_ps)},
        {"coherent_mean", fmt12(cfg.mean_photons)},
        {"split_ratio", fmt12(cfg.detection.split_ratio)},
        {"dead_time_ps", std::to_string(cfg.detection.dead_time_ps)},
        {"dark_rate_cps", fmt12(cfg.detection.dark_rate_cps)},
        {"seed", std::to_string(cfg.seed)},
    });
    return s;
}

} // namespace photostat
