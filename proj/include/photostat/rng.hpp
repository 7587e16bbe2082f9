#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace photostat {

// Deterministic random stream. mt19937_64 has a standard-pinned sequence;
// the distribution transforms below are hand-rolled because std::*_distribution
// sequences are implementation-defined and outputs must reproduce across
// platforms, not just across runs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    // uniform in [0,1) with 53-bit resolution
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n) without modulo bias (Lemire reduction)
    std::uint64_t below(std::uint64_t n) {
        unsigned __int128 m = static_cast<unsigned __int128>(eng_()) * n;
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // mean must be > 0; 1 - uniform() keeps the argument of log nonzero
    double exponential(double mean) {
        return -mean * std::log1p(-uniform());
    }

    // inversion by sequential search; fine for the per-pulse means used here
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        return poisson(mean, std::exp(-mean));
    }

    // hot-loop variant with exp(-mean) precomputed by the caller
    std::uint64_t poisson(double mean, double exp_neg_mean) {
        if (mean <= 0.0) return 0;
        double p = exp_neg_mean;
        double cdf = p;
        double u = uniform();
        std::uint64_t n = 0;
        while (u > cdf && n < 4096) {
            ++n;
            p *= mean / static_cast<double>(n);
            cdf += p;
        }
        return n;
    }

private:
    std::mt19937_64 eng_;
};

} // namespace photostat
