#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "photostat/stats.hpp"

namespace photostat {

// Damped (Levenberg) weighted least squares with forward-difference Jacobian.
// Converges when the relative parameter change drops below xtol or after
// max_iter iterations. Parameter errors are sqrt of the diagonal of
// (J^T W J)^-1 at the solution.
struct LeastSquaresOptions {
    int max_iter = 200;
    double xtol = 1e-9;
};
struct LeastSquaresResult {
    bool converged = false;
    int iterations = 0;
    double chi2 = 0;
    std::size_t n_points = 0;
    std::vector<double> params;
    std::vector<double> param_errors;
};
using ModelFn = std::function<double(double x, const std::vector<double>& p)>;
LeastSquaresResult least_squares(const ModelFn& model,
                                 const std::vector<double>& x,
                                 const std::vector<double>& y,
                                 const std::vector<double>& weights,
                                 std::vector<double> p0,
                                 const LeastSquaresOptions& opts = {});

// One point of a measured saturation curve.
struct SaturationPoint {
    double energy_pj = 0;
    double rate_cps = 0;
    double int_time_s = 1.0; // integration time behind the rate estimate
};

// Two-step fit of R(E) = r0 * sigma(E; e_sat, tau_p, tau_rad): first fit all
// points, then drop points lying below the fit by more than
// max(2*shot_sigma, 5% of the model) -- dark-interval excursions depress the
// measured rate, never raise it -- and refit. Fitted in log-parameter space
// (r0, e_sat positive). Initial guess: r0 = max rate, e_sat = energy nearest
// half max.
struct SaturationFit {
    bool converged = false;
    int iterations = 0;
    double chi2 = 0;
    double r0_cps = 0, r0_err = 0;
    double sat_energy_pj = 0, sat_energy_err = 0;
    std::vector<std::size_t> excluded; // indices dropped by the second pass
};
SaturationFit fit_saturation(const std::vector<SaturationPoint>& points,
                             double pulse_duration_s, double rad_lifetime_s,
                             const LeastSquaresOptions& opts = {});

// Weighted fit of measured Q(k*T) to efficiency times the two-state-chain
// Mandel Q, efficiency held fixed. The model keeps the O(isc/beta) terms
// that qs_model truncates away: they shift the small-k points, where the
// error bars are tightest, by enough to bias the recovered isc_prob.
// Parameters (isc_prob, triplet_lifetime_s) in log space, initialized at
// the literature scale (1e-4 per pulse, 2.5e-3 recovery per period).
// Weights 1/stderr^2; points with no_signal or stderr <= 0 are skipped.
// regime_flag marks fits outside qs_model's small-rate validity region
// (per-pulse rates not << 1), where quoting the truncated form's
// parameters alongside these would be inconsistent.
struct QCurveFit {
    bool converged = false;
    int iterations = 0;
    double chi2 = 0;
    std::size_t n_points = 0;
    double isc_prob = 0, isc_prob_err = 0;
    double triplet_lifetime_s = 0, triplet_lifetime_err = 0;
    bool regime_flag = false;
};
QCurveFit fit_qcurve(const QCurve& curve, double efficiency,
                     double rep_period_s, const LeastSquaresOptions& opts = {});

} // namespace photostat
