#include "photostat/fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "photostat/model.hpp"

namespace photostat {

namespace {

// Gaussian elimination with partial pivoting; A is n*n row-major, b length n.
// Returns false on a (near-)singular system. n <= 3 here.
bool solve_linear(std::vector<double> A, std::vector<double> b,
                  std::vector<double>& x) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A[r * n + col]) > std::abs(A[piv * n + col])) piv = r;
        if (std::abs(A[piv * n + col]) < 1e-300) return false;
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c)
                std::swap(A[piv * n + c], A[col * n + c]);
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = A[r * n + col] / A[col * n + col];
            for (std::size_t c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t ri = n; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) s -= A[ri * n + c] * x[c];
        x[ri] = s / A[ri * n + ri];
    }
    return true;
}

void normal_equations(const ModelFn& model, const std::vector<double>& x,
                      const std::vector<double>& y,
                      const std::vector<double>& w,
                      const std::vector<double>& p, std::vector<double>& A,
                      std::vector<double>& g) {
    const std::size_t n = x.size(), np = p.size();
    std::vector<double> f0(n);
    for (std::size_t i = 0; i < n; ++i) f0[i] = model(x[i], p);
    std::vector<double> J(n * np);
    for (std::size_t j = 0; j < np; ++j) {
        double h = std::max(1e-8, 1e-7 * std::abs(p[j]));
        std::vector<double> ph = p;
        ph[j] += h;
        for (std::size_t i = 0; i < n; ++i)
            J[i * np + j] = (model(x[i], ph) - f0[i]) / h;
    }
    A.assign(np * np, 0.0);
    g.assign(np, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - f0[i];
        for (std::size_t j = 0; j < np; ++j) {
            g[j] += w[i] * J[i * np + j] * r;
            for (std::size_t l = 0; l <= j; ++l)
                A[j * np + l] += w[i] * J[i * np + j] * J[i * np + l];
        }
    }
    for (std::size_t j = 0; j < np; ++j)
        for (std::size_t l = j + 1; l < np; ++l) A[j * np + l] = A[l * np + j];
}

} // namespace

LeastSquaresResult least_squares(const ModelFn& model,
                                 const std::vector<double>& x,
                                 const std::vector<double>& y,
                                 const std::vector<double>& weights,
                                 std::vector<double> p0,
                                 const LeastSquaresOptions& opts) {
    const std::size_t n = x.size(), np = p0.size();
    if (y.size() != n || weights.size() != n)
        throw std::invalid_argument("least_squares: size mismatch");
    if (np == 0 || n < np)
        throw std::invalid_argument("least_squares: fewer points than parameters");

    auto chi2_of = [&](const std::vector<double>& p) {
        double c = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = y[i] - model(x[i], p);
            c += weights[i] * r * r;
        }
        return c;
    };

    LeastSquaresResult res;
    res.n_points = n;
    std::vector<double> p = std::move(p0);
    double chi2 = chi2_of(p);
    double lambda = 1e-3;
    std::vector<double> A, g, Ad, dp;

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        res.iterations = iter;
        normal_equations(model, x, y, weights, p, A, g);
        bool accepted = false, solved_any = false;
        double step_rel = 0;
        while (lambda < 1e14) {
            Ad = A;
            for (std::size_t j = 0; j < np; ++j) {
                double d = A[j * np + j];
                Ad[j * np + j] += lambda * (d != 0.0 ? d : 1.0);
            }
            if (solve_linear(Ad, g, dp)) {
                solved_any = true;
                std::vector<double> pn(np);
                for (std::size_t j = 0; j < np; ++j) pn[j] = p[j] + dp[j];
                double c2 = chi2_of(pn);
                if (c2 <= chi2 * (1.0 + 1e-14) + 1e-300) {
                    double nd = 0, npm = 0;
                    for (std::size_t j = 0; j < np; ++j) {
                        nd += dp[j] * dp[j];
                        npm += p[j] * p[j];
                    }
                    step_rel = std::sqrt(nd) / (std::sqrt(npm) + 1e-30);
                    p = std::move(pn);
                    chi2 = c2;
                    lambda = std::max(lambda * 0.3, 1e-12);
                    accepted = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // no damping level improves chi2: a minimum at working precision
            // (unless the normal matrix was singular throughout)
            res.converged = solved_any;
            break;
        }
        if (step_rel < opts.xtol) {
            res.converged = true;
            break;
        }
    }

    res.params = p;
    res.chi2 = chi2;
    res.param_errors.assign(np, 0.0);
    normal_equations(model, x, y, weights, p, A, g);
    // covariance = inverse of the (undamped) normal matrix
    for (std::size_t j = 0; j < np; ++j) {
        std::vector<double> e(np, 0.0), col;
        e[j] = 1.0;
        if (solve_linear(A, e, col) && col[j] > 0.0)
            res.param_errors[j] = std::sqrt(col[j]);
    }
    return res;
}

SaturationFit fit_saturation(const std::vector<SaturationPoint>& points,
                             double pulse_duration_s, double rad_lifetime_s,
                             const LeastSquaresOptions& opts) {
    if (points.size() < 3)
        throw std::invalid_argument("fit_saturation: need at least 3 points");
    for (const SaturationPoint& pt : points) {
        if (pt.energy_pj < 0 || pt.rate_cps < 0 || pt.int_time_s <= 0)
            throw std::invalid_argument(
                "fit_saturation: points need energy_pj >= 0, rate_cps >= 0, int_time_s > 0");
    }

    // log-space parameters keep r0 and e_sat positive; the clamp keeps
    // exploratory steps from underflowing exp() to an unphysical zero
    ModelFn model = [&](double e_pj, const std::vector<double>& p) {
        double r0 = std::exp(std::clamp(p[0], -690.0, 690.0));
        double esat = std::exp(std::clamp(p[1], -690.0, 690.0));
        return r0 * excited_state_population(e_pj, esat, pulse_duration_s,
                                             rad_lifetime_s);
    };

    auto shot_sigma = [](const SaturationPoint& pt) {
        // rate from counting over int_time; floor of one count keeps
        // zero-rate points from acquiring infinite weight
        double r = std::max(pt.rate_cps, 1.0 / pt.int_time_s);
        return std::sqrt(r / pt.int_time_s);
    };

    auto run = [&](const std::vector<std::size_t>& idx,
                   std::vector<double> p0) {
        std::vector<double> x, y, w;
        for (std::size_t i : idx) {
            x.push_back(points[i].energy_pj);
            y.push_back(points[i].rate_cps);
            double s = shot_sigma(points[i]);
            w.push_back(1.0 / (s * s));
        }
        return least_squares(model, x, y, w, std::move(p0), opts);
    };

    // init: r0 = max rate, e_sat = energy of the point nearest half max
    double rmax = 0;
    for (const SaturationPoint& pt : points) rmax = std::max(rmax, pt.rate_cps);
    if (rmax <= 0)
        throw std::invalid_argument("fit_saturation: all rates are zero");
    double esat0 = points.front().energy_pj;
    double best = 1e300;
    for (const SaturationPoint& pt : points) {
        double d = std::abs(pt.rate_cps - 0.5 * rmax);
        if (d < best && pt.energy_pj > 0) {
            best = d;
            esat0 = pt.energy_pj;
        }
    }
    if (esat0 <= 0) esat0 = 1e-6;
    std::vector<double> p0 = {std::log(rmax), std::log(esat0)};

    std::vector<std::size_t> all(points.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    LeastSquaresResult first = run(all, p0);

    // Dark-interval excursions only ever depress the measured rate: drop
    // points far below the first fit and refit on the rest.
    std::vector<std::size_t> keep, excluded;
    for (std::size_t i = 0; i < points.size(); ++i) {
        double m = model(points[i].energy_pj, first.params);
        double margin = std::max(2.0 * shot_sigma(points[i]), 0.05 * m);
        if (points[i].rate_cps < m - margin)
            excluded.push_back(i);
        else
            keep.push_back(i);
    }

    LeastSquaresResult final_fit = first;
    if (!excluded.empty() && keep.size() >= 3) {
        final_fit = run(keep, first.params);
    } else {
        excluded.clear();
    }

    SaturationFit out;
    out.converged = final_fit.converged;
    out.iterations = final_fit.iterations;
    out.chi2 = final_fit.chi2;
    out.r0_cps = std::exp(final_fit.params[0]);
    out.sat_energy_pj = std::exp(final_fit.params[1]);
    out.r0_err = out.r0_cps * final_fit.param_errors[0];
    out.sat_energy_err = out.sat_energy_pj * final_fit.param_errors[1];
    out.excluded = std::move(excluded);
    return out;
}

namespace {

// Mandel Q of the stationary emitting/dark two-state chain over k periods,
// complete expression (no small-rate truncation):
//   Q(k) = -1 + isc/beta + (2 isc (1-beta)/beta^2) g_k,
//   g_k  = 1 - (1 - (1-beta)^k)/(k beta),   beta = isc + recover.
// The truncated closed form drops the O(isc/beta) terms; fitting it to
// measured curves biases the recovered shelving rate upward, so the fit
// uses the full form. Binomial thinning scales Q by the efficiency exactly.
double qs_chain(double isc, double recover, std::uint64_t k) {
    const double beta = isc + recover;
    const double kd = static_cast<double>(k);
    const double pow_k = std::exp(kd * std::log1p(-beta)); // (1-beta)^k
    const double g = 1.0 - (1.0 - pow_k) / (kd * beta);
    return -1.0 + isc / beta + (2.0 * isc * (1.0 - beta) / (beta * beta)) * g;
}

} // namespace

QCurveFit fit_qcurve(const QCurve& curve, double efficiency,
                     double rep_period_s, const LeastSquaresOptions& opts) {
    if (!(efficiency > 0.0) || efficiency > 1.0)
        throw std::invalid_argument("fit_qcurve: efficiency must be in (0,1]");
    if (!(rep_period_s > 0.0))
        throw std::invalid_argument("fit_qcurve: rep_period_s must be > 0");
    std::vector<double> x, y, w;
    for (const QCurvePoint& pt : curve) {
        if (pt.no_signal || !(pt.stderr_q > 0.0)) continue;
        x.push_back(static_cast<double>(pt.k));
        y.push_back(pt.mandel_q);
        w.push_back(1.0 / (pt.stderr_q * pt.stderr_q));
    }
    if (x.size() < 3)
        throw std::invalid_argument(
            "fit_qcurve: need at least 3 usable points (finite stderr)");

    // parameters: log shelving probability per pulse, log recovery
    // probability per period; both clamped inside the model so exploratory
    // steps cannot push beta past 1
    ModelFn model = [&](double kd, const std::vector<double>& p) {
        double isc = std::min(std::exp(std::clamp(p[0], -690.0, 690.0)), 0.45);
        double recover =
            std::min(std::exp(std::clamp(p[1], -690.0, 690.0)), 0.45);
        return efficiency *
               qs_chain(isc, recover,
                        static_cast<std::uint64_t>(std::llround(kd)));
    };

    std::vector<double> p0 = {std::log(1e-4), std::log(2.5e-3)};
    LeastSquaresResult res = least_squares(model, x, y, w, p0, opts);

    QCurveFit out;
    out.converged = res.converged;
    out.iterations = res.iterations;
    out.chi2 = res.chi2;
    out.n_points = x.size();
    out.isc_prob = std::exp(res.params[0]);
    double recover = std::exp(res.params[1]);
    out.triplet_lifetime_s = rep_period_s / recover;
    out.isc_prob_err = out.isc_prob * res.param_errors[0];
    out.triplet_lifetime_err = out.triplet_lifetime_s * res.param_errors[1];
    out.regime_flag =
        !BlinkingModel{out.isc_prob, out.triplet_lifetime_s, rep_period_s}
             .limiting_regime();
    return out;
}

} // namespace photostat
