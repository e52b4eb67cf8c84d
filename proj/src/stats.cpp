#include "cavsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cavsim {

namespace {

// Lanczos ln-gamma, good to ~1e-14.
double ln_gamma(double x) {
    static const double c[8] = {676.5203681218851,     -1259.1392167224028,
                                771.32342877765313,    -176.61502916214059,
                                12.507343278686905,    -0.13857109526572012,
                                9.9843695780195716e-6, 1.5056327351493116e-7};
    if (x < 0.5) {
        // reflection
        return std::log(M_PI / std::sin(M_PI * x)) - ln_gamma(1.0 - x);
    }
    x -= 1.0;
    double a = 0.99999999999980993;
    double t = x + 7.5;
    for (int i = 0; i < 8; ++i) a += c[i] / (x + i + 1);
    return 0.5 * std::log(2.0 * M_PI) + (x + 0.5) * std::log(t) - t + std::log(a);
}

// series expansion for P(a,x), converges fast for x < a+1
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - ln_gamma(a));
}

// continued fraction (modified Lentz) for Q(a,x), converges fast for x > a+1
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - ln_gamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw Error("gamma_p: domain error");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw Error("gamma_q: domain error");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi2_sf(double chi2, double dof) {
    if (chi2 <= 0.0) return 1.0;
    return gamma_q(0.5 * dof, 0.5 * chi2);
}

Chi2Result chi2_gof(const std::vector<double>& observed,
                    const std::vector<double>& expected_weights, double min_expected) {
    if (observed.size() != expected_weights.size() || observed.empty())
        throw Error("chi2_gof: size mismatch");
    double n_obs = 0.0, w_tot = 0.0;
    for (double o : observed) n_obs += o;
    for (double w : expected_weights) {
        if (w < 0.0) throw Error("chi2_gof: negative expected weight");
        w_tot += w;
    }
    if (n_obs <= 0.0 || w_tot <= 0.0) throw Error("chi2_gof: empty data");

    std::vector<double> exp_counts(expected_weights.size());
    for (std::size_t i = 0; i < exp_counts.size(); ++i)
        exp_counts[i] = expected_weights[i] / w_tot * n_obs;

    // merge from both tails inward until every kept bin satisfies min_expected
    std::vector<double> obs_m, exp_m;
    std::size_t lo = 0, hi = exp_counts.size();
    {
        double o = 0.0, e = 0.0;
        while (lo < hi && e < min_expected) {
            o += observed[lo];
            e += exp_counts[lo];
            ++lo;
        }
        obs_m.push_back(o);
        exp_m.push_back(e);
    }
    double o_tail = 0.0, e_tail = 0.0;
    std::size_t hi0 = hi;
    while (hi > lo && e_tail < min_expected) {
        --hi;
        o_tail += observed[hi];
        e_tail += exp_counts[hi];
    }
    // walk the interior, accumulating until each emitted bin reaches threshold
    double o_acc = 0.0, e_acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        o_acc += observed[i];
        e_acc += exp_counts[i];
        if (e_acc >= min_expected) {
            obs_m.push_back(o_acc);
            exp_m.push_back(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if (e_acc > 0.0) {
        // leftovers join the upper tail
        o_tail += o_acc;
        e_tail += e_acc;
    }
    if (hi0 > 0 && (e_tail > 0.0 || hi < hi0)) {
        obs_m.push_back(o_tail);
        exp_m.push_back(e_tail);
    }

    Chi2Result r;
    r.bins_used = obs_m.size();
    if (r.bins_used < 2) {
        r.dof = 0;
        r.p_value = 1.0;
        return r;
    }
    for (std::size_t i = 0; i < obs_m.size(); ++i) {
        if (exp_m[i] <= 0.0) continue;
        double d = obs_m[i] - exp_m[i];
        r.chi2 += d * d / exp_m[i];
    }
    r.dof = static_cast<double>(r.bins_used - 1);
    r.p_value = chi2_sf(r.chi2, r.dof);
    return r;
}

LinearFit fit_linear_weighted(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& weights) {
    if (x.size() != y.size() || x.size() != weights.size() || x.size() < 2)
        throw Error("fit_linear_weighted: need >= 2 points");
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double w = weights[i];
        if (w < 0.0) throw Error("fit_linear_weighted: negative weight");
        sw += w;
        swx += w * x[i];
        swy += w * y[i];
        swxx += w * x[i] * x[i];
        swxy += w * x[i] * y[i];
    }
    double det = sw * swxx - swx * swx;
    if (det <= 0.0 || sw <= 0.0) throw Error("fit_linear_weighted: singular system");
    LinearFit f;
    f.intercept = (swxx * swy - swx * swxy) / det;
    f.slope = (sw * swxy - swx * swy) / det;
    f.intercept_err = std::sqrt(swxx / det);
    f.slope_err = std::sqrt(sw / det);
    return f;
}

GaussianFit fit_gaussian_peak(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& y_err) {
    if (x.size() != y.size() || x.size() != y_err.size())
        throw Error("fit_gaussian_peak: size mismatch");
    std::vector<double> lx, ly, lw;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(y[i] > 0.0)) continue;
        double sigma_log = (y_err[i] > 0.0) ? y_err[i] / y[i] : 1.0;
        lx.push_back(x[i] * x[i]);
        ly.push_back(std::log(y[i]));
        lw.push_back(1.0 / (sigma_log * sigma_log));
    }
    if (lx.size() < 3) throw InsufficientStatistics("fit_gaussian_peak: too few positive points");
    LinearFit lin = fit_linear_weighted(lx, ly, lw);
    GaussianFit g;
    g.amplitude = std::exp(lin.intercept);
    g.amplitude_err = g.amplitude * lin.intercept_err;
    if (lin.slope >= 0.0) {
        // no decay measurable: flat within errors
        g.flat = true;
        g.sigma = std::numeric_limits<double>::infinity();
        double sw = 0, swy = 0;
        for (std::size_t i = 0; i < ly.size(); ++i) {
            sw += lw[i];
            swy += lw[i] * ly[i];
        }
        g.amplitude = std::exp(swy / sw);
        g.amplitude_err = g.amplitude / std::sqrt(sw);
    } else {
        g.sigma = std::sqrt(-0.5 / lin.slope);
    }
    return g;
}

double minimize_golden(double lo, double hi, double tol, const std::function<double(double)>& f) {
    const double phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace cavsim
