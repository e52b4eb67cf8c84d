#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cavsim {

// All simulator errors derive from this; the CLI maps subtypes to exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct InfeasibleTarget : Error {
    using Error::Error;
};
struct InsufficientStatistics : Error {
    using Error::Error;
};

// SplitMix64; used to derive independent per-stream seeds so that results never
// depend on thread scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ stream));
}

// Regularized incomplete gamma functions P(a,x) and Q(a,x) = 1 - P(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Survival function of the chi-square distribution (upper tail probability).
double chi2_sf(double chi2, double dof);

struct Chi2Result {
    double chi2 = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
    std::size_t bins_used = 0;  // after tail merging
};

// Pearson chi-square GOF of observed counts against expected weights (any
// normalization). Adjacent bins are merged from both tails until every merged
// bin has expected count >= min_expected; dof = bins_used - 1.
Chi2Result chi2_gof(const std::vector<double>& observed,
                    const std::vector<double>& expected_weights,
                    double min_expected = 10.0);

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double intercept_err = 0.0;
    double slope_err = 0.0;
};

// Weighted least squares y = intercept + slope * x, weights = 1/sigma_i^2.
LinearFit fit_linear_weighted(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& weights);

struct GaussianFit {
    double amplitude = 0.0;   // value at x = 0
    double amplitude_err = 0.0;
    double sigma = 0.0;       // Gaussian width; infinite => flat
    bool flat = false;        // data consistent with no decay
};

// Fits y ~= A exp(-x^2 / (2 sigma^2)) by weighted linear regression of ln(y)
// on x^2. y_err are absolute 1-sigma uncertainties of y; non-positive y values
// are skipped. If the fitted decay is non-positive the data is flagged flat and
// A is the weighted mean.
GaussianFit fit_gaussian_peak(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& y_err);

// Golden-section minimizer of a unimodal 1-D function on [lo, hi].
double minimize_golden(double lo, double hi, double tol, const std::function<double(double)>& f);

}  // namespace cavsim
