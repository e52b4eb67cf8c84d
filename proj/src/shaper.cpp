#include "cavsim/shaper.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cavsim/stats.hpp"
#include "cavsim/units.hpp"

namespace cavsim {

namespace {

// numpy-style gradient: centered interior, one-sided ends
std::vector<double> grad(const std::vector<double>& y, double dt) {
    std::size_t n = y.size();
    std::vector<double> d(n);
    if (n < 2) {
        if (n == 1) d[0] = 0.0;
        return d;
    }
    d[0] = (y[1] - y[0]) / dt;
    d[n - 1] = (y[n - 1] - y[n - 2]) / dt;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i - 1]) / (2.0 * dt);
    return d;
}

void scale_to_power(PulseEnvelope& env, double p_target) {
    double p0 = env.integral_sq();
    if (!(p0 > 0.0)) throw ConfigError("photon target: silhouette has no power");
    double s = std::sqrt(p_target / p0);
    for (double& v : env.samples) v *= s;
}

}  // namespace

PulseEnvelope sin2_photon_target(double p_target, double duration_s, std::size_t n_samples) {
    if (!(p_target > 0.0) || p_target > 1.0)
        throw ConfigError("photon target: emission probability must be in (0, 1]");
    if (!(duration_s > 0.0) || n_samples < 16)
        throw ConfigError("photon target: bad duration or grid");
    PulseEnvelope env;
    env.kind = PulseKind::photon_amplitude;
    env.t0 = 0.0;
    env.dt = duration_s / double(n_samples - 1);
    env.samples.resize(n_samples);
    const double amp = std::sqrt(8.0 * p_target / (3.0 * duration_s));
    for (std::size_t i = 0; i < n_samples; ++i) {
        double s = std::sin(pi * double(i) / double(n_samples - 1));
        env.samples[i] = amp * s * s;
    }
    // discrete grid integrates slightly under the continuum value; rescale
    scale_to_power(env, p_target);
    return env;
}

PulseEnvelope photon_target_from_file(const std::string& path, double p_target,
                                      double duration_s, std::size_t n_samples) {
    if (!(p_target > 0.0) || p_target > 1.0)
        throw ConfigError("photon target: emission probability must be in (0, 1]");
    if (!(duration_s > 0.0) || n_samples < 16)
        throw ConfigError("photon target: bad duration or grid");
    std::ifstream in(path);
    if (!in) throw ConfigError("photon target: cannot open " + path);
    std::vector<double> raw;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double v;
        if (ls >> v) raw.push_back(v);
    }
    if (raw.size() < 8) throw ConfigError("photon target: " + path + " holds too few samples");
    for (double v : raw)
        if (v < 0.0) throw ConfigError("photon target: amplitude samples must be non-negative");
    if (raw.front() != 0.0 || raw.back() != 0.0)
        throw ConfigError("photon target: shape must start and end at zero");

    PulseEnvelope env;
    env.kind = PulseKind::photon_amplitude;
    env.t0 = 0.0;
    env.dt = duration_s / double(n_samples - 1);
    env.samples.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        double x = double(i) / double(n_samples - 1) * double(raw.size() - 1);
        std::size_t j = std::min(std::size_t(x), raw.size() - 2);
        double f = x - double(j);
        env.samples[i] = raw[j] + (raw[j + 1] - raw[j]) * f;
    }
    scale_to_power(env, p_target);
    return env;
}

InversionResult invert_target(const LambdaSystemParams& p, const PulseEnvelope& target,
                              double min_ce2) {
    p.validate();
    target.validate();
    if (target.kind != PulseKind::photon_amplitude)
        throw ConfigError("invert_target: envelope kind must be a photon amplitude");
    if (!p.resonant())
        throw ConfigError("invert_target: drive construction assumes resonance");
    for (double v : target.samples)
        if (v < 0.0) throw ConfigError("invert_target: photon amplitude must be non-negative");
    const std::size_t n = target.size();
    if (n < 16) throw ConfigError("invert_target: grid too coarse");

    InversionResult r;
    r.target = target;
    r.cg.resize(n);
    const double root2k = std::sqrt(2.0 * p.kappa);
    for (std::size_t i = 0; i < n; ++i) r.cg[i] = -target.samples[i] / root2k;

    std::vector<double> cgdot = grad(r.cg, target.dt);
    r.bx.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.bx[i] = (cgdot[i] + p.kappa * r.cg[i]) / p.g0;

    // initial-state population: unit norm minus the tracked amplitudes minus
    // everything already lost to the two decay channels
    r.ce2.resize(n);
    double lost = 0.0;
    double prev_rate = 2.0 * p.gamma * r.bx[0] * r.bx[0] + 2.0 * p.kappa * r.cg[0] * r.cg[0];
    r.ce2[0] = 1.0 - r.bx[0] * r.bx[0] - r.cg[0] * r.cg[0];
    for (std::size_t i = 1; i < n; ++i) {
        double rate = 2.0 * p.gamma * r.bx[i] * r.bx[i] + 2.0 * p.kappa * r.cg[i] * r.cg[i];
        lost += 0.5 * (prev_rate + rate) * target.dt;
        prev_rate = rate;
        r.ce2[i] = 1.0 - r.bx[i] * r.bx[i] - r.cg[i] * r.cg[i] - lost;
    }

    double worst = r.ce2[0];
    for (double v : r.ce2) worst = std::min(worst, v);
    r.feasibility_margin = worst;
    if (worst < min_ce2)
        throw InfeasibleTarget(
            "target photon shape drains the initial state (min population " +
            std::to_string(worst) + "); lower the emission probability or slow the pulse");

    std::vector<double> bxdot = grad(r.bx, target.dt);
    r.omega.kind = PulseKind::drive;
    r.omega.t0 = target.t0;
    r.omega.dt = target.dt;
    r.omega.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double ce = std::sqrt(r.ce2[i]);
        double w = -2.0 * (bxdot[i] + p.gamma * r.bx[i] + p.g0 * r.cg[i]) / ce;
        r.omega.samples[i] = std::max(0.0, w);  // gauge keeps it non-negative; kill edge noise
    }
    return r;
}

PulseEnvelope band_limit(const PulseEnvelope& x, double f_cutoff_hz) {
    x.validate();
    if (!(f_cutoff_hz > 0.0)) throw ConfigError("band_limit: cutoff must be positive");
    const double sigma_t = std::sqrt(std::log(2.0)) / (two_pi * f_cutoff_hz);
    const long k = std::lround(std::ceil(4.0 * sigma_t / x.dt));
    std::vector<double> w(2 * k + 1);
    double wsum = 0.0;
    for (long j = -k; j <= k; ++j) {
        double t = double(j) * x.dt;
        w[std::size_t(j + k)] = std::exp(-t * t / (2.0 * sigma_t * sigma_t));
        wsum += w[std::size_t(j + k)];
    }
    for (double& v : w) v /= wsum;

    PulseEnvelope out;
    out.kind = x.kind;
    out.dt = x.dt;
    out.t0 = x.t0 - double(k) * x.dt;
    const long n = long(x.size());
    out.samples.assign(std::size_t(n + 2 * k), 0.0);
    for (long i = 0; i < n + 2 * k; ++i) {
        double acc = 0.0;
        for (long j = -k; j <= k; ++j) {
            long src = i - k + j;  // index into x, zero outside
            if (src >= 0 && src < n) acc += w[std::size_t(j + k)] * x.samples[std::size_t(src)];
        }
        out.samples[std::size_t(i)] = acc;
    }
    if (out.kind == PulseKind::drive)
        for (double& v : out.samples) v = std::max(0.0, v);
    return out;
}

}  // namespace cavsim
