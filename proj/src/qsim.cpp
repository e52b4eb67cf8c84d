#include "cavsim/qsim.hpp"

#include <algorithm>
#include <cmath>

#include "cavsim/units.hpp"

namespace cavsim {

namespace {

// amplitudes unpacked to plain doubles; this loop dominates the simulator
struct Raw {
    double cer, cei, cxr, cxi, cgr, cgi, em, sp;
};

struct SysRates {
    double kappa, gamma, dx, dg;
};

inline Raw deriv(const Raw& s, double O, double g, const SysRates& r) {
    const double ho = 0.5 * O;
    Raw d;
    d.cer = ho * s.cxi;
    d.cei = -ho * s.cxr;
    d.cxr = ho * s.cei + g * s.cgi - r.gamma * s.cxr + r.dx * s.cxi;
    d.cxi = -ho * s.cer - g * s.cgr - r.gamma * s.cxi - r.dx * s.cxr;
    d.cgr = g * s.cxi - r.kappa * s.cgr + r.dg * s.cgi;
    d.cgi = -g * s.cxr - r.kappa * s.cgi - r.dg * s.cgr;
    d.em = 2.0 * r.kappa * (s.cgr * s.cgr + s.cgi * s.cgi);
    d.sp = 2.0 * r.gamma * (s.cxr * s.cxr + s.cxi * s.cxi);
    return d;
}

inline Raw axpy(const Raw& s, double a, const Raw& k) {
    return {s.cer + a * k.cer, s.cei + a * k.cei, s.cxr + a * k.cxr, s.cxi + a * k.cxi,
            s.cgr + a * k.cgr, s.cgi + a * k.cgi, s.em + a * k.em,   s.sp + a * k.sp};
}

inline void rk4_step(Raw& s, double h, double O0, double Om, double O1, double gA, double gm,
                     double gB, const SysRates& r) {
    Raw k1 = deriv(s, O0, gA, r);
    Raw k2 = deriv(axpy(s, 0.5 * h, k1), Om, gm, r);
    Raw k3 = deriv(axpy(s, 0.5 * h, k2), Om, gm, r);
    Raw k4 = deriv(axpy(s, h, k3), O1, gB, r);
    const double w = h / 6.0;
    s.cer += w * (k1.cer + 2 * k2.cer + 2 * k3.cer + k4.cer);
    s.cei += w * (k1.cei + 2 * k2.cei + 2 * k3.cei + k4.cei);
    s.cxr += w * (k1.cxr + 2 * k2.cxr + 2 * k3.cxr + k4.cxr);
    s.cxi += w * (k1.cxi + 2 * k2.cxi + 2 * k3.cxi + k4.cxi);
    s.cgr += w * (k1.cgr + 2 * k2.cgr + 2 * k3.cgr + k4.cgr);
    s.cgi += w * (k1.cgi + 2 * k2.cgi + 2 * k3.cgi + k4.cgi);
    s.em += w * (k1.em + 2 * k2.em + 2 * k3.em + k4.em);
    s.sp += w * (k1.sp + 2 * k2.sp + 2 * k3.sp + k4.sp);
}

// advances one envelope sample interval (m RK4 substeps, linear interpolation
// of drive and coupling across the interval)
inline void advance_interval(Raw& s, double dt, int m, double O0, double O1, double g0, double g1,
                             const SysRates& r) {
    const double h = dt / m;
    for (int sub = 0; sub < m; ++sub) {
        const double f0 = double(sub) / m;
        const double fm = (double(sub) + 0.5) / m;
        const double f1 = double(sub + 1) / m;
        rk4_step(s, h, O0 + (O1 - O0) * f0, O0 + (O1 - O0) * fm, O0 + (O1 - O0) * f1,
                 g0 + (g1 - g0) * f0, g0 + (g1 - g0) * fm, g0 + (g1 - g0) * f1, r);
    }
}

// Runs the no-jump evolution over the drive window plus free-decay tail.
// on_sample(i, t, state) is called for every recorded sample (i = 0 first);
// returning false stops the integration early.
template <typename OnSample>
void integrate_core(const LambdaSystemParams& p, const PulseEnvelope& drive,
                    const std::vector<double>* g_series, double g_const,
                    const IntegrateOptions& opt, OnSample&& on_sample) {
    p.validate();
    drive.validate();
    if (drive.kind != PulseKind::drive)
        throw ConfigError("evolve: envelope kind must be a drive");
    if (g_series && g_series->size() != drive.size())
        throw ConfigError("evolve: coupling series length must match the drive grid");

    int m = opt.substeps;
    if (m <= 0) {
        double rec = recommended_dt(p, drive.max_abs());
        m = std::max(1, int(std::ceil(drive.dt / rec - 1e-12)));
    }

    const SysRates r{p.kappa, p.gamma, -p.delta_l, p.delta_c - p.delta_l};
    auto g_at = [&](std::size_t i) { return g_series ? (*g_series)[i] : g_const; };

    Raw s{1, 0, 0, 0, 0, 0, 0, 0};
    if (!on_sample(std::size_t{0}, drive.t0, s)) return;

    const std::size_t n = drive.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        advance_interval(s, drive.dt, m, drive.samples[i], drive.samples[i + 1], g_at(i),
                         g_at(i + 1), r);
        double total = s.cer * s.cer + s.cei * s.cei + s.cxr * s.cxr + s.cxi * s.cxi +
                       s.cgr * s.cgr + s.cgi * s.cgi + s.em + s.sp;
        if (std::fabs(total - 1.0) > opt.norm_tol)
            throw Error("evolve: norm conservation violated (|1-norm| = " +
                        std::to_string(std::fabs(total - 1.0)) + "); reduce the step");
        if (!on_sample(i + 1, drive.t0 + drive.dt * double(i + 1), s)) return;
    }

    if (!opt.tail) return;
    const double g_last = g_at(n - 1);
    const double tail_max =
        opt.tail_max_s > 0.0
            ? opt.tail_max_s
            : 30.0 / p.kappa + (p.gamma > 0.0 ? 10.0 / p.gamma : 0.0);
    const std::size_t max_tail_samples = std::size_t(std::ceil(tail_max / drive.dt));
    for (std::size_t j = 0; j < max_tail_samples; ++j) {
        double drained = s.cxr * s.cxr + s.cxi * s.cxi + s.cgr * s.cgr + s.cgi * s.cgi;
        if (drained < 1e-14) break;
        advance_interval(s, drive.dt, m, 0.0, 0.0, g_last, g_last, r);
        if (!on_sample(n + j, drive.t_end() + drive.dt * double(j + 1), s)) return;
    }
}

struct JumpSampler {
    // shared between draw_outcome and run_trajectory so both consume the rng
    // identically and agree bit for bit
    double u;
    double prev_N = 1.0, prev_cg2 = 0.0, prev_cx2 = 0.0, prev_t = 0.0;
    bool armed = false;

    // returns true when the jump happened inside (prev_t, t]
    bool check(double t, double N, double cg2, double cx2, const LambdaSystemParams& p,
               std::mt19937_64& rng, EmissionOutcome& out) {
        if (armed && N <= u) {
            double f = 1.0;
            if (prev_N > N && prev_N > u)
                f = std::log(prev_N / u) / std::log(prev_N / N);
            f = std::clamp(f, 0.0, 1.0);
            double tj = prev_t + (t - prev_t) * f;
            double wc = 2.0 * p.kappa * (prev_cg2 + (cg2 - prev_cg2) * f);
            double ws = 2.0 * p.gamma * (prev_cx2 + (cx2 - prev_cx2) * f);
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            bool cavity = uni(rng) * (wc + ws) < wc;
            out.kind = cavity ? OutcomeKind::cavity_photon : OutcomeKind::spontaneous_loss;
            out.t_emit = tj;
            return true;
        }
        armed = true;
        prev_N = N;
        prev_cg2 = cg2;
        prev_cx2 = cx2;
        prev_t = t;
        return false;
    }
};

}  // namespace

double recommended_dt(const LambdaSystemParams& p, double omega_max) {
    double w = std::max({p.g0, p.kappa, std::fabs(omega_max)});
    if (!(w > 0.0)) throw ConfigError("recommended_dt: no rate scale");
    return two_pi / (200.0 * w);
}

std::vector<double> StateHistory::photon_intensity() const {
    std::vector<double> out(cg.size());
    for (std::size_t i = 0; i < cg.size(); ++i) out[i] = 2.0 * kappa * std::norm(cg[i]);
    return out;
}

std::vector<std::complex<double>> StateHistory::photon_amplitude() const {
    std::vector<std::complex<double>> out(cg.size());
    const double s = std::sqrt(2.0 * kappa);
    for (std::size_t i = 0; i < cg.size(); ++i) out[i] = s * cg[i];
    return out;
}

StateHistory evolve_amplitudes(const LambdaSystemParams& p, const PulseEnvelope& drive,
                               const std::vector<double>& g_of_t,
                               const IntegrateOptions& options) {
    StateHistory h;
    h.t0 = drive.t0;
    h.dt = drive.dt;
    h.n_drive = drive.size();
    h.kappa = p.kappa;
    h.ce.reserve(drive.size() + 64);
    h.cx.reserve(drive.size() + 64);
    h.cg.reserve(drive.size() + 64);
    h.emitted.reserve(drive.size() + 64);
    h.spont.reserve(drive.size() + 64);
    integrate_core(p, drive, &g_of_t, 0.0, options,
                   [&](std::size_t, double, const Raw& s) {
                       h.ce.emplace_back(s.cer, s.cei);
                       h.cx.emplace_back(s.cxr, s.cxi);
                       h.cg.emplace_back(s.cgr, s.cgi);
                       h.emitted.push_back(s.em);
                       h.spont.push_back(s.sp);
                       return true;
                   });
    return h;
}

StateHistory evolve_amplitudes(const LambdaSystemParams& p, const PulseEnvelope& drive,
                               double g_const, const IntegrateOptions& options) {
    std::vector<double> g(drive.size(), g_const);
    return evolve_amplitudes(p, drive, g, options);
}

EmissionOutcome draw_outcome(const StateHistory& h, const LambdaSystemParams& p,
                             std::mt19937_64& rng) {
    if (h.size() == 0) throw Error("draw_outcome: empty history");
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    JumpSampler js{uni(rng)};
    EmissionOutcome out;
    for (std::size_t i = 0; i < h.size(); ++i) {
        double cg2 = h.cg[i].real() * h.cg[i].real() + h.cg[i].imag() * h.cg[i].imag();
        double cx2 = h.cx[i].real() * h.cx[i].real() + h.cx[i].imag() * h.cx[i].imag();
        double ce2 = h.ce[i].real() * h.ce[i].real() + h.ce[i].imag() * h.ce[i].imag();
        if (js.check(h.t_at(i), ce2 + cx2 + cg2, cg2, cx2, p, rng, out)) return out;
    }
    return out;
}

EmissionOutcome run_trajectory(const LambdaSystemParams& p, const PulseEnvelope& drive,
                               const std::vector<double>& g_of_t, std::mt19937_64& rng,
                               const IntegrateOptions& options) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    JumpSampler js{uni(rng)};
    EmissionOutcome out;
    integrate_core(p, drive, &g_of_t, 0.0, options,
                   [&](std::size_t, double t, const Raw& s) {
                       double cg2 = s.cgr * s.cgr + s.cgi * s.cgi;
                       double cx2 = s.cxr * s.cxr + s.cxi * s.cxi;
                       double ce2 = s.cer * s.cer + s.cei * s.cei;
                       return !js.check(t, ce2 + cx2 + cg2, cg2, cx2, p, rng, out);
                   });
    return out;
}

EmissionOutcome run_trajectory(const LambdaSystemParams& p, const PulseEnvelope& drive,
                               double g_const, std::mt19937_64& rng,
                               const IntegrateOptions& options) {
    std::vector<double> g(drive.size(), g_const);
    return run_trajectory(p, drive, g, rng, options);
}

}  // namespace cavsim
