#include "cavsim/fountain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cavsim/units.hpp"

namespace cavsim {

namespace {

struct Interval {
    double a = 0.0, b = 0.0;
    bool empty() const { return !(b > a); }
};

Interval intersect(const Interval& p, const Interval& q) {
    return {std::max(p.a, q.a), std::min(p.b, q.b)};
}

// ballistic path in the mode frame, launch at t = 0
struct Path {
    double x0, y0, z0, vx, vy, vz, grav;
    double y(double t) const { return y0 + vy * t - 0.5 * grav * t * t; }
    double z(double t) const { return z0 + vz * t; }
    double rho2(double t) const {
        double yy = y(t), zz = z(t);
        return yy * yy + zz * zz;
    }
};

// time intervals with y(t) in [-R, R]; up to two (rise and fall around an
// apex that overshoots the mode)
int y_bands(const Path& p, double R, Interval out[2]) {
    double disc_lo = p.vy * p.vy + 2.0 * p.grav * (p.y0 + R);
    if (disc_lo <= 0.0) return 0;  // apex never reaches -R
    double s = std::sqrt(disc_lo);
    Interval full{(p.vy - s) / p.grav, (p.vy + s) / p.grav};
    full.a = std::max(full.a, 0.0);
    if (full.empty()) return 0;
    double disc_hi = p.vy * p.vy + 2.0 * p.grav * (p.y0 - R);
    if (disc_hi <= 0.0) {
        out[0] = full;
        return 1;
    }
    double sh = std::sqrt(disc_hi);
    Interval cut{(p.vy - sh) / p.grav, (p.vy + sh) / p.grav};
    int n = 0;
    Interval up{full.a, cut.a};
    Interval down{cut.b, full.b};
    if (!up.empty()) out[n++] = up;
    if (!down.empty()) out[n++] = down;
    return n;
}

bool z_band(const Path& p, double R, Interval& out) {
    if (std::fabs(p.vz) < 1e-12) {
        if (std::fabs(p.z0) > R) return false;
        out = {0.0, std::numeric_limits<double>::infinity()};
        return true;
    }
    double ta = (-R - p.z0) / p.vz;
    double tb = (R - p.z0) / p.vz;
    out = {std::min(ta, tb), std::max(ta, tb)};
    out.a = std::max(out.a, 0.0);
    return !out.empty();
}

double bisect_crossing(const Path& p, double R2, double lo, double hi, bool want_inside_at_hi) {
    // f = rho^2 - R^2 changes sign once in [lo, hi]
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        bool inside = p.rho2(mid) < R2;
        if (inside == want_inside_at_hi)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

// appends the [enter, exit] windows where the path is inside the clip radius
void find_crossings(const Path& p, double R, std::vector<Interval>& out) {
    Interval yb[2];
    int ny = y_bands(p, R, yb);
    if (ny == 0) return;
    Interval zb;
    if (!z_band(p, R, zb)) return;
    const double R2 = R * R;
    for (int k = 0; k < ny; ++k) {
        Interval band = intersect(yb[k], zb);
        if (band.empty()) continue;
        const int n_scan = 192;
        double step = (band.b - band.a) / n_scan;
        bool prev_inside = p.rho2(band.a) < R2;
        double t_enter = band.a;  // rho = R exactly at band edges only if z = 0 there
        for (int i = 1; i <= n_scan; ++i) {
            double t = band.a + step * double(i);
            bool inside = p.rho2(t) < R2;
            if (inside != prev_inside) {
                double tc = bisect_crossing(p, R2, t - step, t, inside);
                if (inside)
                    t_enter = tc;
                else
                    out.push_back({t_enter, tc});
                prev_inside = inside;
            }
        }
        if (prev_inside) out.push_back({t_enter, band.b});
    }
}

}  // namespace

void LaunchConfig::validate() const {
    if (!(wavelength_m > 100e-9 && wavelength_m < 10e-6))
        throw ConfigError("launch: wavelength far from the optical scale");
    if (!(launch_height_m > 0.0)) throw ConfigError("launch: height must be positive");
    if (!(gravity > 0.0)) throw ConfigError("launch: gravity must be positive");
    if (delta_f_hz < 0.0 || cloud_sigma_m < 0.0 || temperature_k < 0.0 || atom_flux < 0.0)
        throw ConfigError("launch: negative parameter");
}

void ModeGeometry::validate() const {
    if (!(waist_m > 0.0)) throw ConfigError("mode: waist must be positive");
    if (!(wavelength_m > 0.0)) throw ConfigError("mode: wavelength must be positive");
}

double ModeGeometry::clip_radius() const {
    return waist_m * std::sqrt(std::log(100.0));
}

void AtomTransit::position_at(double t, double gravity, double out[3]) const {
    double u = t - t_ref;
    out[0] = r0[0] + v0[0] * u;
    out[1] = r0[1] + v0[1] * u - 0.5 * gravity * u * u;
    out[2] = r0[2] + v0[2] * u;
}

double AtomTransit::g_fraction(double t, const ModeGeometry& mode, double gravity) const {
    double r[3];
    position_at(t, gravity, r);
    double env = std::exp(-(r[1] * r[1] + r[2] * r[2]) / (mode.waist_m * mode.waist_m));
    if (!mode.standing_wave) return env;
    return env * std::cos(two_pi * r[0] / mode.wavelength_m);
}

double AtomTransit::apex_fraction(const ModeGeometry& mode, double gravity) const {
    // envelope peak along the pass; coarse scan then parabolic refine
    const int n = 96;
    double best = 0.0, t_best = t_enter;
    double dt = (t_exit - t_enter) / n;
    for (int i = 0; i <= n; ++i) {
        double t = t_enter + dt * double(i);
        double r[3];
        position_at(t, gravity, r);
        double env = std::exp(-(r[1] * r[1] + r[2] * r[2]) / (mode.waist_m * mode.waist_m));
        if (env > best) {
            best = env;
            t_best = t;
        }
    }
    for (int it = 0; it < 40; ++it) {
        dt *= 0.5;
        for (double t : {t_best - dt, t_best + dt}) {
            if (t < t_enter || t > t_exit) continue;
            double r[3];
            position_at(t, gravity, r);
            double env = std::exp(-(r[1] * r[1] + r[2] * r[2]) / (mode.waist_m * mode.waist_m));
            if (env > best) {
                best = env;
                t_best = t;
            }
        }
    }
    return best;
}

double launch_velocity(const LaunchConfig& launch) {
    return std::sqrt(2.0) * launch.wavelength_m * launch.delta_f_hz;
}

double detuning_for_apex(double height_m, double wavelength_m, double gravity) {
    if (!(height_m > 0.0) || !(wavelength_m > 0.0) || !(gravity > 0.0))
        throw ConfigError("detuning_for_apex: inputs must be positive");
    double v = std::sqrt(2.0 * gravity * height_m);
    return v / (std::sqrt(2.0) * wavelength_m);
}

double max_interaction_time(double span_m, double gravity) {
    if (span_m < 0.0 || !(gravity > 0.0))
        throw ConfigError("max_interaction_time: bad inputs");
    return 2.0 * std::sqrt(2.0 * span_m / gravity);
}

ShotTransits sample_shot(const LaunchConfig& launch, const ModeGeometry& mode,
                         std::uint32_t shot_index, std::mt19937_64& rng) {
    launch.validate();
    mode.validate();
    ShotTransits shot;
    shot.shot_index = shot_index;

    std::poisson_distribution<int> n_atoms(launch.atom_flux);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sigma_v = std::sqrt(boltzmann_k * launch.temperature_k / rb87_mass);
    const double v_launch = launch_velocity(launch);
    const double R = mode.clip_radius();

    int n = n_atoms(rng);
    for (int a = 0; a < n; ++a) {
        // condition on actually crossing the mode: atom_flux counts the atoms
        // that make it, everything else is rejected
        std::vector<Interval> windows;
        Path p{};
        p.grav = launch.gravity;
        for (int attempt = 0; attempt < 2000000 && windows.empty(); ++attempt) {
            // vertical first: most candidates never even reach the mode plane,
            // so the cheap apex test runs before the remaining draws
            p.y0 = -launch.launch_height_m +
                   (launch.cloud_sigma_m > 0 ? launch.cloud_sigma_m * gauss(rng) : 0.0);
            p.vy = v_launch + (sigma_v > 0 ? sigma_v * gauss(rng) : 0.0);
            if (p.vy * p.vy + 2.0 * p.grav * (p.y0 + R) <= 0.0) continue;
            p.z0 = launch.cloud_sigma_m > 0 ? launch.cloud_sigma_m * gauss(rng) : 0.0;
            p.vz = sigma_v > 0 ? sigma_v * gauss(rng) : 0.0;
            find_crossings(p, R, windows);
            if (windows.empty()) continue;
            p.x0 = launch.cloud_sigma_m > 0 ? launch.cloud_sigma_m * gauss(rng) : 0.0;
            p.vx = sigma_v > 0 ? sigma_v * gauss(rng) : 0.0;
        }
        if (windows.empty())
            throw Error("sample_shot: no mode-crossing trajectory found; check geometry");
        for (const Interval& w : windows) {
            AtomTransit tr;
            tr.t_enter = w.a;
            tr.t_exit = w.b;
            tr.t_ref = 0.0;
            tr.r0[0] = p.x0;
            tr.r0[1] = p.y0;
            tr.r0[2] = p.z0;
            tr.v0[0] = p.vx;
            tr.v0[1] = p.vy;
            tr.v0[2] = p.vz;
            shot.transits.push_back(tr);
        }
    }
    std::sort(shot.transits.begin(), shot.transits.end(),
              [](const AtomTransit& u, const AtomTransit& v) { return u.t_enter < v.t_enter; });
    return shot;
}

std::vector<ShotTransits> sample_transits(const LaunchConfig& launch, const ModeGeometry& mode,
                                          std::size_t n_shots, std::uint64_t seed) {
    std::vector<ShotTransits> shots;
    shots.reserve(n_shots);
    for (std::size_t k = 0; k < n_shots; ++k) {
        auto rng = make_rng(seed, k);
        shots.push_back(sample_shot(launch, mode, std::uint32_t(k), rng));
    }
    return shots;
}

double overlap_fraction(const std::vector<ShotTransits>& shots) {
    std::size_t total = 0, overlapping = 0;
    for (const auto& shot : shots) {
        const auto& ts = shot.transits;
        total += ts.size();
        for (std::size_t i = 0; i < ts.size(); ++i) {
            bool hit = false;
            for (std::size_t j = 0; j < ts.size() && !hit; ++j) {
                if (j == i) continue;
                hit = ts[i].t_enter < ts[j].t_exit && ts[j].t_enter < ts[i].t_exit;
            }
            if (hit) ++overlapping;
        }
    }
    if (total == 0) throw InsufficientStatistics("overlap_fraction: no transits");
    return double(overlapping) / double(total);
}

double calibrate_flux(LaunchConfig launch, const ModeGeometry& mode, double target_fraction,
                      std::size_t n_shots, std::uint64_t seed) {
    if (!(target_fraction > 0.0 && target_fraction < 0.5))
        throw ConfigError("calibrate_flux: target fraction out of range");
    // overlap fraction is nearly linear in flux at these rarities, so a
    // proportional update converges in a couple of passes
    double flux = launch.atom_flux > 0 ? launch.atom_flux : 0.1;
    double measured = 0.0;
    for (int it = 0; it < 6; ++it) {
        launch.atom_flux = flux;
        measured = overlap_fraction(sample_transits(launch, mode, n_shots, seed + it));
        if (std::fabs(measured - target_fraction) < 0.1 * target_fraction) return flux;
        if (measured <= 0.0)
            flux *= 4.0;
        else
            flux *= target_fraction / measured;
        flux = std::clamp(flux, 1e-4, 20.0);
    }
    return flux;
}

}  // namespace cavsim
