#include "cavsim/system.hpp"

#include <cmath>

#include "cavsim/units.hpp"

namespace cavsim {

void LambdaSystemParams::validate() const {
    if (!(g0 > 0.0)) throw ConfigError("system: g0 must be > 0");
    if (!(kappa > 0.0)) throw ConfigError("system: kappa must be > 0");
    if (gamma < 0.0) throw ConfigError("system: gamma must be >= 0");
    if (!std::isfinite(delta_c) || !std::isfinite(delta_l))
        throw ConfigError("system: detunings must be finite");
}

CavityDerived derive_cavity_from_finesse(double length_m, double finesse) {
    if (!(length_m > 0.0)) throw ConfigError("cavity: length must be > 0");
    if (!(finesse > 1.0)) throw ConfigError("cavity: finesse must be > 1");
    CavityDerived d;
    d.finesse = finesse;
    d.fsr_hz = speed_of_light / (2.0 * length_m);
    d.fwhm_hz = d.fsr_hz / finesse;
    d.kappa = M_PI * d.fwhm_hz;  // field half-width, angular
    return d;
}

CavityDerived derive_cavity_from_mirrors(double length_m, double t1_ppm, double t2_ppm,
                                         double loss_per_mirror_ppm) {
    if (!(t1_ppm > 0.0) || t2_ppm < 0.0 || loss_per_mirror_ppm < 0.0)
        throw ConfigError("cavity: mirror budget entries must be positive");
    if (!(t2_ppm < t1_ppm))
        throw ConfigError("cavity: t2 must be below the output coupler t1");
    double budget = (t1_ppm + t2_ppm + 2.0 * loss_per_mirror_ppm) * 1e-6;
    CavityDerived d = derive_cavity_from_finesse(length_m, two_pi / budget);
    d.eta_out = t1_ppm * 1e-6 / budget;
    return d;
}

}  // namespace cavsim
