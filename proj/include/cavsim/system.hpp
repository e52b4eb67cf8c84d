#pragma once

#include "cavsim/stats.hpp"

namespace cavsim {

// Rates are angular (rad/s). kappa and gamma are field/amplitude half-widths:
// the photon escape rate is 2*kappa, the free-space population decay is 2*gamma.
struct LambdaSystemParams {
    double g0 = 0.0;      // atom-cavity coupling at an antinode
    double kappa = 0.0;   // cavity field decay
    double gamma = 0.0;   // atomic polarization decay
    double delta_c = 0.0; // cavity detuning; carried for extension, 0 = resonant
    double delta_l = 0.0; // drive laser detuning

    bool strong_coupling() const { return g0 >= kappa && g0 >= gamma; }
    bool resonant() const { return delta_c == 0.0 && delta_l == 0.0; }
    void validate() const;
};

// Quantities derived from the cavity geometry. kappa is angular; fsr/fwhm are
// plain frequencies in Hz.
struct CavityDerived {
    double fsr_hz = 0.0;
    double fwhm_hz = 0.0;
    double kappa = 0.0;
    double finesse = 0.0;
    double eta_out = 0.0;  // useful-mirror outcoupling fraction; 0 if unknown
};

// length is the mirror separation in meters.
CavityDerived derive_cavity_from_finesse(double length_m, double finesse);

// Mirror budget in ppm: transmissions t1 (output side), t2, and scattering /
// absorption loss per mirror. Finesse = 2pi / (t1 + t2 + 2*loss), and the
// outcoupling efficiency is the fraction of the round-trip budget spent on t1.
CavityDerived derive_cavity_from_mirrors(double length_m, double t1_ppm, double t2_ppm,
                                         double loss_per_mirror_ppm);

}  // namespace cavsim
