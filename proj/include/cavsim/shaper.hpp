#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cavsim/pulse.hpp"
#include "cavsim/system.hpp"

namespace cavsim {

// sin^2 photon amplitude on [0, duration] with emission probability p_target:
// psi(t) = sqrt(8 p / (3 T)) * sin^2(pi t / T)
PulseEnvelope sin2_photon_target(double p_target, double duration_s, std::size_t n_samples);

// Arbitrary silhouette loaded from a text file (one sample per line, '#'
// comments allowed), resampled onto n_samples over [0, duration] and scaled
// so the integrated intensity equals p_target. Samples must be non-negative
// and the shape must start and end at zero (the emitter starts and ends dark).
PulseEnvelope photon_target_from_file(const std::string& path, double p_target,
                                      double duration_s, std::size_t n_samples);

struct InversionResult {
    PulseEnvelope omega;    // control Rabi frequency, rad/s, non-negative
    PulseEnvelope target;   // the photon amplitude the drive reproduces
    std::vector<double> ce2;  // population left in the initial state
    std::vector<double> bx;   // excited-state quadrature amplitude
    std::vector<double> cg;   // cavity field amplitude (gauge: real, <= 0)
    double feasibility_margin = 0.0;  // min ce2 over the pulse
};

// Analytic drive construction: given the target photon amplitude, solve the
// three-level amplitude equations backwards for the Rabi envelope that makes
// the cavity emit exactly that wave packet at constant coupling g0.
// Throws InfeasibleTarget when the initial-state population would need to go
// below min_ce2 anywhere (the target asks for more photon than the
// cooperativity allows, or asks for it too fast).
InversionResult invert_target(const LambdaSystemParams& p, const PulseEnvelope& target,
                              double min_ce2 = 1e-6);

// Zero-phase Gaussian low-pass with -3 dB point at f_cutoff_hz, unit DC gain.
// The grid grows by the kernel half-width on each side; drive envelopes are
// clamped at zero afterwards since Rabi frequencies cannot be negative.
PulseEnvelope band_limit(const PulseEnvelope& x, double f_cutoff_hz);

}  // namespace cavsim
