#pragma once

#include <cstddef>
#include <vector>

#include "cavsim/stats.hpp"

namespace cavsim {

enum class PulseKind {
    drive,             // Rabi frequency Omega(t), rad/s
    photon_amplitude,  // target photon amplitude psi(t), units 1/sqrt(s)
};

// Uniformly sampled real envelope. Values outside [t0, t0 + duration] are zero;
// value_at interpolates linearly between samples.
struct PulseEnvelope {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> samples;
    PulseKind kind = PulseKind::drive;

    std::size_t size() const { return samples.size(); }
    double duration() const { return samples.empty() ? 0.0 : dt * double(samples.size() - 1); }
    double t_end() const { return t0 + duration(); }
    double value_at(double t) const;
    double max_abs() const;
    // trapezoidal integral of samples^2 over the support
    double integral_sq() const;
    void validate() const;
};

}  // namespace cavsim
