#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "cavsim/pulse.hpp"
#include "cavsim/system.hpp"

namespace cavsim {

// Single-excitation amplitudes over {|e,0>, |x,0>, |g,1>} plus the two loss
// reservoirs. norm_total() == 1 is the bookkeeping invariant.
struct QuantumState {
    std::complex<double> ce{1.0, 0.0};
    std::complex<double> cx{0.0, 0.0};
    std::complex<double> cg{0.0, 0.0};
    double emitted = 0.0;  // cumulative cavity emission probability
    double spont = 0.0;    // cumulative free-space loss probability

    double excited_norm() const { return std::norm(ce) + std::norm(cx) + std::norm(cg); }
    double norm_total() const { return excited_norm() + emitted + spont; }
};

struct IntegrateOptions {
    int substeps = 0;        // RK4 substeps per envelope sample; 0 = auto from the dt rule
    double norm_tol = 1e-6;  // allowed |norm_total - 1| anywhere in the pulse
    bool tail = true;        // keep evolving with Omega = 0 until the excitation drains
    double tail_max_s = 0.0; // 0 = auto
};

// Sampled no-jump evolution. Indices [0, n_drive) cover the drive window at the
// drive's sample spacing; later entries are the free-decay tail.
struct StateHistory {
    double t0 = 0.0;
    double dt = 0.0;
    std::size_t n_drive = 0;
    double kappa = 0.0;
    std::vector<std::complex<double>> ce, cx, cg;
    std::vector<double> emitted, spont;  // cumulative

    std::size_t size() const { return ce.size(); }
    double t_at(std::size_t i) const { return t0 + dt * double(i); }
    double emitted_total() const { return emitted.empty() ? 0.0 : emitted.back(); }
    double spont_total() const { return spont.empty() ? 0.0 : spont.back(); }
    // survival (no-jump) probability at sample i
    double survival(std::size_t i) const { return 1.0 - emitted[i] - spont[i]; }
    // cavity output intensity |phi(t)|^2 = 2 kappa |c_g|^2 per sample
    std::vector<double> photon_intensity() const;
    // cavity output amplitude phi(t) = sqrt(2 kappa) c_g(t)
    std::vector<std::complex<double>> photon_amplitude() const;
};

// Default integrator step for given rates and drive amplitude (rad/s all).
double recommended_dt(const LambdaSystemParams& p, double omega_max);

// Integrates the amplitude equations
//   ce' = -i (O/2) cx
//   cx' = -i (O/2) ce - i g cg - (gamma + i dx) cx
//   cg' = -i g cx - (kappa + i dg) cg
// with dx = -delta_l, dg = delta_c - delta_l (zero on resonance), RK4 with the
// drive and coupling linearly interpolated between samples. g_of_t must match
// the drive sample count; the constant-g overload covers the common case.
// Throws on norm-conservation violation beyond options.norm_tol.
StateHistory evolve_amplitudes(const LambdaSystemParams& p, const PulseEnvelope& drive,
                               const std::vector<double>& g_of_t,
                               const IntegrateOptions& options = {});
StateHistory evolve_amplitudes(const LambdaSystemParams& p, const PulseEnvelope& drive,
                               double g_const, const IntegrateOptions& options = {});

enum class OutcomeKind : std::uint8_t {
    cavity_photon,     // photon left through the output mirror path
    spontaneous_loss,  // excitation lost to free space; atom leaves the scheme
    no_event,          // excitation never converted (or atom stayed in |e>)
};

struct EmissionOutcome {
    OutcomeKind kind = OutcomeKind::no_event;
    double t_emit = 0.0;  // valid for the two jump kinds
};

// Quantum-jump unraveling by the norm-threshold (waiting-time) method: a jump
// happens when the no-jump survival probability crosses a uniform draw, and the
// channel is chosen by the instantaneous rate ratio 2k|cg|^2 : 2y|cx|^2.
// One excitation, so the trajectory ends at the first jump.
EmissionOutcome draw_outcome(const StateHistory& h, const LambdaSystemParams& p,
                             std::mt19937_64& rng);

// Fused evolve + draw that never materializes the history. Bit-compatible with
// evolve_amplitudes + draw_outcome given the same rng state.
EmissionOutcome run_trajectory(const LambdaSystemParams& p, const PulseEnvelope& drive,
                               const std::vector<double>& g_of_t, std::mt19937_64& rng,
                               const IntegrateOptions& options = {});
EmissionOutcome run_trajectory(const LambdaSystemParams& p, const PulseEnvelope& drive,
                               double g_const, std::mt19937_64& rng,
                               const IntegrateOptions& options = {});

// Recycling step between pulses: true = atom back in |e,0> and ready.
inline bool repump_ready(double p_repump, std::mt19937_64& rng) {
    if (p_repump >= 1.0) return true;
    if (p_repump <= 0.0) return false;
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p_repump;
}

}  // namespace cavsim
