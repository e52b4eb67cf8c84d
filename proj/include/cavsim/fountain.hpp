#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "cavsim/stats.hpp"

namespace cavsim {

// Launch and cloud parameters for the atomic fountain. Lin-lin molasses
// launch: v = sqrt(2) * lambda * delta_f.
struct LaunchConfig {
    double delta_f_hz = 359.047e3;     // relative molasses detuning
    double wavelength_m = 780.24e-9;
    double launch_height_m = 8e-3;     // cloud centre to mode centre
    double cloud_sigma_m = 0.5e-3;     // isotropic position spread at launch
    double temperature_k = 100e-6;
    double atom_flux = 0.13;           // mean atoms per shot that reach the mode
    double gravity = 9.81;

    void validate() const;
};

struct ModeGeometry {
    double waist_m = 20e-6;
    double wavelength_m = 780.24e-9;
    bool standing_wave = true;  // false drops the cos(2 pi x / lambda) factor

    void validate() const;
    // radial distance at which the Gaussian envelope falls to the 1% clip
    double clip_radius() const;
};

// One atom's pass through the mode. Kinematics are stored as the state at
// t_ref (position r0, velocity v0, both in the mode frame, x along the cavity
// axis, y vertical); the path is exact ballistic flight.
struct AtomTransit {
    double t_enter = 0.0;  // shot-local seconds
    double t_exit = 0.0;
    double t_ref = 0.0;
    double r0[3] = {0, 0, 0};
    double v0[3] = {0, 0, 0};

    double duration() const { return t_exit - t_enter; }
    void position_at(double t, double gravity, double out[3]) const;
    // g(t)/g0: Gaussian envelope times the standing-wave factor, zero outside
    // the [t_enter, t_exit] clip
    double g_fraction(double t, const ModeGeometry& mode, double gravity) const;
    // envelope peak along the path (standing wave ignored)
    double apex_fraction(const ModeGeometry& mode, double gravity) const;
};

struct ShotTransits {
    std::uint32_t shot_index = 0;
    std::vector<AtomTransit> transits;
};

// v = sqrt(2) * lambda * delta_f
double launch_velocity(const LaunchConfig& launch);
// detuning that parks the trajectory apex at the given height
double detuning_for_apex(double height_m, double wavelength_m, double gravity);
// widest-possible transit from the printed estimate: 2 * sqrt(2 d / g_grav).
// d is the interaction span below the apex, not the mode diameter; with the
// 40 um mode diameter the formula gives 5.7 ms, the half-span reading 4.0 ms.
double max_interaction_time(double span_m, double gravity);

// Draws the atoms of one shot that actually cross the mode (|g| reaches the
// 1% clip). The count is Poisson(atom_flux); positions and velocities are
// sampled from the cloud and conditioned on crossing by rejection.
ShotTransits sample_shot(const LaunchConfig& launch, const ModeGeometry& mode,
                         std::uint32_t shot_index, std::mt19937_64& rng);

std::vector<ShotTransits> sample_transits(const LaunchConfig& launch, const ModeGeometry& mode,
                                          std::size_t n_shots, std::uint64_t seed);

// Fraction of transits whose [t_enter, t_exit] interval overlaps another
// transit of the same shot.
double overlap_fraction(const std::vector<ShotTransits>& shots);

// Tunes atom_flux so overlap_fraction over n_shots lands on target (secant
// iteration on the measured fraction). Returns the calibrated flux.
double calibrate_flux(LaunchConfig launch, const ModeGeometry& mode, double target_fraction,
                      std::size_t n_shots, std::uint64_t seed);

}  // namespace cavsim
