#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cavsim/stats.hpp"

namespace cavsim {

// Detection efficiency budget. Photon survival through outcoupling,
// collection and detector quantum efficiency is a single Bernoulli with the
// chain product; fiber propagation loss is folded into eta_collection.
struct EfficiencyChain {
    double eta_out = 0.50;
    double eta_collection = 0.65;
    double eta_detector = 0.70;
    double dark_rate_hz = 1000.0;        // per detector
    double jitter_sigma_s = 350e-12 / 2.3548200450309493;  // 350 ps FWHM

    double product() const { return eta_out * eta_collection * eta_detector; }
    void validate() const;
};

// Timing of one repetition period: a drive window (photon production) and a
// repump window, both inside [0, period).
struct PulseSchedule {
    double period_s = 1e-6;
    double drive_start_s = 0.0;
    double drive_end_s = 350e-9;
    double repump_start_s = 500e-9;
    double repump_end_s = 800e-9;
    double repump_scatter_rate_hz = 0.0;  // per detector, inside repump windows
    double p_repump = 1.0;
    std::uint32_t pulses_per_shot = 1;

    void validate() const;
    double t_mod(double t) const;
    bool in_repump(double t) const;
    std::uint32_t pulse_of(double t) const { return std::uint32_t(t / period_s); }
};

inline constexpr std::uint8_t click_flag_repump = 0x01;

struct ClickRecord {
    double t = 0.0;  // absolute seconds
    std::uint8_t detector = 0;
    std::uint32_t pulse_index = 0;
    std::uint32_t shot_index = 0;
    std::uint8_t flags = 0;
};

// A cavity photon leaving the output mirror, before the detection chain.
struct PhotonEvent {
    double t_abs = 0.0;  // emission time, absolute seconds
    std::uint32_t pulse_index = 0;
    std::uint32_t shot_index = 0;
};

struct InterferometerConfig {
    enum class Kind { hbt, hom };
    enum class Pol { parallel, perpendicular };
    Kind kind = Kind::hbt;
    Pol polarization = Pol::parallel;
    double coherence_time_s = 300e-9;
    double sigma_delta = 0.0;  // rad/s pair dephasing spread; 0 = none
    int delay_periods = 1;     // HOM fiber delay in whole periods
    double bs_reflectivity = 0.5;

    void validate() const;
    // default dephasing spread reproducing a 1 - exp(-(tau/T)^2) dip
    double sigma_delta_for_T() const { return std::sqrt(2.0) / coherence_time_s; }
};

// Chain thinning: keeps each photon with probability product().
std::vector<PhotonEvent> apply_chain(const std::vector<PhotonEvent>& photons,
                                     const EfficiencyChain& chain, std::mt19937_64& rng);

// 50/50 splitter with a detector on each port.
std::vector<ClickRecord> route_hbt(const std::vector<PhotonEvent>& detected,
                                   std::mt19937_64& rng);

struct HomResult {
    std::vector<ClickRecord> clicks;
    std::size_t pairs_both = 0;      // pairs where both photons reached the splitter
    std::size_t unpaired_pulses = 0; // trailing pulse with no partner
};

// Two-photon interference of successive pulses: the even pulse's photon is
// delayed by delay_periods whole periods so the pair meets at the splitter.
// Perpendicular polarization routes the two photons independently. Parallel
// polarization draws a pair detuning Delta ~ N(0, sigma_delta) and accepts a
// cross-detector coincidence with probability (1 - cos(Delta tau))/2, tau the
// true arrival separation; otherwise both photons leave through one port.
// detected must be pulse-ordered with at most one photon per pulse; a photon
// whose partner pulse lies beyond n_pulses is dropped and counted unpaired.
HomResult route_hom(const std::vector<PhotonEvent>& detected, const InterferometerConfig& cfg,
                    const PulseSchedule& schedule, std::uint64_t n_pulses, std::mt19937_64& rng);

// Homogeneous Poisson background, one stream per detector, over [0, t_total].
std::vector<ClickRecord> dark_counts(const EfficiencyChain& chain, double t_total,
                                     std::mt19937_64& rng);

// Background present only inside repump windows (beam clipping the mirrors).
std::vector<ClickRecord> repump_scatter(const PulseSchedule& schedule, double t_total,
                                        std::mt19937_64& rng);

// Full chain: thinning, routing per the interferometer, detector jitter on
// photon clicks, dark and repump backgrounds, merge, repump flagging.
// Click times are quantized to 1 ps so the on-disk formats are lossless.
struct SynthesisResult {
    std::vector<ClickRecord> clicks;
    std::size_t detected_photons = 0;
    std::size_t pairs_both = 0;
    std::size_t unpaired_pulses = 0;
};
SynthesisResult synthesize_clicks(const std::vector<PhotonEvent>& photons,
                                  const EfficiencyChain& chain, const PulseSchedule& schedule,
                                  const InterferometerConfig& icfg, double t_total,
                                  std::uint64_t seed);

}  // namespace cavsim
