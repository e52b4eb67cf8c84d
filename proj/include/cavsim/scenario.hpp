#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cavsim/analysis.hpp"
#include "cavsim/config.hpp"
#include "cavsim/qsim.hpp"
#include "cavsim/shaper.hpp"

namespace cavsim {

struct DesignedPulse {
    InversionResult inversion;  // design before any band limit
    PulseEnvelope omega;        // effective drive (band limited when configured)
};

DesignedPulse design_pulse(const ScenarioConfig& c);

// P_emit and emission-time draws tabulated over the coupling fraction
// alpha = |g|/g0, so the per-pulse sampling in a run needs no ODE work.
// Each alpha row keeps the cumulative trapezoid CDF of the solver's output
// intensity on its own time grid; a draw inverts it exactly (linear density
// within a step), so the sampled shape is the piecewise-linear intensity
// itself rather than a quantile approximation of it. sample_time returns the
// emission delay relative to the drive sample origin.
class EmissionModel {
  public:
    EmissionModel(const LambdaSystemParams& sys, const PulseEnvelope& omega);

    double p_emit(double alpha) const;
    double sample_time(double alpha, double u) const;
    double p_emit_peak() const { return p_emit(1.0); }

    static constexpr std::size_t n_alpha = 33;

  private:
    struct Row {
        double t0 = 0.0, dt = 0.0;
        std::vector<double> cdf;        // normalized, cdf[0] = 0, back() = 1
        std::vector<double> intensity;  // same grid, normalized with the cdf
    };
    double draw_row(std::size_t ia, double u) const;

    std::vector<double> p_;  // per alpha grid point
    std::vector<Row> rows_;
};

struct SimulationOutput {
    std::vector<std::string> click_files;
    std::string transit_file;  // fountain ground-truth sidecar, empty otherwise
    std::string summary_file;
    std::size_t n_photons = 0;
    std::size_t n_clicks = 0;
    std::size_t n_transits = 0;
    double t_total = 0.0;
};

// End-to-end run: pulse design, emission sampling per source kind, click
// synthesis, files into run.out_dir. Recorded time is gapless: shot k maps to
// [k*L, (k+1)*L) where L is the recorded window length.
SimulationOutput run_simulation(const ScenarioConfig& c);

struct AnalysisOutput {
    std::vector<std::string> files;
    std::string summary_file;
};

// Full statistics suite over the click files a simulation left in out_dir.
AnalysisOutput run_analysis(const ScenarioConfig& c);

// Recorded span of one shot, seconds.
double shot_length(const ScenarioConfig& c);

}  // namespace cavsim
