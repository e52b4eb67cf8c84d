#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cavsim/photostream.hpp"
#include "cavsim/stats.hpp"

namespace cavsim {

// Coincidence histogram of tau = t_D0 - t_D1 over [-max_tau, +max_tau).
// accidental[i] is the analytic uncorrelated-floor expectation for the bin,
// including the periodic acceptance dip caused by repump masking; normalized
// is counts/accidental (flat at 1 for uncorrelated streams).
struct CorrelationHistogram {
    double bin_width = 0.0;
    double max_tau = 0.0;
    std::vector<double> counts;
    std::vector<double> normalized;
    std::vector<double> accidental;
    std::size_t n0 = 0, n1 = 0;  // singles after masking
    double t_span = 0.0;

    std::size_t size() const { return counts.size(); }
    double tau_at(std::size_t i) const { return -max_tau + (double(i) + 0.5) * bin_width; }
};

CorrelationHistogram cross_correlate(const std::vector<ClickRecord>& clicks, double bin_width,
                                     double max_tau, bool mask_repump,
                                     const PulseSchedule& schedule, double t_span);

struct TransitSelection {
    double bin_width_s = 100e-6;
    int threshold_counts = 5;  // a bin is selected when count > threshold
};

struct TransitBin {
    std::uint64_t bin = 0;
    std::size_t count = 0;
    double t_start = 0.0;
};

struct SelectionResult {
    std::vector<ClickRecord> selected;  // non-repump clicks inside selected bins
    std::vector<TransitBin> bins;
    std::size_t occupied_bins = 0;  // bins with at least one click
};

SelectionResult select_transits(const std::vector<ClickRecord>& clicks,
                                const TransitSelection& sel);

// Arrival times folded modulo the period, restricted to the drive window.
struct ShapeHistogram {
    double t0 = 0.0;  // within-period start of the histogram (drive start)
    double bin_width = 0.0;
    std::vector<double> counts;
    std::size_t total = 0;
};

ShapeHistogram recover_shape(const std::vector<ClickRecord>& clicks,
                             const PulseSchedule& schedule, std::size_t n_bins);

// Conditional click probabilities P(click in pulse n+k | click in pulse n),
// Gaussian-extrapolated to k -> 0 and corrected by the chain product.
struct EmissionFit {
    std::vector<double> cond_p;    // k = 1..K
    std::vector<double> cond_err;
    GaussianFit fit;
    double p_max_raw = 0.0, p_max_raw_err = 0.0;
    double p_max_corrected = 0.0, p_max_corrected_err = 0.0;
    std::size_t n_conditioning = 0;
    bool low_confidence = false;  // fewer than 100 conditioning clicks
};

EmissionFit fit_emission_probability(const std::vector<ClickRecord>& clicks,
                                     std::size_t k_pulses, const EfficiencyChain& chain);

// Floor-subtracted areas of the pulse-period peaks of a correlation histogram.
struct PeakAreas {
    std::vector<double> lag_s;  // signed peak lag, one entry per period multiple
    std::vector<double> area;   // counts above the accidental floor
    std::vector<double> raw;    // counts including the floor (for weights)
    double central = 0.0;
    double side_mean_nearest = 0.0;  // mean area of the four nearest side peaks
};

PeakAreas peak_areas(const CorrelationHistogram& h, double period_s);

// Gaussian envelope of the side-peak areas vs lag; the fitted sigma tracks
// the transit-duration scale.
struct EnvelopeFit {
    double sigma_s = 0.0;
    double amplitude = 0.0;
};

EnvelopeFit fit_peak_envelope(const PeakAreas& peaks, double fit_min_s, double fit_max_s);

struct HomVisibility {
    double v = 0.0, v_err = 0.0;
    double t_coherence_s = 0.0, t_coherence_err_s = 0.0;
    double area_par = 0.0, area_perp = 0.0;
};

// V = 1 - (parallel area)/(perpendicular area) over the central window the
// histograms were built with, plus a one-parameter fit of the bin-wise ratio
// to 1 - exp(-(tau/T)^2).
HomVisibility hom_visibility(const CorrelationHistogram& par, const CorrelationHistogram& perp);

}  // namespace cavsim
