#include "cavsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <unordered_map>
#include <unordered_set>

namespace cavsim {

namespace {

// Fraction of the period where both t and t - tau land outside the repump
// window. Uncorrelated clicks on a masked stream have their pair acceptance
// modulated by this, with maxima at tau = multiples of the period.
double unmasked_overlap(const PulseSchedule& s, double tau) {
    const double P = s.period_s;
    double lo[2], hi[2];
    int n = 0;
    if (s.repump_start_s > 0) {
        lo[n] = 0.0;
        hi[n] = s.repump_start_s;
        ++n;
    }
    if (s.repump_end_s < P) {
        lo[n] = s.repump_end_s;
        hi[n] = P;
        ++n;
    }
    if (n == 0) return 0.0;

    double shift = std::fmod(tau, P);
    if (shift < 0) shift += P;

    double m = 0.0;
    for (int a = 0; a < n; ++a) {
        // [lo,hi) + shift, split at the period wrap
        double slo = lo[a] + shift, shi = hi[a] + shift;
        double plo[2], phi[2];
        int np = 0;
        if (shi <= P) {
            plo[0] = slo;
            phi[0] = shi;
            np = 1;
        } else if (slo >= P) {
            plo[0] = slo - P;
            phi[0] = shi - P;
            np = 1;
        } else {
            plo[0] = slo;
            phi[0] = P;
            plo[1] = 0.0;
            phi[1] = shi - P;
            np = 2;
        }
        for (int b = 0; b < n; ++b)
            for (int p = 0; p < np; ++p)
                m += std::max(0.0, std::min(hi[b], phi[p]) - std::max(lo[b], plo[p]));
    }
    return m / P;
}

}  // namespace

CorrelationHistogram cross_correlate(const std::vector<ClickRecord>& clicks, double bin_width,
                                     double max_tau, bool mask_repump,
                                     const PulseSchedule& schedule, double t_span) {
    if (bin_width <= 0 || max_tau <= 0 || t_span <= 0)
        throw ConfigError("cross_correlate: bin_width, max_tau and t_span must be positive");
    if (max_tau < bin_width) throw ConfigError("cross_correlate: max_tau smaller than one bin");

    std::vector<double> t0, t1;
    double t_prev = -1e300;
    for (const auto& c : clicks) {
        if (c.t < t_prev) throw ConfigError("cross_correlate: clicks not sorted by time");
        t_prev = c.t;
        if (mask_repump && (c.flags & click_flag_repump)) continue;
        (c.detector == 0 ? t0 : t1).push_back(c.t);
    }

    CorrelationHistogram h;
    h.bin_width = bin_width;
    h.max_tau = max_tau;
    h.n0 = t0.size();
    h.n1 = t1.size();
    h.t_span = t_span;
    const std::size_t n_bins = std::size_t(std::ceil(2.0 * max_tau / bin_width - 1e-9));
    h.counts.assign(n_bins, 0.0);
    h.accidental.assign(n_bins, 0.0);
    h.normalized.assign(n_bins, 0.0);

    std::size_t j_lo = 0;
    for (double ta : t0) {
        while (j_lo < t1.size() && t1[j_lo] < ta - max_tau) ++j_lo;
        for (std::size_t j = j_lo; j < t1.size() && t1[j] < ta + max_tau; ++j) {
            double tau = ta - t1[j];
            auto bin = std::size_t((tau + max_tau) / bin_width);
            if (bin < n_bins) h.counts[bin] += 1.0;
        }
    }

    const double duty_open =
        mask_repump ? 1.0 - (schedule.repump_end_s - schedule.repump_start_s) / schedule.period_s
                    : 1.0;
    const double pair_rate = duty_open > 0
                                 ? double(h.n0) * double(h.n1) / (t_span * duty_open * duty_open)
                                 : 0.0;
    for (std::size_t i = 0; i < n_bins; ++i) {
        double o = mask_repump ? unmasked_overlap(schedule, h.tau_at(i)) : 1.0;
        h.accidental[i] = pair_rate * bin_width * o;
        h.normalized[i] = h.accidental[i] > 0 ? h.counts[i] / h.accidental[i] : 0.0;
    }
    return h;
}

SelectionResult select_transits(const std::vector<ClickRecord>& clicks,
                                const TransitSelection& sel) {
    if (sel.bin_width_s <= 0) throw ConfigError("select_transits: bin width must be positive");
    if (sel.threshold_counts < 0) throw ConfigError("select_transits: negative threshold");

    std::unordered_map<std::uint64_t, std::size_t> occupancy;
    for (const auto& c : clicks) {
        if (c.flags & click_flag_repump) continue;
        occupancy[std::uint64_t(c.t / sel.bin_width_s)]++;
    }

    SelectionResult out;
    out.occupied_bins = occupancy.size();
    out.bins.reserve(occupancy.size());
    for (const auto& [bin, count] : occupancy)
        out.bins.push_back({bin, count, double(bin) * sel.bin_width_s});
    std::sort(out.bins.begin(), out.bins.end(),
              [](const TransitBin& a, const TransitBin& b) { return a.bin < b.bin; });

    for (const auto& c : clicks) {
        if (c.flags & click_flag_repump) continue;
        auto it = occupancy.find(std::uint64_t(c.t / sel.bin_width_s));
        if (it != occupancy.end() && int(it->second) > sel.threshold_counts)
            out.selected.push_back(c);
    }
    return out;
}

ShapeHistogram recover_shape(const std::vector<ClickRecord>& clicks,
                             const PulseSchedule& schedule, std::size_t n_bins) {
    if (n_bins < 2) throw ConfigError("recover_shape: need at least 2 bins");
    schedule.validate();

    ShapeHistogram h;
    h.t0 = schedule.drive_start_s;
    const double window = schedule.drive_end_s - schedule.drive_start_s;
    h.bin_width = window / double(n_bins);
    h.counts.assign(n_bins, 0.0);
    for (const auto& c : clicks) {
        if (c.flags & click_flag_repump) continue;
        double tm = schedule.t_mod(c.t) - schedule.drive_start_s;
        if (tm < 0 || tm >= window) continue;
        auto bin = std::size_t(tm / h.bin_width);
        if (bin < n_bins) {
            h.counts[bin] += 1.0;
            ++h.total;
        }
    }
    return h;
}

EmissionFit fit_emission_probability(const std::vector<ClickRecord>& clicks,
                                     std::size_t k_pulses, const EfficiencyChain& chain) {
    if (k_pulses < 5) throw ConfigError("fit_emission_probability: need k_pulses >= 5");
    chain.validate();

    // Pulses that produced at least one photon click, keyed by (shot, pulse).
    std::unordered_set<std::uint64_t> lit;
    for (const auto& c : clicks) {
        if (c.flags & click_flag_repump) continue;
        lit.insert((std::uint64_t(c.shot_index) << 32) | c.pulse_index);
    }
    if (lit.empty())
        throw InsufficientStatistics("fit_emission_probability: no photon clicks");

    EmissionFit out;
    out.n_conditioning = lit.size();
    out.low_confidence = lit.size() < 100;

    const double n = double(lit.size());
    std::vector<double> ks(k_pulses);
    out.cond_p.resize(k_pulses);
    out.cond_err.resize(k_pulses);
    for (std::size_t k = 1; k <= k_pulses; ++k) {
        std::size_t hits = 0;
        for (std::uint64_t key : lit) {
            std::uint64_t pulse = key & 0xffffffffull;
            if (pulse + k > 0xffffffffull) continue;
            if (lit.count((key & ~0xffffffffull) | (pulse + k))) ++hits;
        }
        double p = double(hits) / n;
        ks[k - 1] = double(k);
        out.cond_p[k - 1] = p;
        out.cond_err[k - 1] = std::max(std::sqrt(p * (1.0 - p) / n), 1.0 / n);
    }

    out.fit = fit_gaussian_peak(ks, out.cond_p, out.cond_err);
    out.p_max_raw = out.fit.amplitude;
    out.p_max_raw_err = out.fit.amplitude_err;
    const double det = chain.product();
    out.p_max_corrected = out.p_max_raw / det;
    out.p_max_corrected_err = out.p_max_raw_err / det;
    return out;
}

PeakAreas peak_areas(const CorrelationHistogram& h, double period_s) {
    if (period_s <= 0) throw ConfigError("peak_areas: period must be positive");
    if (h.bin_width > 0.5 * period_s + 1e-15)
        throw ConfigError("peak_areas: bins coarser than half a period mix adjacent peaks");
    const auto j_max = long(std::floor(h.max_tau / period_s - 0.5));
    if (j_max < 2)
        throw ConfigError("peak_areas: histogram too narrow for side peaks");

    PeakAreas out;
    std::unordered_map<long, std::size_t> index;
    for (long j = -j_max; j <= j_max; ++j) {
        index[j] = out.lag_s.size();
        out.lag_s.push_back(double(j) * period_s);
        out.area.push_back(0.0);
        out.raw.push_back(0.0);
    }
    for (std::size_t i = 0; i < h.size(); ++i) {
        long j = std::lround(h.tau_at(i) / period_s);
        auto it = index.find(j);
        if (it == index.end()) continue;
        out.area[it->second] += h.counts[i] - h.accidental[i];
        out.raw[it->second] += h.counts[i];
    }
    out.central = out.area[index[0]];
    out.side_mean_nearest = (out.area[index[-2]] + out.area[index[-1]] + out.area[index[1]] +
                             out.area[index[2]]) /
                            4.0;
    return out;
}

EnvelopeFit fit_peak_envelope(const PeakAreas& peaks, double fit_min_s, double fit_max_s) {
    std::vector<double> x, y, ye;
    for (std::size_t i = 0; i < peaks.lag_s.size(); ++i) {
        double lag = std::abs(peaks.lag_s[i]);
        if (lag < fit_min_s || lag > fit_max_s) continue;
        x.push_back(peaks.lag_s[i]);
        y.push_back(peaks.area[i]);
        ye.push_back(std::sqrt(std::max(peaks.raw[i], 1.0)));
    }
    if (x.size() < 4)
        throw InsufficientStatistics("fit_peak_envelope: fewer than 4 side peaks in fit range");
    GaussianFit g = fit_gaussian_peak(x, y, ye);
    if (g.flat || !(g.sigma > 0))
        throw InsufficientStatistics("fit_peak_envelope: no decaying envelope in fit range");
    return {g.sigma, g.amplitude};
}

HomVisibility hom_visibility(const CorrelationHistogram& par, const CorrelationHistogram& perp) {
    if (par.size() != perp.size() || par.bin_width != perp.bin_width)
        throw ConfigError("hom_visibility: histograms have different binning");

    HomVisibility out;
    for (std::size_t i = 0; i < par.size(); ++i) {
        out.area_par += par.counts[i];
        out.area_perp += perp.counts[i];
    }
    if (out.area_perp <= 0)
        throw InsufficientStatistics("hom_visibility: empty perpendicular histogram");

    const double r = out.area_par / out.area_perp;
    out.v = 1.0 - r;
    out.v_err = r * std::sqrt(1.0 / std::max(out.area_par, 1.0) + 1.0 / out.area_perp);

    // Bin-wise ratio vs 1 - exp(-(tau/T)^2); the ratio is independent of the
    // photon envelope, so the fit isolates the coherence time.
    std::vector<double> tau, ratio, w;
    for (std::size_t i = 0; i < par.size(); ++i) {
        if (perp.counts[i] < 5.0) continue;
        double q = perp.counts[i], p = par.counts[i];
        tau.push_back(par.tau_at(i));
        ratio.push_back(p / q);
        double var = (p + 1.0) / (q * q) + (p * p) / (q * q * q);
        w.push_back(1.0 / var);
    }
    if (tau.size() < 3)
        throw InsufficientStatistics("hom_visibility: too few populated bins for coherence fit");

    auto chi2_of = [&](double t_coh) {
        double s = 0.0;
        for (std::size_t i = 0; i < tau.size(); ++i) {
            double m = 1.0 - std::exp(-tau[i] * tau[i] / (t_coh * t_coh));
            s += w[i] * (ratio[i] - m) * (ratio[i] - m);
        }
        return s;
    };
    const double t_lo = par.bin_width, t_hi = 20.0 * par.max_tau;
    out.t_coherence_s = minimize_golden(t_lo, t_hi, par.bin_width * 1e-3, chi2_of);

    // 1-sigma interval from the chi-square + 1 crossings on both sides.
    const double c_min = chi2_of(out.t_coherence_s);
    double lo = out.t_coherence_s, hi = out.t_coherence_s;
    const double step = out.t_coherence_s * 0.005;
    while (hi < 3.0 * out.t_coherence_s && chi2_of(hi) < c_min + 1.0) hi += step;
    while (lo > out.t_coherence_s / 3.0 && chi2_of(lo) < c_min + 1.0) lo -= step;
    out.t_coherence_err_s = 0.5 * (hi - lo);
    return out;
}

}  // namespace cavsim
