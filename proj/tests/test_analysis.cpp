#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cavsim/analysis.hpp"
#include "cavsim/stats.hpp"
#include "doctest.h"

using namespace cavsim;

namespace {

// two uncorrelated uniform click streams, flags stamped from the schedule
std::vector<ClickRecord> poisson_streams(double rate_hz, double t_span,
                                         const PulseSchedule& sched, std::uint64_t seed) {
    auto rng = make_rng(seed, 0);
    std::uniform_real_distribution<double> uni(0.0, t_span);
    std::vector<ClickRecord> clicks;
    for (int det = 0; det < 2; ++det) {
        std::poisson_distribution<long> pois(rate_hz * t_span);
        long n = pois(rng);
        for (long i = 0; i < n; ++i) {
            ClickRecord c;
            c.t = uni(rng);
            c.detector = std::uint8_t(det);
            if (sched.in_repump(c.t)) c.flags |= click_flag_repump;
            clicks.push_back(c);
        }
    }
    std::sort(clicks.begin(), clicks.end(),
              [](const ClickRecord& a, const ClickRecord& b) { return a.t < b.t; });
    return clicks;
}

CorrelationHistogram blank_hist(double bin, double max_tau) {
    CorrelationHistogram h;
    h.bin_width = bin;
    h.max_tau = max_tau;
    std::size_t n = std::size_t(std::ceil(2.0 * max_tau / bin - 1e-9));
    h.counts.assign(n, 0.0);
    h.accidental.assign(n, 0.0);
    h.normalized.assign(n, 0.0);
    h.t_span = 1.0;
    return h;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("uncorrelated streams sit on the analytic accidental floor") {
    PulseSchedule sched;
    const double t_span = 50.0, rate = 5000.0;
    auto clicks = poisson_streams(rate, t_span, sched, 17);
    auto h = cross_correlate(clicks, 0.25e-6, 5e-6, false, sched, t_span);
    const double expect = double(h.n0) * double(h.n1) * h.bin_width / t_span;
    for (std::size_t i = 0; i < h.size(); ++i)
        CHECK(h.accidental[i] == doctest::Approx(expect).epsilon(1e-12));
    auto gof = chi2_gof(h.counts, h.accidental);
    CHECK(gof.p_value > 1e-3);
    double mean_norm = 0.0;
    for (double v : h.normalized) mean_norm += v;
    mean_norm /= double(h.size());
    CHECK(mean_norm == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("repump masking dips the floor periodically but stays calibrated") {
    PulseSchedule sched;  // repump masks [500, 800) ns of every microsecond
    const double t_span = 50.0, rate = 5000.0;
    auto clicks = poisson_streams(rate, t_span, sched, 18);
    auto h = cross_correlate(clicks, 0.25e-6, 5e-6, true, sched, t_span);

    // masking removes the flagged singles
    std::size_t raw0 = 0, raw1 = 0, kept0 = 0, kept1 = 0;
    for (const auto& c : clicks) {
        (c.detector == 0 ? raw0 : raw1)++;
        if (!(c.flags & click_flag_repump)) (c.detector == 0 ? kept0 : kept1)++;
    }
    CHECK(h.n0 == kept0);
    CHECK(h.n1 == kept1);
    CHECK(double(kept0) / double(raw0) == doctest::Approx(0.7).epsilon(0.02));

    // the floor is symmetric and modulated at the pulse period
    auto mm = std::minmax_element(h.accidental.begin(), h.accidental.end());
    CHECK(*mm.first < 0.8 * *mm.second);
    for (std::size_t i = 0; i < h.size(); ++i)
        CHECK(h.accidental[i] ==
              doctest::Approx(h.accidental[h.size() - 1 - i]).epsilon(1e-9));

    // and it tracks the measured masked coincidences bin by bin
    auto gof = chi2_gof(h.counts, h.accidental);
    CHECK(gof.p_value > 1e-3);
    double sum_c = 0.0, sum_a = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        sum_c += h.counts[i];
        sum_a += h.accidental[i];
    }
    CHECK(std::fabs(sum_c - sum_a) < 4.0 * std::sqrt(sum_a));
}

TEST_CASE("cross correlation rejects unsorted input") {
    PulseSchedule sched;
    std::vector<ClickRecord> clicks(2);
    clicks[0].t = 2.0;
    clicks[1].t = 1.0;
    CHECK_THROWS_AS(cross_correlate(clicks, 1e-6, 1e-5, false, sched, 10.0), ConfigError);
    CHECK_THROWS_AS(cross_correlate({}, 1e-6, 1e-7, false, sched, 10.0), ConfigError);
}

TEST_CASE("transit selection keeps bins strictly above threshold") {
    TransitSelection sel;
    sel.bin_width_s = 100e-6;
    sel.threshold_counts = 5;
    std::vector<ClickRecord> clicks;
    auto add = [&](double t, std::uint8_t flags = 0) {
        ClickRecord c;
        c.t = t;
        c.flags = flags;
        clicks.push_back(c);
    };
    for (int i = 0; i < 7; ++i) add(305e-6 + double(i) * 1e-6);  // bin 3: 7 clicks
    for (int i = 0; i < 5; ++i) add(1005e-6 + double(i) * 1e-6); // bin 10: exactly 5
    add(315e-6, click_flag_repump);  // flagged: neither counted nor selected
    std::sort(clicks.begin(), clicks.end(),
              [](const ClickRecord& a, const ClickRecord& b) { return a.t < b.t; });

    auto r = select_transits(clicks, sel);
    CHECK(r.occupied_bins == 2);
    CHECK(r.selected.size() == 7);  // bin 10 misses the strict > 5 cut
    for (const auto& c : r.selected) {
        CHECK(std::uint64_t(c.t / sel.bin_width_s) == 3);
        CHECK((c.flags & click_flag_repump) == 0);
    }
    REQUIRE(r.bins.size() == 2);
    CHECK(r.bins[0].count == 7);
    CHECK(r.bins[1].count == 5);

    auto empty = select_transits({}, sel);
    CHECK(empty.occupied_bins == 0);
    CHECK(empty.selected.empty());
}

TEST_CASE("raising the threshold never adds selected clicks") {
    PulseSchedule sched;
    auto clicks = poisson_streams(3000.0, 5.0, sched, 44);
    std::size_t prev = clicks.size() + 1;
    for (int thr : {0, 2, 4, 8, 16}) {
        TransitSelection sel;
        sel.threshold_counts = thr;
        sel.bin_width_s = 1e-3;
        auto r = select_transits(clicks, sel);
        CHECK(r.selected.size() < prev);
        prev = r.selected.size() + 1;
    }
}

TEST_CASE("shape recovery folds clicks into the drive window") {
    PulseSchedule sched;  // drive [0, 350) ns of a 1 us period
    std::vector<ClickRecord> clicks;
    auto add = [&](double t, std::uint8_t flags = 0) {
        ClickRecord c;
        c.t = t;
        c.flags = flags;
        clicks.push_back(c);
    };
    // 40 periods with one click at 105 ns and one at 245 ns
    for (int k = 0; k < 40; ++k) {
        add(double(k) * 1e-6 + 105e-9);
        add(double(k) * 1e-6 + 245e-9);
    }
    add(3e-6 + 600e-9, click_flag_repump);  // masked
    add(5e-6 + 420e-9);                     // outside the drive window
    auto h = recover_shape(clicks, sched, 35);  // 10 ns bins
    CHECK(h.total == 80);
    CHECK(h.bin_width == doctest::Approx(10e-9));
    CHECK(h.counts[10] == 40.0);
    CHECK(h.counts[24] == 40.0);
    double sum = 0.0;
    for (double v : h.counts) sum += v;
    CHECK(sum == 80.0);
    CHECK_THROWS_AS(recover_shape(clicks, sched, 1), ConfigError);
}

TEST_CASE("flat source conditionals extrapolate to the per-pulse click rate") {
    // memoryless emitter: P(click n+k | click n) is flat in k, so the
    // gaussian intercept is the raw click probability itself
    const double p_click = 0.15;
    const std::size_t n_pulses = 200000;
    auto rng = make_rng(23, 0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<ClickRecord> clicks;
    for (std::size_t n = 0; n < n_pulses; ++n) {
        if (uni(rng) >= p_click) continue;
        ClickRecord c;
        c.t = double(n) * 1e-6 + 150e-9;
        c.pulse_index = std::uint32_t(n);
        c.shot_index = 0;
        clicks.push_back(c);
    }
    EfficiencyChain chain;  // product 0.2275
    auto fit = fit_emission_probability(clicks, 16, chain);
    CHECK_FALSE(fit.low_confidence);
    CHECK(fit.n_conditioning == clicks.size());
    const double n_cond = double(fit.n_conditioning);
    for (std::size_t k = 0; k < 16; ++k) {
        CHECK(std::fabs(fit.cond_p[k] - p_click) <
              5.0 * std::sqrt(p_click * (1 - p_click) / n_cond));
    }
    CHECK(fit.p_max_raw == doctest::Approx(p_click).epsilon(0.02));
    CHECK(fit.p_max_corrected == doctest::Approx(fit.p_max_raw / 0.2275).epsilon(1e-12));
    CHECK(fit.p_max_corrected == doctest::Approx(0.659).epsilon(0.03));
}

TEST_CASE("finite transits bias the intercept low by a bounded amount") {
    // atoms present for 100-pulse blocks: the conditionals decay linearly as
    // the partner pulse falls off the transit, and the gaussian extrapolation
    // recovers the in-transit rate to a few percent
    const double p0 = 0.2;
    const std::size_t block = 100, n_blocks = 600, stride = 300;
    auto rng = make_rng(29, 0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<ClickRecord> clicks;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        for (std::size_t j = 0; j < block; ++j) {
            if (uni(rng) >= p0) continue;
            std::size_t n = b * stride + j;
            ClickRecord c;
            c.t = double(n) * 1e-6 + 150e-9;
            c.pulse_index = std::uint32_t(n);
            clicks.push_back(c);
        }
    }
    EfficiencyChain chain;
    auto fit = fit_emission_probability(clicks, 16, chain);
    // linear occupancy decay (1 - k/100) at k = 1..16 costs the intercept a
    // couple of percent; anything outside [0.9, 1.03] p0 means the fit broke
    CHECK(fit.p_max_raw > 0.90 * p0);
    CHECK(fit.p_max_raw < 1.03 * p0);
    for (std::size_t k = 1; k < 16; ++k) CHECK(fit.cond_p[k] < fit.cond_p[0] + 0.02);
}

TEST_CASE("emission fit guards its preconditions") {
    EfficiencyChain chain;
    std::vector<ClickRecord> clicks(1);
    clicks[0].pulse_index = 3;
    CHECK_THROWS_AS(fit_emission_probability(clicks, 4, chain), ConfigError);
    CHECK_THROWS_AS(fit_emission_probability({}, 16, chain), InsufficientStatistics);
    std::vector<ClickRecord> few;
    for (int i = 0; i < 20; ++i) {
        ClickRecord c;
        c.t = double(i) * 2e-6;
        c.pulse_index = std::uint32_t(2 * i);
        few.push_back(c);
    }
    auto fit = fit_emission_probability(few, 8, chain);
    CHECK(fit.low_confidence);
}

TEST_CASE("peak areas split the histogram at period multiples") {
    const double period = 1e-6;
    auto h = blank_hist(0.25e-6, 5e-6);  // 40 bins, peaks j = -4..4, usable |j| <= 4
    // uniform floor of 2 plus peaks: central bins stay at floor, side peaks rise
    for (std::size_t i = 0; i < h.size(); ++i) {
        h.accidental[i] = 2.0;
        h.counts[i] = 2.0;
    }
    auto add_peak = [&](long j, double area) {
        // split the area across the two bins nearest the peak centre
        double tau = double(j) * period;
        for (std::size_t i = 0; i < h.size(); ++i)
            if (std::fabs(h.tau_at(i) - tau) < 0.26e-6) h.counts[i] += area / 2.0;
    };
    add_peak(-2, 80.0);
    add_peak(-1, 100.0);
    add_peak(1, 100.0);
    add_peak(2, 80.0);
    add_peak(3, 60.0);
    add_peak(-3, 60.0);
    auto pa = peak_areas(h, period);
    CHECK(pa.central == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(pa.side_mean_nearest == doctest::Approx(90.0).epsilon(1e-12));
    for (std::size_t i = 0; i < pa.lag_s.size(); ++i) {
        long j = std::lround(pa.lag_s[i] / period);
        if (j == 3) CHECK(pa.area[i] == doctest::Approx(60.0));
        if (j == -1) CHECK(pa.area[i] == doctest::Approx(100.0));
    }
    auto coarse = blank_hist(0.6e-6, 5e-6);
    CHECK_THROWS_AS(peak_areas(coarse, period), ConfigError);
    auto narrow = blank_hist(0.25e-6, 2e-6);
    CHECK_THROWS_AS(peak_areas(narrow, period), ConfigError);
}

TEST_CASE("peak envelope fit recovers the transit scale") {
    PeakAreas pa;
    const double sigma = 3e-6, amp = 500.0;
    for (long j = -9; j <= 9; ++j) {
        if (j == 0) continue;
        double lag = double(j) * 1e-6;
        pa.lag_s.push_back(lag);
        double a = amp * std::exp(-lag * lag / (2.0 * sigma * sigma));
        pa.area.push_back(a);
        pa.raw.push_back(a + 4.0);
    }
    auto fit = fit_peak_envelope(pa, 0.5e-6, 20e-6);
    CHECK(fit.sigma_s == doctest::Approx(sigma).epsilon(0.02));
    CHECK(fit.amplitude == doctest::Approx(amp).epsilon(0.05));

    PeakAreas flat;
    for (long j = 1; j <= 8; ++j) {
        flat.lag_s.push_back(double(j) * 1e-6);
        flat.area.push_back(100.0);
        flat.raw.push_back(104.0);
    }
    CHECK_THROWS_AS(fit_peak_envelope(flat, 0.5e-6, 20e-6), InsufficientStatistics);
    CHECK_THROWS_AS(fit_peak_envelope(pa, 8.5e-6, 9.5e-6), InsufficientStatistics);
}

TEST_CASE("identical interferometer histograms mean zero visibility") {
    auto par = blank_hist(20e-9, 1e-6);
    for (std::size_t i = 0; i < par.size(); ++i) par.counts[i] = 50.0;
    auto v = hom_visibility(par, par);
    CHECK(v.v == 0.0);
    CHECK(v.area_par == v.area_perp);
}

TEST_CASE("an empty parallel histogram is perfect interference") {
    auto par = blank_hist(20e-9, 1e-6);
    auto perp = par;
    for (std::size_t i = 0; i < perp.size(); ++i) perp.counts[i] = 60.0;
    auto v = hom_visibility(par, perp);
    CHECK(v.v == doctest::Approx(1.0));
    CHECK(v.area_par == 0.0);
}

TEST_CASE("binwise ratio fit isolates the coherence time") {
    const double T = 300e-9;
    auto par = blank_hist(20e-9, 1e-6);
    auto perp = blank_hist(20e-9, 1e-6);
    for (std::size_t i = 0; i < par.size(); ++i) {
        double tau = par.tau_at(i);
        perp.counts[i] = 8000.0;
        par.counts[i] = 8000.0 * (1.0 - std::exp(-tau * tau / (T * T)));
    }
    auto v = hom_visibility(par, perp);
    CHECK(v.t_coherence_s == doctest::Approx(T).epsilon(0.02));
    CHECK(v.v == doctest::Approx(1.0 - v.area_par / v.area_perp).epsilon(1e-12));

    auto bad = blank_hist(10e-9, 1e-6);
    CHECK_THROWS_AS(hom_visibility(par, bad), ConfigError);
    auto empty = blank_hist(20e-9, 1e-6);
    CHECK_THROWS_AS(hom_visibility(par, empty), InsufficientStatistics);
}

}  // TEST_SUITE
