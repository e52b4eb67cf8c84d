#include "cavsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "cavsim/fountain.hpp"
#include "cavsim/io.hpp"

namespace cavsim {

DesignedPulse design_pulse(const ScenarioConfig& c) {
    PulseEnvelope target =
        c.pulse.shape == PulseConfig::Shape::sin2
            ? sin2_photon_target(c.pulse.p_target, c.pulse.duration_s, c.pulse.n_samples)
            : photon_target_from_file(c.pulse.file, c.pulse.p_target, c.pulse.duration_s,
                                      c.pulse.n_samples);
    DesignedPulse out;
    out.inversion = invert_target(c.system, target);
    out.omega = c.pulse.band_limit_hz > 0 ? band_limit(out.inversion.omega, c.pulse.band_limit_hz)
                                          : out.inversion.omega;
    return out;
}

EmissionModel::EmissionModel(const LambdaSystemParams& sys, const PulseEnvelope& omega) {
    p_.assign(n_alpha, 0.0);
    rows_.assign(n_alpha, {});
    for (std::size_t ia = 1; ia < n_alpha; ++ia) {
        const double alpha = double(ia) / double(n_alpha - 1);
        StateHistory h = evolve_amplitudes(sys, omega, alpha * sys.g0);
        p_[ia] = h.emitted_total();
        Row& row = rows_[ia];
        row.t0 = h.t_at(0);
        row.dt = h.dt;
        row.intensity = h.photon_intensity();
        row.cdf.assign(row.intensity.size(), 0.0);
        for (std::size_t i = 1; i < row.intensity.size(); ++i)
            row.cdf[i] = row.cdf[i - 1] +
                         0.5 * (row.intensity[i - 1] + row.intensity[i]) * row.dt;
        const double total = row.cdf.back();
        if (total <= 0.0) {
            p_[ia] = 0.0;
            row = {};
            continue;
        }
        for (auto& v : row.cdf) v /= total;
        for (auto& v : row.intensity) v /= total;
    }
    rows_[0] = rows_[1];  // alpha -> 0 keeps the weak-coupling time profile
}

double EmissionModel::p_emit(double alpha) const {
    double a = std::min(std::abs(alpha), 1.0);
    const double x = a * double(n_alpha - 1);
    const auto i = std::min(std::size_t(x), n_alpha - 2);
    const double f = x - double(i);
    return (1.0 - f) * p_[i] + f * p_[i + 1];
}

// Invert the trapezoid CDF of one alpha row at probability u: locate the grid
// step, then solve the linear-density quadratic within it. Exact for the
// piecewise-linear intensity, monotone in u.
double EmissionModel::draw_row(std::size_t ia, double u) const {
    const Row& row = rows_[ia];
    if (row.cdf.size() < 2) return 0.0;
    const auto it = std::upper_bound(row.cdf.begin(), row.cdf.end(), u);
    std::size_t i = std::min(std::size_t(it - row.cdf.begin()), row.cdf.size() - 1);
    if (i == 0) i = 1;
    const double c0 = row.cdf[i - 1];
    const double mass = row.cdf[i] - c0;
    if (mass <= 0.0) return row.t0 + double(i - 1) * row.dt;
    const double w = (u - c0) / mass;  // in [0, 1)
    const double f0 = row.intensity[i - 1], f1 = row.intensity[i];
    double frac;
    if (std::abs(f1 - f0) < 1e-12 * (f0 + f1)) {
        frac = w;
    } else {
        // w = (f0 x + (f1-f0) x^2 / 2) / ((f0+f1)/2), positive root
        const double a = 0.5 * (f1 - f0), b = f0, c = -w * 0.5 * (f0 + f1);
        const double disc = std::max(b * b - 4.0 * a * c, 0.0);
        frac = (-b + std::sqrt(disc)) / (2.0 * a);
        frac = std::min(std::max(frac, 0.0), 1.0);
    }
    return row.t0 + (double(i - 1) + frac) * row.dt;
}

double EmissionModel::sample_time(double alpha, double u) const {
    double a = std::min(std::abs(alpha), 1.0);
    const double x = a * double(n_alpha - 1);
    const auto i = std::min(std::size_t(x), n_alpha - 2);
    const double fa = x - double(i);
    const double uc = std::min(std::max(u, 0.0), 1.0);
    if (fa <= 0.0) return draw_row(i, uc);
    if (fa >= 1.0) return draw_row(i + 1, uc);
    return (1.0 - fa) * draw_row(i, uc) + fa * draw_row(i + 1, uc);
}

double shot_length(const ScenarioConfig& c) {
    switch (c.source) {
        case SourceKind::gated:
            return c.dwell_s + c.gap_s;
        case SourceKind::fountain:
            return c.run.window_end_s - c.run.window_start_s;
        case SourceKind::stationary:
        default:
            return double(c.run.n_pulses) * c.schedule.period_s;
    }
}

namespace {

double total_span(const ScenarioConfig& c) {
    return c.source == SourceKind::stationary ? shot_length(c)
                                              : shot_length(c) * double(c.run.n_shots);
}

std::string click_ext(FileFormat f) { return f == FileFormat::binary ? ".bin" : ".txt"; }

std::string find_clicks(const std::string& dir, const std::string& stem) {
    namespace fs = std::filesystem;
    for (const char* ext : {".txt", ".bin"}) {
        std::string p = dir + "/" + stem + ext;
        if (fs::exists(p)) return p;
    }
    throw ConfigError("no " + stem + " stream found in " + dir);
}

}  // namespace

SimulationOutput run_simulation(const ScenarioConfig& c) {
    c.validate();
    std::filesystem::create_directories(c.run.out_dir);
    const DesignedPulse design = design_pulse(c);
    const EmissionModel model(c.system, design.omega);

    const double period = c.schedule.period_s;
    const double L = shot_length(c);
    const std::size_t pps = c.pulses_per_shot();
    const double t_drive0 = c.schedule.drive_start_s;
    const double drive_mid = 0.5 * (c.schedule.drive_start_s + c.schedule.drive_end_s);
    const double p_peak = model.p_emit_peak();

    std::vector<PhotonEvent> photons;
    Table transits;
    transits.kind = "transits";
    transits.columns = {"shot", "t_start_s", "t_end_s", "apex_alpha"};
    std::size_t n_transits = 0;
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    if (c.source == SourceKind::stationary) {
        auto rng = make_rng(c.run.seed, 0);
        bool ready = true;
        for (std::size_t k = 0; k < c.run.n_pulses; ++k) {
            if (ready) {
                if (uni(rng) < p_peak) {
                    double t_em = model.sample_time(1.0, uni(rng));
                    photons.push_back({double(k) * period + t_drive0 + t_em,
                                       std::uint32_t(k), 0});
                }
                // a driven pulse always recycles through the repump window
                ready = false;
            }
            if (!ready) ready = repump_ready(c.schedule.p_repump, rng);
        }
    } else if (c.source == SourceKind::gated) {
        const auto n_dwell = std::size_t(std::llround(c.dwell_s / period));
        for (std::size_t s = 0; s < c.run.n_shots; ++s) {
            auto rng = make_rng(c.run.seed, s);
            bool ready = true;
            const double t_shot = double(s) * L;
            for (std::size_t k = 0; k < pps; ++k) {
                if (k < n_dwell && ready) {
                    if (uni(rng) < p_peak) {
                        double t_em = model.sample_time(1.0, uni(rng));
                        photons.push_back({t_shot + double(k) * period + t_drive0 + t_em,
                                           std::uint32_t(k), std::uint32_t(s)});
                    }
                    ready = false;
                }
                if (!ready) ready = repump_ready(c.schedule.p_repump, rng);
            }
        }
    } else {  // fountain
        const double ws = c.run.window_start_s, we = c.run.window_end_s;
        const auto k_ws = (long long)std::llround(ws / period);
        const auto k_we = (long long)std::llround(we / period);
        for (std::size_t s = 0; s < c.run.n_shots; ++s) {
            auto rng = make_rng(c.run.seed, s);
            ShotTransits st = sample_shot(c.launch, c.mode, std::uint32_t(s), rng);
            const double t_shot = double(s) * L;
            for (const auto& tr : st.transits) {
                if (tr.t_exit <= ws || tr.t_enter >= we) continue;
                ++n_transits;
                transits.rows.push_back({double(s), t_shot + std::max(tr.t_enter, ws) - ws,
                                         t_shot + std::min(tr.t_exit, we) - ws,
                                         tr.apex_fraction(c.mode, c.launch.gravity)});
                auto k0 = (long long)std::ceil((tr.t_enter - drive_mid) / period);
                auto k1 = (long long)std::floor((tr.t_exit - drive_mid) / period);
                k0 = std::max(k0, k_ws);
                k1 = std::min(k1, k_we - 1);
                bool ready = true;
                for (long long k = k0; k <= k1; ++k) {
                    if (ready) {
                        const double t_c = double(k) * period + drive_mid;
                        const double alpha = tr.g_fraction(t_c, c.mode, c.launch.gravity);
                        const double p = model.p_emit(alpha);
                        if (p > 0 && uni(rng) < p) {
                            double t_em = model.sample_time(alpha, uni(rng));
                            photons.push_back(
                                {t_shot + double(k - k_ws) * period + t_drive0 + t_em,
                                 std::uint32_t(k - k_ws), std::uint32_t(s)});
                        }
                        ready = false;
                    }
                    if (!ready) ready = repump_ready(c.schedule.p_repump, rng);
                }
            }
        }
    }

    const double t_total = total_span(c);
    PulseSchedule sched = c.schedule;
    sched.pulses_per_shot = std::uint32_t(pps);

    SimulationOutput out;
    out.t_total = t_total;
    out.n_photons = photons.size();
    out.n_transits = n_transits;
    const std::string ext = click_ext(c.run.format);

    std::size_t pairs_both = 0, unpaired = 0, detected = 0;
    if (c.interferometer.kind == InterferometerConfig::Kind::hbt) {
        InterferometerConfig icfg;
        icfg.kind = InterferometerConfig::Kind::hbt;
        SynthesisResult res = synthesize_clicks(photons, c.chain, sched, icfg, t_total,
                                                c.run.seed);
        std::string path = c.run.out_dir + "/clicks" + ext;
        write_clicks(path, res.clicks, c.hash, c.run.format);
        out.click_files.push_back(path);
        out.n_clicks = res.clicks.size();
        detected = res.detected_photons;
    } else {
        InterferometerConfig icfg;
        icfg.kind = InterferometerConfig::Kind::hom;
        icfg.coherence_time_s = c.interferometer.coherence_time_s;
        icfg.delay_periods = int(c.interferometer.delay_periods);
        icfg.polarization = InterferometerConfig::Pol::parallel;
        icfg.sigma_delta = c.interferometer.dephasing == DephasingMode::automatic
                               ? icfg.sigma_delta_for_T()
                               : 0.0;
        SynthesisResult par = synthesize_clicks(photons, c.chain, sched, icfg, t_total,
                                                c.run.seed);
        icfg.polarization = InterferometerConfig::Pol::perpendicular;
        SynthesisResult perp = synthesize_clicks(photons, c.chain, sched, icfg, t_total,
                                                 c.run.seed ^ 0x5851f42d4c957f2dull);
        std::string p_par = c.run.out_dir + "/clicks_parallel" + ext;
        std::string p_perp = c.run.out_dir + "/clicks_perpendicular" + ext;
        write_clicks(p_par, par.clicks, c.hash, c.run.format);
        write_clicks(p_perp, perp.clicks, c.hash, c.run.format);
        out.click_files = {p_par, p_perp};
        out.n_clicks = par.clicks.size() + perp.clicks.size();
        pairs_both = par.pairs_both + perp.pairs_both;
        unpaired = par.unpaired_pulses + perp.unpaired_pulses;
        detected = par.detected_photons + perp.detected_photons;
    }

    if (c.source == SourceKind::fountain) {
        out.transit_file = c.run.out_dir + "/transits.txt";
        write_table(out.transit_file, transits, c.hash);
    }

    Table summary;
    summary.kind = "run_summary";
    summary.columns = {"value"};
    auto add = [&summary](const std::string& name, double v) {
        summary.row_labels.push_back(name);
        summary.rows.push_back({v});
    };
    add("n_photons", double(out.n_photons));
    add("detected_photons", double(detected));
    add("n_clicks", double(out.n_clicks));
    add("n_transits", double(n_transits));
    add("t_total_s", t_total);
    add("p_emit_peak", p_peak);
    add("feasibility_margin", design.inversion.feasibility_margin);
    add("pairs_both", double(pairs_both));
    add("unpaired_pulses", double(unpaired));
    out.summary_file = c.run.out_dir + "/run_summary.txt";
    write_table(out.summary_file, summary, c.hash);
    return out;
}

AnalysisOutput run_analysis(const ScenarioConfig& c) {
    c.validate();
    const auto& a = c.analysis;
    const double t_total = total_span(c);
    const double period = c.schedule.period_s;

    AnalysisOutput out;
    Table summary;
    summary.kind = "summary";
    summary.columns = {"value", "uncertainty", "n_events"};
    auto add = [&summary](const std::string& name, double v, double u, double n) {
        summary.row_labels.push_back(name);
        summary.rows.push_back({v, u, n});
    };

    auto check_hash = [&c](const ClickFile& f, const std::string& path) {
        if (f.config_hash != c.hash)
            throw ConfigError(path + ": config hash mismatch (stream written by a different "
                                     "configuration)");
    };

    if (c.interferometer.kind == InterferometerConfig::Kind::hbt) {
        const std::string path = find_clicks(c.run.out_dir, "clicks");
        ClickFile cf = read_clicks(path);
        check_hash(cf, path);

        CorrelationHistogram g2 =
            cross_correlate(cf.clicks, a.g2_bin_s, a.g2_span_s, true, c.schedule, t_total);
        Table tg2;
        tg2.kind = "g2";
        tg2.columns = {"tau_s", "counts", "accidental", "normalized"};
        for (std::size_t i = 0; i < g2.size(); ++i)
            tg2.rows.push_back({g2.tau_at(i), g2.counts[i], g2.accidental[i], g2.normalized[i]});
        out.files.push_back(c.run.out_dir + "/g2.txt");
        write_table(out.files.back(), tg2, c.hash);

        PeakAreas pk = peak_areas(g2, period);
        Table tpk;
        tpk.kind = "g2_peaks";
        tpk.columns = {"lag_s", "area", "raw_counts"};
        for (std::size_t i = 0; i < pk.lag_s.size(); ++i)
            tpk.rows.push_back({pk.lag_s[i], pk.area[i], pk.raw[i]});
        out.files.push_back(c.run.out_dir + "/g2_peaks.txt");
        write_table(out.files.back(), tpk, c.hash);
        add("g2_central_area", pk.central, std::sqrt(std::max(pk.raw[pk.raw.size() / 2], 1.0)),
            pk.central);
        add("g2_side_mean_nearest", pk.side_mean_nearest, 0.0, pk.side_mean_nearest);
        if (pk.side_mean_nearest > 0)
            add("g2_central_ratio", pk.central / pk.side_mean_nearest, 0.0, 0.0);
        try {
            EnvelopeFit env = fit_peak_envelope(pk, a.envelope_fit_min_s, a.envelope_fit_max_s);
            add("g2_envelope_sigma_s", env.sigma_s, 0.0, 0.0);
        } catch (const InsufficientStatistics&) {
            add("g2_envelope_sigma_s", 0.0, 0.0, 0.0);  // too few side peaks to fit
        }

        ShapeHistogram base = recover_shape(cf.clicks, c.schedule, a.shape_bins);
        Table tsh;
        tsh.kind = "shapes";
        tsh.columns = {"t_s", "unselected"};
        std::vector<ShapeHistogram> per_thr;
        SelectionResult sel_hi;
        int thr_hi = 0;
        for (int thr : a.select_thresholds) {
            SelectionResult sel = select_transits(cf.clicks, {a.select_bin_s, thr});
            per_thr.push_back(recover_shape(sel.selected, c.schedule, a.shape_bins));
            tsh.columns.push_back("thr" + std::to_string(thr));
            add("n_selected_thr" + std::to_string(thr), double(sel.selected.size()), 0.0,
                double(sel.selected.size()));
            if (thr >= thr_hi) {
                thr_hi = thr;
                sel_hi = std::move(sel);
            }
        }
        for (std::size_t i = 0; i < base.counts.size(); ++i) {
            std::vector<double> row = {base.t0 + (double(i) + 0.5) * base.bin_width,
                                       base.counts[i]};
            for (const auto& h : per_thr) row.push_back(h.counts[i]);
            tsh.rows.push_back(row);
        }
        out.files.push_back(c.run.out_dir + "/shapes.txt");
        write_table(out.files.back(), tsh, c.hash);

        EmissionFit ef = fit_emission_probability(sel_hi.selected, a.emission_k, c.chain);
        Table tef;
        tef.kind = "emission";
        tef.columns = {"k", "cond_p", "cond_err"};
        for (std::size_t k = 0; k < ef.cond_p.size(); ++k)
            tef.rows.push_back({double(k + 1), ef.cond_p[k], ef.cond_err[k]});
        tef.notes.push_back("selection_threshold " + std::to_string(thr_hi));
        out.files.push_back(c.run.out_dir + "/emission.txt");
        write_table(out.files.back(), tef, c.hash);
        add("p_max_raw", ef.p_max_raw, ef.p_max_raw_err, double(ef.n_conditioning));
        add("p_max_corrected", ef.p_max_corrected, ef.p_max_corrected_err,
            double(ef.n_conditioning));
        add("emission_low_confidence", ef.low_confidence ? 1.0 : 0.0, 0.0,
            double(ef.n_conditioning));
        try {
            EmissionFit eu = fit_emission_probability(cf.clicks, a.emission_k, c.chain);
            add("p_max_corrected_unfiltered", eu.p_max_corrected, eu.p_max_corrected_err,
                double(eu.n_conditioning));
        } catch (const InsufficientStatistics&) {
        }
    } else {  // hom
        const std::string p_par = find_clicks(c.run.out_dir, "clicks_parallel");
        const std::string p_perp = find_clicks(c.run.out_dir, "clicks_perpendicular");
        ClickFile fpar = read_clicks(p_par);
        ClickFile fperp = read_clicks(p_perp);
        check_hash(fpar, p_par);
        check_hash(fperp, p_perp);

        const double max_tau = 0.5 * period;
        const auto n_bins = std::max<long long>(1, std::llround(max_tau / a.hom_bin_s));
        const double bin = max_tau / double(n_bins);
        CorrelationHistogram hp =
            cross_correlate(fpar.clicks, bin, max_tau, true, c.schedule, t_total);
        CorrelationHistogram hq =
            cross_correlate(fperp.clicks, bin, max_tau, true, c.schedule, t_total);
        HomVisibility hv = hom_visibility(hp, hq);

        Table th;
        th.kind = "hom";
        th.columns = {"tau_s", "counts_parallel", "counts_perpendicular", "ratio"};
        for (std::size_t i = 0; i < hp.size(); ++i)
            th.rows.push_back({hp.tau_at(i), hp.counts[i], hq.counts[i],
                               hq.counts[i] > 0 ? hp.counts[i] / hq.counts[i] : 0.0});
        out.files.push_back(c.run.out_dir + "/hom.txt");
        write_table(out.files.back(), th, c.hash);
        add("v_2ph", hv.v, hv.v_err, hv.area_par + hv.area_perp);
        add("t_coherence_s", hv.t_coherence_s, hv.t_coherence_err_s, 0.0);
        add("hom_area_parallel", hv.area_par, std::sqrt(std::max(hv.area_par, 0.0)),
            hv.area_par);
        add("hom_area_perpendicular", hv.area_perp, std::sqrt(hv.area_perp), hv.area_perp);
    }

    out.summary_file = c.run.out_dir + "/summary.txt";
    write_table(out.summary_file, summary, c.hash);
    return out;
}

}  // namespace cavsim
