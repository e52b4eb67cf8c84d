#include "cavsim/photostream.hpp"

#include <algorithm>
#include <cmath>

namespace cavsim {

void EfficiencyChain::validate() const {
    for (double e : {eta_out, eta_collection, eta_detector})
        if (e < 0.0 || e > 1.0) throw ConfigError("chain: efficiencies must be in [0, 1]");
    if (dark_rate_hz < 0.0 || jitter_sigma_s < 0.0)
        throw ConfigError("chain: rates must be non-negative");
}

void PulseSchedule::validate() const {
    if (!(period_s > 0.0)) throw ConfigError("schedule: period must be positive");
    if (!(0.0 <= drive_start_s && drive_start_s < drive_end_s && drive_end_s <= period_s))
        throw ConfigError("schedule: drive window must fit the period");
    if (!(0.0 <= repump_start_s && repump_start_s < repump_end_s && repump_end_s <= period_s))
        throw ConfigError("schedule: repump window must fit the period");
    if (drive_start_s < repump_end_s && repump_start_s < drive_end_s)
        throw ConfigError("schedule: drive and repump windows overlap");
    if (p_repump < 0.0 || p_repump > 1.0) throw ConfigError("schedule: p_repump in [0, 1]");
    if (repump_scatter_rate_hz < 0.0) throw ConfigError("schedule: negative scatter rate");
    if (pulses_per_shot == 0) throw ConfigError("schedule: pulses_per_shot must be >= 1");
}

double PulseSchedule::t_mod(double t) const {
    double m = std::fmod(t, period_s);
    return m < 0.0 ? m + period_s : m;
}

bool PulseSchedule::in_repump(double t) const {
    double m = t_mod(t);
    return m >= repump_start_s && m < repump_end_s;
}

void InterferometerConfig::validate() const {
    if (!(coherence_time_s > 0.0)) throw ConfigError("interferometer: T must be positive");
    if (sigma_delta < 0.0) throw ConfigError("interferometer: sigma_delta must be >= 0");
    if (delay_periods < 1) throw ConfigError("interferometer: delay must be >= 1 period");
    if (!(bs_reflectivity > 0.0 && bs_reflectivity < 1.0))
        throw ConfigError("interferometer: splitter reflectivity in (0, 1)");
}

std::vector<PhotonEvent> apply_chain(const std::vector<PhotonEvent>& photons,
                                     const EfficiencyChain& chain, std::mt19937_64& rng) {
    chain.validate();
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double p = chain.product();
    std::vector<PhotonEvent> out;
    out.reserve(std::size_t(double(photons.size()) * p) + 16);
    for (const auto& ph : photons)
        if (uni(rng) < p) out.push_back(ph);
    return out;
}

std::vector<ClickRecord> route_hbt(const std::vector<PhotonEvent>& detected,
                                   std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<ClickRecord> out;
    out.reserve(detected.size());
    for (const auto& ph : detected) {
        ClickRecord c;
        c.t = ph.t_abs;
        c.detector = uni(rng) < 0.5 ? 0 : 1;
        c.pulse_index = ph.pulse_index;
        c.shot_index = ph.shot_index;
        out.push_back(c);
    }
    return out;
}

HomResult route_hom(const std::vector<PhotonEvent>& detected, const InterferometerConfig& cfg,
                    const PulseSchedule& schedule, std::uint64_t n_pulses, std::mt19937_64& rng) {
    cfg.validate();
    schedule.validate();
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double delay = double(cfg.delay_periods) * schedule.period_s;

    HomResult res;
    res.clicks.reserve(detected.size());
    auto emit = [&](double t, std::uint32_t pulse, std::uint32_t shot, int det) {
        ClickRecord c;
        c.t = t;
        c.detector = std::uint8_t(det);
        c.pulse_index = pulse;
        c.shot_index = shot;
        res.clicks.push_back(c);
    };

    // photons stay pulse-ordered; walk pulse pairs (2k, 2k+1)
    std::size_t i = 0;
    const std::size_t n = detected.size();
    while (i < n) {
        const PhotonEvent& a = detected[i];
        std::uint64_t pair = a.pulse_index / 2;
        bool a_early = (a.pulse_index % 2) == 0;
        const PhotonEvent* b = nullptr;
        if (i + 1 < n && detected[i + 1].pulse_index / 2 == pair) b = &detected[i + 1];

        if (b == nullptr) {
            if (a_early && std::uint64_t(a.pulse_index) + 1 >= n_pulses) {
                ++res.unpaired_pulses;  // run ended before the partner pulse
                ++i;
                continue;
            }
            // lone photon of its pair: no partner at the splitter, 50/50 port
            double t = a.t_abs + (a_early ? delay : 0.0);
            emit(t, a.pulse_index, a.shot_index, uni(rng) < 0.5 ? 0 : 1);
            ++i;
            continue;
        }

        ++res.pairs_both;
        double t1 = a.t_abs + delay;  // early photon took the long arm
        double t2 = b->t_abs;
        if (cfg.polarization == InterferometerConfig::Pol::perpendicular) {
            emit(t1, a.pulse_index, a.shot_index, uni(rng) < 0.5 ? 0 : 1);
            emit(t2, b->pulse_index, b->shot_index, uni(rng) < 0.5 ? 0 : 1);
        } else {
            double tau = t2 - t1;
            double delta = cfg.sigma_delta > 0.0 ? cfg.sigma_delta * gauss(rng) : 0.0;
            double p_coinc = 0.5 * (1.0 - std::cos(delta * tau));
            if (uni(rng) < p_coinc) {
                int d1 = uni(rng) < 0.5 ? 0 : 1;
                emit(t1, a.pulse_index, a.shot_index, d1);
                emit(t2, b->pulse_index, b->shot_index, 1 - d1);
            } else {
                int d = uni(rng) < 0.5 ? 0 : 1;  // coalesced: both out one port
                emit(t1, a.pulse_index, a.shot_index, d);
                emit(t2, b->pulse_index, b->shot_index, d);
            }
        }
        i += 2;
    }
    return res;
}

std::vector<ClickRecord> dark_counts(const EfficiencyChain& chain, double t_total,
                                     std::mt19937_64& rng) {
    chain.validate();
    std::vector<ClickRecord> out;
    if (chain.dark_rate_hz <= 0.0 || t_total <= 0.0) return out;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int det = 0; det < 2; ++det) {
        std::poisson_distribution<long> pois(chain.dark_rate_hz * t_total);
        long n = pois(rng);
        for (long k = 0; k < n; ++k) {
            ClickRecord c;
            c.t = uni(rng) * t_total;
            c.detector = std::uint8_t(det);
            out.push_back(c);
        }
    }
    return out;
}

std::vector<ClickRecord> repump_scatter(const PulseSchedule& schedule, double t_total,
                                        std::mt19937_64& rng) {
    schedule.validate();
    std::vector<ClickRecord> out;
    if (schedule.repump_scatter_rate_hz <= 0.0 || t_total <= 0.0) return out;
    const double win = schedule.repump_end_s - schedule.repump_start_s;
    const std::uint64_t n_periods = std::uint64_t(t_total / schedule.period_s);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int det = 0; det < 2; ++det) {
        std::poisson_distribution<long> pois(schedule.repump_scatter_rate_hz * win *
                                             double(n_periods));
        long n = pois(rng);
        for (long k = 0; k < n; ++k) {
            std::uint64_t period = std::uint64_t(uni(rng) * double(n_periods));
            double t = double(period) * schedule.period_s + schedule.repump_start_s + uni(rng) * win;
            ClickRecord c;
            c.t = t;
            c.detector = std::uint8_t(det);
            out.push_back(c);
        }
    }
    return out;
}

SynthesisResult synthesize_clicks(const std::vector<PhotonEvent>& photons,
                                  const EfficiencyChain& chain, const PulseSchedule& schedule,
                                  const InterferometerConfig& icfg, double t_total,
                                  std::uint64_t seed) {
    chain.validate();
    schedule.validate();
    icfg.validate();

    SynthesisResult res;
    auto rng = make_rng(seed, 0x9e3779b97f4a7c15ull);
    std::vector<PhotonEvent> detected = apply_chain(photons, chain, rng);
    res.detected_photons = detected.size();

    std::vector<ClickRecord> clicks;
    if (icfg.kind == InterferometerConfig::Kind::hbt) {
        clicks = route_hbt(detected, rng);
    } else {
        HomResult hr = route_hom(detected, icfg, schedule,
                                 std::uint64_t(t_total / schedule.period_s), rng);
        clicks = std::move(hr.clicks);
        res.pairs_both = hr.pairs_both;
        res.unpaired_pulses = hr.unpaired_pulses;
    }

    if (chain.jitter_sigma_s > 0.0) {
        std::normal_distribution<double> gauss(0.0, chain.jitter_sigma_s);
        for (auto& c : clicks) c.t += gauss(rng);
    }

    auto darks = dark_counts(chain, t_total, rng);
    for (auto& c : darks) {
        c.pulse_index = schedule.pulse_of(c.t);
        c.shot_index = c.pulse_index / schedule.pulses_per_shot;
    }
    auto scatter = repump_scatter(schedule, t_total, rng);
    for (auto& c : scatter) {
        c.pulse_index = schedule.pulse_of(c.t);
        c.shot_index = c.pulse_index / schedule.pulses_per_shot;
    }
    clicks.insert(clicks.end(), darks.begin(), darks.end());
    clicks.insert(clicks.end(), scatter.begin(), scatter.end());

    for (auto& c : clicks) {
        c.t = std::round(c.t * 1e12) / 1e12;  // 1 ps grid, matches the file formats
        if (c.t < 0.0) c.t = 0.0;
        if (schedule.in_repump(c.t))
            c.flags |= click_flag_repump;
        else
            c.flags &= std::uint8_t(~click_flag_repump);
    }
    std::sort(clicks.begin(), clicks.end(), [](const ClickRecord& u, const ClickRecord& v) {
        if (u.t != v.t) return u.t < v.t;
        return u.detector < v.detector;
    });
    res.clicks = std::move(clicks);
    return res;
}

}  // namespace cavsim
