#include "cavsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cavsim/units.hpp"

namespace cavsim {

namespace {

struct KeyValue {
    std::string section, key, value;
    int line = 0;
};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<KeyValue> parse_ini(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path);
    std::vector<KeyValue> out;
    std::string line, section;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed section");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw ConfigError(path + ":" + std::to_string(lineno) + ": empty section name");
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": key outside any section");
        KeyValue kv;
        kv.section = section;
        kv.key = trim(t.substr(0, eq));
        kv.value = trim(t.substr(eq + 1));
        kv.line = lineno;
        if (kv.key.empty() || kv.value.empty())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key or value");
        for (const auto& prev : out)
            if (prev.section == kv.section && prev.key == kv.key)
                throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key " +
                                  kv.section + "." + kv.key);
        out.push_back(kv);
    }
    return out;
}

double to_double(const KeyValue& kv) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(kv.value, &pos);
    } catch (const std::exception&) {
        throw ConfigError(kv.section + "." + kv.key + ": not a number: " + kv.value);
    }
    if (pos != kv.value.size())
        throw ConfigError(kv.section + "." + kv.key + ": trailing junk: " + kv.value);
    return v;
}

std::uint64_t to_u64(const KeyValue& kv) {
    std::size_t pos = 0;
    unsigned long long v;
    try {
        v = std::stoull(kv.value, &pos);
    } catch (const std::exception&) {
        throw ConfigError(kv.section + "." + kv.key + ": not an integer: " + kv.value);
    }
    if (pos != kv.value.size())
        throw ConfigError(kv.section + "." + kv.key + ": trailing junk: " + kv.value);
    return v;
}

bool to_bool(const KeyValue& kv) {
    if (kv.value == "true" || kv.value == "yes" || kv.value == "1") return true;
    if (kv.value == "false" || kv.value == "no" || kv.value == "0") return false;
    throw ConfigError(kv.section + "." + kv.key + ": not a boolean: " + kv.value);
}

std::vector<int> to_int_list(const KeyValue& kv) {
    std::istringstream s(kv.value);
    std::vector<int> out;
    int v;
    while (s >> v) {
        if (v < 0) throw ConfigError(kv.section + "." + kv.key + ": negative entry");
        out.push_back(v);
    }
    if (!s.eof() || out.empty())
        throw ConfigError(kv.section + "." + kv.key + ": expected a list of integers");
    return out;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::size_t ScenarioConfig::pulses_per_shot() const {
    switch (source) {
        case SourceKind::gated:
            return std::size_t(std::llround((dwell_s + gap_s) / schedule.period_s));
        case SourceKind::fountain:
            return std::size_t(
                std::llround((run.window_end_s - run.window_start_s) / schedule.period_s));
        case SourceKind::stationary:
        default:
            return run.n_pulses;
    }
}

void ScenarioConfig::validate() const {
    system.validate();
    schedule.validate();
    chain.validate();
    if (pulse.p_target <= 0 || pulse.p_target > 1)
        throw ConfigError("pulse.p_target must be in (0, 1]");
    if (pulse.duration_s <= 0) throw ConfigError("pulse.duration must be positive");
    if (pulse.n_samples < 16) throw ConfigError("pulse.n_samples must be at least 16");
    if (pulse.shape == PulseConfig::Shape::file && pulse.file.empty())
        throw ConfigError("pulse.shape = file requires pulse.file");
    if (pulse.band_limit_hz < 0) throw ConfigError("pulse.band_limit must be >= 0");
    if (run.n_shots < 1) throw ConfigError("run.n_shots must be at least 1");
    switch (source) {
        case SourceKind::gated:
            if (dwell_s <= 0 || gap_s < 0)
                throw ConfigError("gated source needs dwell > 0 and gap >= 0");
            break;
        case SourceKind::fountain:
            launch.validate();
            mode.validate();
            if (run.window_start_s < 0 || run.window_end_s <= run.window_start_s)
                throw ConfigError("fountain run needs 0 <= window_start < window_end");
            break;
        case SourceKind::stationary:
            if (run.n_pulses < 1) throw ConfigError("run.n_pulses must be at least 1");
            break;
    }
    if (pulses_per_shot() < 1) throw ConfigError("shot shorter than one pulse period");
    if (interferometer.coherence_time_s <= 0)
        throw ConfigError("interferometer.coherence_time must be positive");
    if (interferometer.delay_periods < 1)
        throw ConfigError("interferometer.delay_periods must be at least 1");
    const auto& a = analysis;
    if (a.g2_bin_s <= 0 || a.g2_span_s < a.g2_bin_s)
        throw ConfigError("analysis g2 binning invalid");
    if (a.select_bin_s <= 0) throw ConfigError("analysis.select_bin must be positive");
    if (a.select_thresholds.empty()) throw ConfigError("analysis.select_thresholds empty");
    if (a.shape_bins < 2) throw ConfigError("analysis.shape_bins must be at least 2");
    if (a.emission_k < 5) throw ConfigError("analysis.emission_k must be at least 5");
    if (a.envelope_fit_min_s < 0 || a.envelope_fit_max_s <= a.envelope_fit_min_s)
        throw ConfigError("analysis envelope fit range invalid");
    if (a.hom_bin_s <= 0) throw ConfigError("analysis.hom_bin must be positive");
}

ScenarioConfig load_scenario(const std::string& path, const ConfigOverrides& ov) {
    auto kvs = parse_ini(path);

    // CLI overrides participate in the config hash so an output file always
    // names the effective configuration.
    auto set_or_add = [&kvs](const std::string& sec, const std::string& key,
                             const std::string& value) {
        for (auto& kv : kvs)
            if (kv.section == sec && kv.key == key) {
                kv.value = value;
                return;
            }
        kvs.push_back({sec, key, value, 0});
    };
    if (ov.seed) set_or_add("run", "seed", std::to_string(*ov.seed));
    if (ov.format)
        set_or_add("run", "format", *ov.format == FileFormat::binary ? "binary" : "text");

    ScenarioConfig c;
    c.system.g0 = mhz_2pi(12.0);
    c.system.gamma = mhz_2pi(3.0);
    double kappa_mhz = 0.0;  // 0 = derive from the cavity section
    double length_um = 74.0, t1_ppm = 40.0, t2_ppm = 4.0, loss_ppm = 16.5, finesse = 0.0;
    double drive_start_ns = 0.0;

    for (const auto& kv : kvs) {
        const std::string& s = kv.section;
        const std::string& k = kv.key;
        if (s == "system") {
            if (k == "g0_mhz") c.system.g0 = mhz_2pi(to_double(kv));
            else if (k == "gamma_mhz") c.system.gamma = mhz_2pi(to_double(kv));
            else if (k == "kappa_mhz") kappa_mhz = to_double(kv);
            else if (k == "delta_l_mhz") c.system.delta_l = mhz_2pi(to_double(kv));
            else if (k == "delta_c_mhz") c.system.delta_c = mhz_2pi(to_double(kv));
            else throw ConfigError("unknown key " + s + "." + k);
        } else if (s == "cavity") {
            if (k == "length_um") length_um = to_double(kv);
            else if (k == "t1_ppm") t1_ppm = to_double(kv);
            else if (k == "t2_ppm") t2_ppm = to_double(kv);
            else if (k == "loss_ppm") loss_ppm = to_double(kv);
            else if (k == "finesse") finesse = to_double(kv);
            else throw ConfigError("unknown key " + s + "." + k);
        } else if (s == "pulse") {
            if (k == "shape") {
                if (kv.value == "sin2") c.pulse.shape = PulseConfig::Shape::sin2;
                else if (kv.value == "file") c.pulse.shape = PulseConfig::Shape::file;
                else throw ConfigError("pulse.shape must be sin2 or file");
            } else if (k == "p_target") c.pulse.p_target = to_double(kv);
            else if (k == "duration_ns") c.pulse.duration_s = to_double(kv) * 1e-9;
            else if (k == "n_samples") c.pulse.n_samples = std::size_t(to_u64(kv));
            else if (k == "file") c.pulse.file = kv.value;
            else if (k == "band_limit_mhz") c.pulse.band_limit_hz = to_double(kv) * 1e6;
            else throw ConfigError("unknown key " + s + "." + k);
        } else if (s == "source") {
            if (k == "kind") {
                if (kv.value == "stationary") c.source = SourceKind::stationary;
                else if (kv.value == "gated") c.source = SourceKind::gated;
                else if (kv.value == "fountain") c.source = SourceKind::fountain;
                else throw ConfigError("source.kind must be stationary, gated or fountain");
            } else if (k == "dwell_us") c.dwell_s = to_double(kv) * 1e-6;
            else if (k == "gap_us") c.gap_s = to_double(kv) * 1e-6;
            else if (k == "p_repump") c.schedule.p_repump = to_double(kv);
            else throw ConfigError("unknown key " + s + "." + k);
        } else if (s == "launch") {
            if (k == "delta_f_khz") c.launch.delta_f_hz = to_double(kv) * 1e3;
            else if (k == "cloud_sigma_mm") c.launch.cloud_sigma_m = to_double(kv) * 1e-3;
            else if (k == "temperature_uk") c.launch.temperature_k = to_double(kv) * 1e-6;
            else if (k == "atom_flux") c.launch.atom_flux = to_double(kv);
            else throw ConfigError("unknown key " + s + "." + k);
        } else if (s == "mode") {
            if (k == "waist_um") c.mode.waist_m = to_double(kv) * 1e-6;
            else if (k == "standing_wave") c.mode.standing_wave = to_bool(kv);
            else throw ConfigError("unknown key " + s + "." + k);
        } else if (s == "chain") {
            if (k == "eta_out") c.chain.eta_out = to_double(kv);
            else if (k == "eta_collection") c.chain.eta_collection = to_double(kv);
            else if (k == "eta_detector") c.chain.eta_detector = to_double(kv);
            else if (k == "dark_rate_hz") c.chain.dark_rate_hz = to_double(kv);
            else if (k == "jitter_fwhm_ps")
                c.chain.jitter_sigma_s = to_double(kv) * 1e-12 / 2.3548200450309493;
            else throw ConfigError("unknown key " + s + "." + k);
        } else if (s == "schedule") {
            if (k == "period_ns") c.schedule.period_s = to_double(kv) * 1e-9;
            else if (k == "drive_start_ns") drive_start_ns = to_double(kv);
            else if (k == "repump_start_ns") c.schedule.repump_start_s = to_double(kv) * 1e-9;
            else if (k == "repump_end_ns") c.schedule.repump_end_s = to_double(kv) * 1e-9;
            else if (k == "repump_scatter_hz") c.schedule.repump_scatter_rate_hz = to_double(kv);
            else throw ConfigError("unknown key " + s + "." + k);
        } else if (s == "interferometer") {
            if (k == "kind") {
                if (kv.value == "hbt") c.interferometer.kind = InterferometerConfig::Kind::hbt;
                else if (kv.value == "hom") c.interferometer.kind = InterferometerConfig::Kind::hom;
                else throw ConfigError("interferometer.kind must be hbt or hom");
            } else if (k == "coherence_time_ns")
                c.interferometer.coherence_time_s = to_double(kv) * 1e-9;
            else if (k == "delay_periods")
                c.interferometer.delay_periods = std::size_t(to_u64(kv));
            else if (k == "dephasing") {
                if (kv.value == "auto") c.interferometer.dephasing = DephasingMode::automatic;
                else if (kv.value == "none") c.interferometer.dephasing = DephasingMode::none;
                else throw ConfigError("interferometer.dephasing must be auto or none");
            } else throw ConfigError("unknown key " + s + "." + k);
        } else if (s == "run") {
            if (k == "seed") c.run.seed = to_u64(kv);
            else if (k == "n_shots") c.run.n_shots = std::size_t(to_u64(kv));
            else if (k == "n_pulses") c.run.n_pulses = std::size_t(to_u64(kv));
            else if (k == "window_start_ms") c.run.window_start_s = to_double(kv) * 1e-3;
            else if (k == "window_end_ms") c.run.window_end_s = to_double(kv) * 1e-3;
            else if (k == "format") c.run.format = parse_file_format(kv.value);
            else throw ConfigError("unknown key " + s + "." + k);
        } else if (s == "analysis") {
            if (k == "g2_bin_us") c.analysis.g2_bin_s = to_double(kv) * 1e-6;
            else if (k == "g2_span_us") c.analysis.g2_span_s = to_double(kv) * 1e-6;
            else if (k == "select_bin_us") c.analysis.select_bin_s = to_double(kv) * 1e-6;
            else if (k == "select_thresholds") c.analysis.select_thresholds = to_int_list(kv);
            else if (k == "shape_bins") c.analysis.shape_bins = std::size_t(to_u64(kv));
            else if (k == "emission_k") c.analysis.emission_k = std::size_t(to_u64(kv));
            else if (k == "envelope_fit_min_us")
                c.analysis.envelope_fit_min_s = to_double(kv) * 1e-6;
            else if (k == "envelope_fit_max_us")
                c.analysis.envelope_fit_max_s = to_double(kv) * 1e-6;
            else if (k == "hom_bin_ns") c.analysis.hom_bin_s = to_double(kv) * 1e-9;
            else throw ConfigError("unknown key " + s + "." + k);
        } else {
            throw ConfigError("unknown section [" + s + "]");
        }
    }

    if (finesse > 0)
        c.cavity = derive_cavity_from_finesse(length_um * 1e-6, finesse);
    else
        c.cavity = derive_cavity_from_mirrors(length_um * 1e-6, t1_ppm, t2_ppm, loss_ppm);
    c.system.kappa = kappa_mhz > 0 ? mhz_2pi(kappa_mhz) : c.cavity.kappa;

    c.schedule.drive_start_s = drive_start_ns * 1e-9;
    c.schedule.drive_end_s = c.schedule.drive_start_s + c.pulse.duration_s;
    c.schedule.pulses_per_shot = std::uint32_t(c.pulses_per_shot());

    if (!c.pulse.file.empty()) {
        std::filesystem::path p(c.pulse.file);
        if (p.is_relative())
            p = std::filesystem::path(path).parent_path() / p;
        c.pulse.file = p.string();
    }
    if (ov.out_dir) c.run.out_dir = *ov.out_dir;

    std::sort(kvs.begin(), kvs.end(), [](const KeyValue& a, const KeyValue& b) {
        return a.section != b.section ? a.section < b.section : a.key < b.key;
    });
    std::string canonical;
    for (const auto& kv : kvs) canonical += kv.section + "." + kv.key + "=" + kv.value + "\n";
    c.hash = fnv1a64(canonical);

    c.validate();
    return c;
}

}  // namespace cavsim
