#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cavsim/fountain.hpp"
#include "cavsim/io.hpp"
#include "cavsim/photostream.hpp"
#include "cavsim/system.hpp"

namespace cavsim {

enum class SourceKind { stationary, gated, fountain };

struct PulseConfig {
    enum class Shape { sin2, file } shape = Shape::sin2;
    double p_target = 0.66;
    double duration_s = 350e-9;
    std::size_t n_samples = 351;
    std::string file;  // shape=file, resolved relative to the config file
    double band_limit_hz = 0.0;  // 0 = no band limit
};

enum class DephasingMode { automatic, none };  // automatic = sqrt(2)/T

struct InterferometerScenario {
    InterferometerConfig::Kind kind = InterferometerConfig::Kind::hbt;
    double coherence_time_s = 300e-9;
    std::size_t delay_periods = 1;
    DephasingMode dephasing = DephasingMode::automatic;
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::size_t n_shots = 100;       // fountain launches, or gated dwell cycles
    std::size_t n_pulses = 200000;   // stationary only
    double window_start_s = 25e-3;   // fountain: recorded slice of each launch
    double window_end_s = 55e-3;
    FileFormat format = FileFormat::text;
    std::string out_dir = ".";
};

struct AnalysisConfig {
    // quarter-period bins keep each pulse peak (half a period wide at most)
    // inside the bins nearest its lag, away from bin-edge ties
    double g2_bin_s = 0.25e-6;
    double g2_span_s = 500e-6;
    double select_bin_s = 100e-6;
    std::vector<int> select_thresholds = {3, 5, 7};
    std::size_t shape_bins = 64;
    std::size_t emission_k = 16;
    double envelope_fit_min_s = 4e-6;
    double envelope_fit_max_s = 450e-6;
    double hom_bin_s = 20e-9;
};

struct ScenarioConfig {
    LambdaSystemParams system;  // kappa filled from [cavity] unless set directly
    CavityDerived cavity;
    PulseConfig pulse;
    SourceKind source = SourceKind::stationary;
    double dwell_s = 100e-6;  // gated
    double gap_s = 400e-6;
    LaunchConfig launch;
    ModeGeometry mode;
    EfficiencyChain chain;
    PulseSchedule schedule;
    InterferometerScenario interferometer;
    RunConfig run;
    AnalysisConfig analysis;
    std::uint64_t hash = 0;  // FNV-1a over the canonical key=value list

    // pulses per recorded shot; also the dark/scatter labeling stride
    std::size_t pulses_per_shot() const;
    void validate() const;
};

struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<FileFormat> format;
    std::optional<std::string> out_dir;
};

// Strict INI: unknown sections or keys are errors, as are duplicate keys.
// '#' or ';' start a comment line.
ScenarioConfig load_scenario(const std::string& path, const ConfigOverrides& ov = {});

std::uint64_t fnv1a64(const std::string& s);

}  // namespace cavsim
