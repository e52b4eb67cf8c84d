#include "cavsim/pulse.hpp"

#include <cmath>

namespace cavsim {

double PulseEnvelope::value_at(double t) const {
    if (samples.empty()) return 0.0;
    double x = (t - t0) / dt;
    if (x <= 0.0) return (x == 0.0) ? samples.front() : 0.0;
    auto n = samples.size();
    if (x >= double(n - 1)) return (x == double(n - 1)) ? samples.back() : 0.0;
    auto i = static_cast<std::size_t>(x);
    double f = x - double(i);
    return samples[i] * (1.0 - f) + samples[i + 1] * f;
}

double PulseEnvelope::max_abs() const {
    double m = 0.0;
    for (double s : samples) m = std::max(m, std::fabs(s));
    return m;
}

double PulseEnvelope::integral_sq() const {
    if (samples.size() < 2) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i)
        acc += 0.5 * (samples[i] * samples[i] + samples[i + 1] * samples[i + 1]);
    return acc * dt;
}

void PulseEnvelope::validate() const {
    if (samples.size() < 2) throw ConfigError("pulse: need at least 2 samples");
    if (!(dt > 0.0)) throw ConfigError("pulse: sample spacing must be > 0");
    for (double s : samples)
        if (!std::isfinite(s)) throw ConfigError("pulse: non-finite sample");
}

}  // namespace cavsim
