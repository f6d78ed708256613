#include "tfqds/params.hpp"

#include <cmath>

namespace tfqds {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw ValidationError(message);
}

bool open_unit(double x) { return std::isfinite(x) && x > 0.0 && x < 1.0; }

void check_device(const DeviceParams& d) {
    require(std::isfinite(d.detector_efficiency) && d.detector_efficiency > 0.0 && d.detector_efficiency <= 1.0,
            "device.detector_efficiency must lie in (0, 1]");
    require(std::isfinite(d.dark_count_prob) && d.dark_count_prob >= 0.0 && d.dark_count_prob < 1.0,
            "device.dark_count_prob must lie in [0, 1)");
    require(std::isfinite(d.misalignment) && d.misalignment >= 0.0 && d.misalignment < 0.5,
            "device.misalignment must lie in [0, 0.5)");
    require(d.phase_slices >= 2 && d.phase_slices % 2 == 0, "device.phase_slices must be an even integer >= 2");
    require(std::isfinite(d.fiber_attenuation) && d.fiber_attenuation >= 0.0,
            "device.fiber_attenuation must be >= 0");
    require(std::isfinite(d.clock_rate) && d.clock_rate > 0.0, "device.clock_rate must be > 0");
    require(std::isfinite(d.duty_cycle) && d.duty_cycle > 0.0 && d.duty_cycle <= 1.0,
            "device.duty_cycle must lie in (0, 1]");
}

void check_source(const SourceParams& s, const char* name) {
    const std::string p = std::string(name) + ".";
    require(std::isfinite(s.signal_intensity) && s.signal_intensity > 0.0, p + "signal_intensity must be > 0");
    require(std::isfinite(s.decoy_intensity) && s.decoy_intensity > 0.0, p + "decoy_intensity must be > 0");
    if (s.signal_intensity <= s.decoy_intensity)
        throw DecoyOrderingError(p + "signal_intensity must exceed " + p + "decoy_intensity");
    require(open_unit(s.prob_vacuum), p + "prob_vacuum must lie in (0, 1)");
    require(open_unit(s.prob_decoy), p + "prob_decoy must lie in (0, 1)");
    require(s.prob_vacuum + s.prob_decoy < 1.0, p + "prob_vacuum + " + p + "prob_decoy must be < 1");
    require(open_unit(s.prob_signal_window_send), p + "prob_signal_window_send must lie in (0, 1)");
}

void check_budget(const SecurityBudget& b) {
    require(open_unit(b.epsilon_total), "security.epsilon_total must lie in (0, 1)");
    require(open_unit(b.eps_p), "security.eps_p must lie in (0, 1)");
    require(open_unit(b.eps_aopp), "security.eps_aopp must lie in (0, 1)");
    require(open_unit(b.eps_pe), "security.eps_pe must lie in (0, 1)");
    require(open_unit(b.g), "security.g must lie in (0, 1)");
    require(open_unit(b.eps_cor), "security.eps_cor must lie in (0, 1)");
    require(open_unit(b.eps_prime), "security.eps_prime must lie in (0, 1)");
    require(std::isfinite(b.ec_efficiency) && b.ec_efficiency >= 1.0, "security.ec_efficiency must be >= 1");
}

}  // namespace

double arm_transmittance(const DeviceParams& device, double fiber_length_km) {
    return device.detector_efficiency * std::pow(10.0, -device.fiber_attenuation * (fiber_length_km / 2.0) / 10.0);
}

ValidatedConfig validate(const LinkConfig& config) {
    check_device(config.device);
    check_source(config.source_a, "source_a");
    check_source(config.source_b, "source_b");
    require(config.source_a.total_pulses == config.source_b.total_pulses,
            "source_a.total_pulses and source_b.total_pulses must be equal");
    require(config.source_a == config.source_b, "asymmetric sources are not supported: source_a must equal source_b");
    require(std::isfinite(config.fiber_length_km) && config.fiber_length_km >= 0.0,
            "link.fiber_length_km must be >= 0");
    check_budget(config.budget);

    ValidatedConfig v;
    v.config_ = config;
    v.eta_ = arm_transmittance(config.device, config.fiber_length_km);
    v.p_z_ = config.source_a.prob_z_window();
    v.duration_s_ = static_cast<double>(config.source_a.total_pulses) / config.device.clock_rate;
    v.raw_clock_rate_ = config.device.clock_rate / config.device.duty_cycle;
    return v;
}

LinkConfig table1_config(const SourceParams& source, double fiber_length_km) {
    LinkConfig c;
    c.source_a = source;
    c.source_b = source;
    c.fiber_length_km = fiber_length_km;
    return c;
}

}  // namespace tfqds
