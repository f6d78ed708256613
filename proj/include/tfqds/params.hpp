#pragma once

// Device, source, channel and security configuration for one TF key
// generation link, plus the validated form every other module consumes.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tfqds {

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when the signal intensity does not exceed the decoy intensity.
class DecoyOrderingError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

struct DeviceParams {
    double detector_efficiency = 0.69;
    double dark_count_prob = 8e-11;  // per pulse, per detector
    double misalignment = 0.018;
    int phase_slices = 16;
    double fiber_attenuation = 0.19;  // dB/km
    double clock_rate = 1e9;          // effective quantum-pulse rate (Hz)
    double duty_cycle = 0.8;

    bool operator==(const DeviceParams&) const = default;
};

struct SourceParams {
    double signal_intensity = 0.418;
    double decoy_intensity = 0.0264;
    double prob_vacuum = 0.0093;
    double prob_decoy = 0.0197;
    double prob_signal_window_send = 0.28;
    std::uint64_t total_pulses = 100'000'000'000'000ULL;

    double prob_z_window() const { return 1.0 - prob_vacuum - prob_decoy; }

    bool operator==(const SourceParams&) const = default;
};

struct SecurityBudget {
    double epsilon_total = 1e-10;
    double eps_p = 1e-12;
    double eps_aopp = 1e-12;
    double eps_pe = 1e-12;
    double g = 1e-12;
    double eps_cor = 1e-12;
    double eps_prime = 1e-12;
    double ec_efficiency = 1.1;

    bool operator==(const SecurityBudget&) const = default;
};

struct LinkConfig {
    DeviceParams device;
    SourceParams source_a;
    SourceParams source_b;
    double fiber_length_km = 302.0;  // total Alice-Bob fiber, split evenly over two arms
    SecurityBudget budget;

    bool operator==(const LinkConfig&) const = default;
};

// A LinkConfig that passed validation, with derived quantities attached.
class ValidatedConfig {
public:
    const LinkConfig& config() const { return config_; }
    const DeviceParams& device() const { return config_.device; }
    const SourceParams& source() const { return config_.source_a; }
    const SecurityBudget& budget() const { return config_.budget; }

    // Per-arm transmittance including detector efficiency.
    double eta() const { return eta_; }
    double p_z() const { return p_z_; }
    double duration_s() const { return duration_s_; }
    // Line clock before the reference-pulse duty cycle is taken out.
    double raw_clock_rate() const { return raw_clock_rate_; }

    bool operator==(const ValidatedConfig&) const = default;

private:
    friend ValidatedConfig validate(const LinkConfig&);
    LinkConfig config_;
    double eta_ = 0.0;
    double p_z_ = 0.0;
    double duration_s_ = 0.0;
    double raw_clock_rate_ = 0.0;
};

ValidatedConfig validate(const LinkConfig& config);
inline ValidatedConfig validate(const ValidatedConfig& config) { return validate(config.config()); }

// Per-arm transmittance eta_d * 10^(-alpha * (length/2) / 10).
double arm_transmittance(const DeviceParams& device, double fiber_length_km);

// Reference device with the given source parameters.
LinkConfig table1_config(const SourceParams& source, double fiber_length_km);

}  // namespace tfqds
