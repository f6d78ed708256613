#pragma once

// Event-driven run of the four-party protocol at desk scale: two SNS links
// measured window by window through one David node, AOPP, error test,
// estimation, signature length selection, key exchange, signing, forwarding
// and both verifications, with optional adversarial interception.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfqds/channel.hpp"
#include "tfqds/estimation.hpp"
#include "tfqds/params.hpp"
#include "tfqds/security.hpp"

namespace tfqds {

class FabricError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Attack { none, tamper_message, tamper_signature, repudiate, forge_without_keys };

const char* to_string(Attack attack);
Attack attack_from_string(const std::string& name);

struct Scenario {
    LinkConfig link_ab;
    LinkConfig link_ac;
    Scheme scheme = Scheme::multi_bit;
    BitString message;
    std::uint64_t desk_scale_N = 100'000'000ULL;
    Attack attack = Attack::none;
    std::uint64_t seed = 1;
    double error_test_fraction = 0.01;
};

SecurityBudget desk_budget();
SourceParams desk_source(std::uint64_t total_pulses = 100'000'000ULL);
// Reference device, 50 km links, desk source and budget, a 1-bit (single) or
// 256-bit (multi) message drawn from the seed.
Scenario desk_scenario(Scheme scheme, std::uint64_t seed);

// Checks the scenario (both links validate, N within desk limits, message
// non-empty). Throws ValidationError or ResourceLimitError.
void validate_scenario(const Scenario& scenario);

// Returns a copy whose fabric intercepts the attack's edge. Only one attack
// per scenario.
Scenario inject_attack(const Scenario& scenario, Attack attack);

// ---------------------------------------------------------------- David

// What leaves a source in one window. No basis or intensity labels.
struct OpticalPulse {
    float mean_photon_number = 0.0f;
    std::uint8_t phase_bin = 0;
};

struct DavidOptics {
    double eta = 0.0;
    double visibility = 1.0;
    double dark_count_prob = 0.0;
};

DavidOptics david_optics(const ValidatedConfig& cfg);

enum class Announcement : std::uint8_t { none = 0, d1 = 1, d2 = 2 };

// One announcement per window. Window w's click uses randomness keyed on
// (seed, first_window + w), so any batching or schedule gives the same result.
std::vector<Announcement> david_measure(std::span<const OpticalPulse> batch_a, std::span<const OpticalPulse> batch_b,
                                        const DavidOptics& optics, std::uint64_t seed, std::uint64_t first_window);
// Same, writing into a caller-owned buffer.
void david_measure(std::span<const OpticalPulse> batch_a, std::span<const OpticalPulse> batch_b,
                   const DavidOptics& optics, std::uint64_t seed, std::uint64_t first_window,
                   std::vector<Announcement>& out);
std::vector<Announcement> david_measure_serial(std::span<const OpticalPulse> batch_a,
                                               std::span<const OpticalPulse> batch_b, const DavidOptics& optics,
                                               std::uint64_t seed, std::uint64_t first_window);

// A source's private labels for a batch of windows and the pulses it emits.
struct SourceBatch {
    std::vector<PulseChoice> choices;
    std::vector<std::uint8_t> phase_bins;
    std::vector<OpticalPulse> pulses;
};

SourceBatch emit_pulses(const SourceParams& source, std::uint64_t seed, std::uint64_t first_window,
                        std::size_t count);
void emit_pulses(const SourceParams& source, std::uint64_t seed, std::uint64_t first_window, std::size_t count,
                 SourceBatch& into);

// ---------------------------------------------------------------- transcript

enum class ChannelType { optical, quantum_announcement, authenticated_classical };
const char* to_string(ChannelType channel);

struct TranscriptEvent {
    std::uint64_t seq = 0;
    std::string sender;
    std::string receiver;
    ChannelType channel = ChannelType::authenticated_classical;
    std::string type;
    std::uint64_t digest = 0;
    std::uint64_t size_bits = 0;
    bool key_material = false;
    std::string note;
};

struct VerdictRecord {
    std::string verifier;
    bool accept = false;
    std::string reason;
    std::array<std::size_t, 2> mismatches{};
};

struct LinkReport {
    std::string link;
    LinkObservables observables;
    PreAoppEstimates pre;
    std::optional<PoolStats> pool;
    std::uint64_t error_test_sample = 0;
    std::uint64_t error_test_errors = 0;
    std::uint64_t pool_bits = 0;  // usable bits after the error test
};

struct Transcript {
    std::vector<TranscriptEvent> events;
    std::vector<VerdictRecord> verdicts;
    std::vector<LinkReport> links;
    std::optional<SecurityReport> security;
    bool aborted = false;
    std::string abort_reason;

    const VerdictRecord* verdict(const std::string& verifier) const;
};

// Protocol-rule audit: key material only on authenticated classical edges of
// the defined message types. Returns the violations found.
std::vector<std::string> audit_transcript(const Transcript& transcript);

// ---------------------------------------------------------------- protocol

// Everything the distribution stage leaves behind for one link.
struct LinkDistribution {
    std::string link;
    LinkObservables observables;  // AOPP fields from the bitwise run
    BitString signer_bits;        // Alice, after AOPP and the error test
    BitString verifier_bits;      // Bob or Charlie, uncorrected
    std::uint64_t error_test_sample = 0;
    std::uint64_t error_test_errors = 0;
};

struct Distribution {
    std::array<LinkDistribution, 2> links;  // AB, AC
    std::vector<TranscriptEvent> events;
};

// Quantum stage, sifting, AOPP and the error test for both links. Depends on
// the links, N, the error-test fraction and the seed only.
Distribution run_distribution(const Scenario& scenario);

// Estimation and messaging on top of a finished distribution stage.
Transcript run_protocol(const Scenario& scenario, const Distribution& distribution);
Transcript run_protocol(const Scenario& scenario);

}  // namespace tfqds
