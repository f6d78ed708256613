#pragma once

// Distribution-stage model of one SNS twin-field link: linear-optics
// interference of two phase-randomized coherent states at David's 50:50
// splitter, threshold detectors with dark counts, and the resulting
// observed counts.
//
// Cells are (Alice choice, Bob choice, relative phase bin). Both the analytic
// expectation and the sampled counts are computed cell by cell; the parallel
// kernels have serial twins that must agree exactly.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tfqds/bits.hpp"
#include "tfqds/params.hpp"

namespace tfqds {

inline constexpr int kPhaseBins = 256;
inline constexpr std::uint64_t kDeskScaleMaxPulses = 1'000'000'000ULL;

class ResourceLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// X window: vacuum (o) or decoy (v). Z window: send (u) or no_send.
enum class PulseChoice : std::uint8_t { vacuum = 0, decoy = 1, send = 2, no_send = 3 };
inline constexpr std::array<PulseChoice, 4> kPulseChoices = {PulseChoice::vacuum, PulseChoice::decoy,
                                                             PulseChoice::send, PulseChoice::no_send};

enum class Window : std::uint8_t { x, z };

constexpr Window window_of(PulseChoice c) {
    return (c == PulseChoice::send || c == PulseChoice::no_send) ? Window::z : Window::x;
}

double mean_photon_number(PulseChoice c, const SourceParams& source);
double choice_probability(PulseChoice c, const SourceParams& source);

struct PulseCategory {
    PulseChoice intensity_a = PulseChoice::vacuum;
    PulseChoice intensity_b = PulseChoice::vacuum;
    int phase_bin_a = 0;
    int phase_bin_b = 0;

    Window window_a() const { return window_of(intensity_a); }
    Window window_b() const { return window_of(intensity_b); }
};

// Bin-center phase difference in [0, 2pi).
double relative_phase(int phase_bin_a, int phase_bin_b);

// Returns 0 or 1 for the in-phase / anti-phase slice the relative phase falls
// in, or -1 when the pair is not kept for the X basis.
int matched_slice(double relative_phase, int phase_slices);

struct ExclusiveClicks {
    double d1 = 0.0;  // only D1 clicks
    double d2 = 0.0;  // only D2 clicks
    double effective() const { return d1 + d2; }
};

ExclusiveClicks click_probabilities(double mu_a, double mu_b, double relative_phase, double eta,
                                    double visibility, double dark_count_prob);
ExclusiveClicks click_probabilities(const PulseCategory& cat, const ValidatedConfig& cfg);

// Probability that a lone pulse of mean photon number mu produces a one-detector
// heralded event while carrying exactly one photon.
double single_photon_herald_probability(double mu, double eta, double dark_count_prob);

struct LinkObservables {
    double n_oo = 0, n_ov = 0, n_vo = 0, n_ou = 0, n_uo = 0;
    double m_vv = 0;        // wrong clicks in matched X slices
    double n_vv_total = 0;  // all effective vv events in matched slices
    double n_Z = 0;
    double E_Z = 0;
    double n_g = 0;    // 0-1 pairs Bob forms by active pairing
    double n_odd = 0;  // odd-parity pairs under a random two-by-two grouping
    double n_Z_prime = 0;  // pairs surviving Alice's parity check
    double E_Z_prime = 0;
    double duration_s = 0;

    bool operator==(const LinkObservables&) const = default;
};

// Heralded Z-basis events by who actually sent.
struct ZBasisClasses {
    double alice_only = 0;  // Alice u, Bob nothing: both record 1
    double bob_only = 0;    // Alice nothing, Bob u: both record 0
    double both_send = 0;   // Alice 1, Bob 0
    double none_send = 0;   // Alice 0, Bob 1

    double total() const { return alice_only + bob_only + both_send + none_send; }
    double bob_zeros() const { return bob_only + both_send; }
    double bob_ones() const { return alice_only + none_send; }
};

// Per-cell exclusive-click counts (expected or sampled), indexed by cell_index.
struct CellCounts {
    std::vector<double> d1;
    std::vector<double> d2;
};

inline constexpr std::size_t kCellCount = 4 * 4 * kPhaseBins;

constexpr std::size_t cell_index(PulseChoice a, PulseChoice b, int phase_bin) {
    return (static_cast<std::size_t>(a) * 4 + static_cast<std::size_t>(b)) * kPhaseBins +
           static_cast<std::size_t>(phase_bin);
}

// Probability that one pulse pair lands in the cell (choice probabilities times
// 1/B for the relative phase bin).
double cell_probability(PulseChoice a, PulseChoice b, const SourceParams& source);

CellCounts expected_cells(const ValidatedConfig& cfg);
CellCounts expected_cells_serial(const ValidatedConfig& cfg);
CellCounts sample_cells(const ValidatedConfig& cfg, std::uint64_t seed);
CellCounts sample_cells_serial(const ValidatedConfig& cfg, std::uint64_t seed);

// Folds cell counts into the published-style counters (AOPP fields untouched).
LinkObservables tally(const CellCounts& cells, const ValidatedConfig& cfg, ZBasisClasses* classes = nullptr);

struct AoppExpectation {
    double n_g = 0, n_odd = 0, n_Z_prime = 0, E_Z_prime = 0;
};
AoppExpectation expected_aopp(const ZBasisClasses& classes);

LinkObservables expected_observables(const ValidatedConfig& cfg);

enum class Sender : std::uint8_t { alice, bob, both, none };

struct BitTag {
    Sender sender = Sender::none;
    bool single_photon = false;  // exactly one sender, and that pulse held one photon
    bool untagged() const { return single_photon && (sender == Sender::alice || sender == Sender::bob); }
};

struct RawKeyRecord {
    BitString alice_bits;
    BitString bob_bits;
    std::vector<BitTag> tags;  // oracle-only ground truth
};

struct SimulationResult {
    LinkObservables observables;
    std::optional<RawKeyRecord> raw;
};

SimulationResult simulate_link(const ValidatedConfig& cfg, std::uint64_t seed, bool desk_scale);

}  // namespace tfqds
