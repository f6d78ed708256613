#include "tfqds/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "tfqds/rng.hpp"

namespace tfqds {

double mean_photon_number(PulseChoice c, const SourceParams& s) {
    switch (c) {
        case PulseChoice::decoy: return s.decoy_intensity;
        case PulseChoice::send: return s.signal_intensity;
        case PulseChoice::vacuum:
        case PulseChoice::no_send: return 0.0;
    }
    return 0.0;
}

double choice_probability(PulseChoice c, const SourceParams& s) {
    switch (c) {
        case PulseChoice::vacuum: return s.prob_vacuum;
        case PulseChoice::decoy: return s.prob_decoy;
        case PulseChoice::send: return s.prob_z_window() * s.prob_signal_window_send;
        case PulseChoice::no_send: return s.prob_z_window() * (1.0 - s.prob_signal_window_send);
    }
    return 0.0;
}

double relative_phase(int phase_bin_a, int phase_bin_b) {
    const int d = ((phase_bin_a - phase_bin_b) % kPhaseBins + kPhaseBins) % kPhaseBins;
    return (d + 0.5) * 2.0 * std::numbers::pi / kPhaseBins;
}

int matched_slice(double phase, int phase_slices) {
    const double half_width = std::numbers::pi / phase_slices;
    for (int k = 0; k < 2; ++k) {
        // distance to k*pi on the circle, in (-pi, pi]
        double x = std::remainder(phase - k * std::numbers::pi, 2.0 * std::numbers::pi);
        if (std::abs(x) <= half_width) return k;
    }
    return -1;
}

ExclusiveClicks click_probabilities(double mu_a, double mu_b, double phase, double eta, double visibility,
                                    double dark) {
    const double mean = 0.5 * eta * (mu_a + mu_b);
    const double cross = eta * std::sqrt(mu_a * mu_b) * visibility * std::cos(phase);
    const double mu1 = std::max(0.0, mean + cross);
    const double mu2 = std::max(0.0, mean - cross);
    const double no_click1 = (1.0 - dark) * std::exp(-mu1);
    const double no_click2 = (1.0 - dark) * std::exp(-mu2);
    return {(1.0 - no_click1) * no_click2, (1.0 - no_click2) * no_click1};
}

ExclusiveClicks click_probabilities(const PulseCategory& cat, const ValidatedConfig& cfg) {
    const auto& s = cfg.source();
    const auto& d = cfg.device();
    return click_probabilities(mean_photon_number(cat.intensity_a, s), mean_photon_number(cat.intensity_b, s),
                               relative_phase(cat.phase_bin_a, cat.phase_bin_b), cfg.eta(),
                               1.0 - 2.0 * d.misalignment, d.dark_count_prob);
}

double single_photon_herald_probability(double mu, double eta, double dark) {
    const double one_photon = mu * std::exp(-mu);
    const double exclusive = 2.0 * (1.0 - dark) * ((1.0 - 0.5 * eta) - (1.0 - dark) * (1.0 - eta));
    return one_photon * exclusive;
}

double cell_probability(PulseChoice a, PulseChoice b, const SourceParams& source) {
    return choice_probability(a, source) * choice_probability(b, source) / kPhaseBins;
}

namespace {

struct CellSpec {
    PulseChoice a, b;
    int bin;
};

CellSpec cell_spec(std::size_t index) {
    const int bin = static_cast<int>(index % kPhaseBins);
    const std::size_t pair = index / kPhaseBins;
    return {static_cast<PulseChoice>(pair / 4), static_cast<PulseChoice>(pair % 4), bin};
}

ExclusiveClicks cell_clicks(std::size_t index, const ValidatedConfig& cfg) {
    const CellSpec c = cell_spec(index);
    return click_probabilities(PulseCategory{c.a, c.b, c.bin, 0}, cfg);
}

void expected_cell(std::size_t i, const ValidatedConfig& cfg, double n, CellCounts& out) {
    const CellSpec c = cell_spec(i);
    const double weight = n * cell_probability(c.a, c.b, cfg.source());
    const ExclusiveClicks p = cell_clicks(i, cfg);
    out.d1[i] = weight * p.d1;
    out.d2[i] = weight * p.d2;
}

void sample_cell(std::size_t i, const ValidatedConfig& cfg, std::uint64_t seed, CellCounts& out) {
    const CellSpec c = cell_spec(i);
    const auto n = static_cast<std::int64_t>(cfg.source().total_pulses);
    const ExclusiveClicks p = cell_clicks(i, cfg);
    const double p_eff = std::clamp(cell_probability(c.a, c.b, cfg.source()) * p.effective(), 0.0, 1.0);
    Rng rng = substream(seed, i);
    std::int64_t effective = 0;
    if (n > 0 && p_eff > 0.0) effective = std::binomial_distribution<std::int64_t>(n, p_eff)(rng);
    std::int64_t d1 = 0;
    if (effective > 0) d1 = std::binomial_distribution<std::int64_t>(effective, p.d1 / p.effective())(rng);
    out.d1[i] = static_cast<double>(d1);
    out.d2[i] = static_cast<double>(effective - d1);
}

CellCounts empty_cells() { return {std::vector<double>(kCellCount, 0.0), std::vector<double>(kCellCount, 0.0)}; }

}  // namespace

CellCounts expected_cells(const ValidatedConfig& cfg) {
    CellCounts out = empty_cells();
    const double n = static_cast<double>(cfg.source().total_pulses);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < kCellCount; ++i) expected_cell(i, cfg, n, out);
    return out;
}

CellCounts expected_cells_serial(const ValidatedConfig& cfg) {
    CellCounts out = empty_cells();
    const double n = static_cast<double>(cfg.source().total_pulses);
    for (std::size_t i = 0; i < kCellCount; ++i) expected_cell(i, cfg, n, out);
    return out;
}

CellCounts sample_cells(const ValidatedConfig& cfg, std::uint64_t seed) {
    CellCounts out = empty_cells();
#pragma omp parallel for schedule(dynamic, 64)
    for (std::size_t i = 0; i < kCellCount; ++i) sample_cell(i, cfg, seed, out);
    return out;
}

CellCounts sample_cells_serial(const ValidatedConfig& cfg, std::uint64_t seed) {
    CellCounts out = empty_cells();
    for (std::size_t i = 0; i < kCellCount; ++i) sample_cell(i, cfg, seed, out);
    return out;
}

LinkObservables tally(const CellCounts& cells, const ValidatedConfig& cfg, ZBasisClasses* classes) {
    using enum PulseChoice;
    LinkObservables obs;
    ZBasisClasses z;
    const int slices = cfg.device().phase_slices;
    for (std::size_t i = 0; i < kCellCount; ++i) {
        const CellSpec c = cell_spec(i);
        const double d1 = cells.d1[i];
        const double d2 = cells.d2[i];
        const double eff = d1 + d2;
        if (c.a == vacuum && c.b == vacuum) obs.n_oo += eff;
        else if (c.a == vacuum && c.b == decoy) obs.n_ov += eff;
        else if (c.a == decoy && c.b == vacuum) obs.n_vo += eff;
        else if (c.a == vacuum && c.b == send) obs.n_ou += eff;
        else if (c.a == send && c.b == vacuum) obs.n_uo += eff;
        else if (c.a == decoy && c.b == decoy) {
            const int k = matched_slice(relative_phase(c.bin, 0), slices);
            if (k >= 0) {
                obs.n_vv_total += eff;
                obs.m_vv += (k == 0) ? d2 : d1;
            }
        } else if (c.a == send && c.b == no_send) z.alice_only += eff;
        else if (c.a == no_send && c.b == send) z.bob_only += eff;
        else if (c.a == send && c.b == send) z.both_send += eff;
        else if (c.a == no_send && c.b == no_send) z.none_send += eff;
    }
    obs.n_Z = z.total();
    obs.E_Z = obs.n_Z > 0 ? (z.both_send + z.none_send) / obs.n_Z : 0.0;
    obs.duration_s = cfg.duration_s();
    if (classes) *classes = z;
    return obs;
}

AoppExpectation expected_aopp(const ZBasisClasses& z) {
    AoppExpectation out;
    const double zeros = z.bob_zeros();
    const double ones = z.bob_ones();
    const double n = z.total();
    if (zeros <= 0.0 || ones <= 0.0) return out;
    out.n_g = std::min(zeros, ones);
    // mean odd pairs in a uniformly random perfect matching of n bits
    out.n_odd = n > 1.0 ? zeros * ones / (n - 1.0) : 0.0;
    const double keep = z.alice_only * z.bob_only + z.both_send * z.none_send;
    out.n_Z_prime = out.n_g * keep / (zeros * ones);
    out.E_Z_prime = keep > 0.0 ? z.both_send * z.none_send / keep : 0.0;
    return out;
}

LinkObservables expected_observables(const ValidatedConfig& cfg) {
    ZBasisClasses z;
    LinkObservables obs = tally(expected_cells(cfg), cfg, &z);
    const AoppExpectation a = expected_aopp(z);
    obs.n_g = a.n_g;
    obs.n_odd = a.n_odd;
    obs.n_Z_prime = a.n_Z_prime;
    obs.E_Z_prime = a.E_Z_prime;
    return obs;
}

namespace {

std::int64_t draw_binomial(std::int64_t n, double p, Rng& rng) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    return std::binomial_distribution<std::int64_t>(n, p)(rng);
}

void sample_aopp(const ZBasisClasses& z, Rng& rng, LinkObservables& obs) {
    const auto zeros = static_cast<std::int64_t>(z.bob_zeros());
    const auto ones = static_cast<std::int64_t>(z.bob_ones());
    const auto n = zeros + ones;
    if (zeros == 0 || ones == 0) return;
    const std::int64_t pairs = std::min(zeros, ones);
    const double p_odd = 2.0 * static_cast<double>(zeros) * static_cast<double>(ones) /
                         (static_cast<double>(n) * static_cast<double>(n - 1));
    const std::int64_t odd = std::min(pairs, draw_binomial(n / 2, p_odd, rng));
    const double keep = z.alice_only * z.bob_only + z.both_send * z.none_send;
    const std::int64_t survivors =
        draw_binomial(pairs, keep / (static_cast<double>(zeros) * static_cast<double>(ones)), rng);
    const std::int64_t errors = draw_binomial(survivors, keep > 0.0 ? z.both_send * z.none_send / keep : 0.0, rng);
    obs.n_g = static_cast<double>(pairs);
    obs.n_odd = static_cast<double>(odd);
    obs.n_Z_prime = static_cast<double>(survivors);
    obs.E_Z_prime = survivors > 0 ? static_cast<double>(errors) / static_cast<double>(survivors) : 0.0;
}

RawKeyRecord materialize(const ZBasisClasses& z, const ValidatedConfig& cfg, Rng& rng) {
    const auto& s = cfg.source();
    const double u = s.signal_intensity;
    const double q_lone = click_probabilities(u, 0.0, 0.0, cfg.eta(), 1.0, cfg.device().dark_count_prob).effective();
    const double single_fraction =
        q_lone > 0.0 ? single_photon_herald_probability(u, cfg.eta(), cfg.device().dark_count_prob) / q_lone : 0.0;

    RawKeyRecord raw;
    const auto total = static_cast<std::size_t>(z.total());
    raw.alice_bits.reserve(total);
    raw.bob_bits.reserve(total);
    raw.tags.reserve(total);
    auto emit = [&](double count, std::uint8_t a, std::uint8_t b, Sender who, double p_single) {
        const auto n = static_cast<std::int64_t>(count);
        const std::int64_t singles = draw_binomial(n, p_single, rng);
        for (std::int64_t i = 0; i < n; ++i) {
            raw.alice_bits.push_back(a);
            raw.bob_bits.push_back(b);
            raw.tags.push_back({who, i < singles});
        }
    };
    emit(z.alice_only, 1, 1, Sender::alice, single_fraction);
    emit(z.bob_only, 0, 0, Sender::bob, single_fraction);
    emit(z.both_send, 1, 0, Sender::both, 0.0);
    emit(z.none_send, 0, 1, Sender::none, 0.0);

    // Fisher-Yates with our own index draws so the order is portable.
    for (std::size_t i = total; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(raw.alice_bits[i - 1], raw.alice_bits[j]);
        std::swap(raw.bob_bits[i - 1], raw.bob_bits[j]);
        std::swap(raw.tags[i - 1], raw.tags[j]);
    }
    return raw;
}

}  // namespace

SimulationResult simulate_link(const ValidatedConfig& cfg, std::uint64_t seed, bool desk_scale) {
    if (desk_scale && cfg.source().total_pulses > kDeskScaleMaxPulses)
        throw ResourceLimitError("desk-scale simulation is limited to 1e9 pulses");
    ZBasisClasses z;
    SimulationResult result;
    result.observables = tally(sample_cells(cfg, seed), cfg, &z);
    Rng aopp_rng = substream(seed, kCellCount + 1);
    sample_aopp(z, aopp_rng, result.observables);
    if (desk_scale) {
        Rng key_rng = substream(seed, kCellCount + 2);
        result.raw = materialize(z, cfg, key_rng);
    }
    return result;
}

}  // namespace tfqds
