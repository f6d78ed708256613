#include "tfqds/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "tfqds/signing.hpp"

namespace tfqds {

const char* to_string(Attack attack) {
    switch (attack) {
        case Attack::none: return "none";
        case Attack::tamper_message: return "tamper_message";
        case Attack::tamper_signature: return "tamper_signature";
        case Attack::repudiate: return "repudiate";
        case Attack::forge_without_keys: return "forge_without_keys";
    }
    return "none";
}

Attack attack_from_string(const std::string& name) {
    for (Attack a : {Attack::none, Attack::tamper_message, Attack::tamper_signature, Attack::repudiate,
                     Attack::forge_without_keys})
        if (name == to_string(a)) return a;
    throw std::invalid_argument("unknown attack '" + name + "'");
}

const char* to_string(ChannelType channel) {
    switch (channel) {
        case ChannelType::optical: return "optical";
        case ChannelType::quantum_announcement: return "quantum-announcement";
        case ChannelType::authenticated_classical: return "authenticated-classical";
    }
    return "authenticated-classical";
}

SecurityBudget desk_budget() {
    SecurityBudget b;
    b.epsilon_total = 1e-4;
    b.eps_p = b.eps_aopp = b.eps_pe = b.g = b.eps_cor = b.eps_prime = 1e-6;
    return b;
}

SourceParams desk_source(std::uint64_t total_pulses) {
    SourceParams s;
    s.signal_intensity = 0.28;
    s.decoy_intensity = 0.066;
    s.prob_vacuum = 0.077;
    s.prob_decoy = 0.17;
    s.prob_signal_window_send = 0.29;
    s.total_pulses = total_pulses;
    return s;
}

Scenario desk_scenario(Scheme scheme, std::uint64_t seed) {
    Scenario s;
    s.link_ab = table1_config(desk_source(), 50.0);
    s.link_ab.budget = desk_budget();
    s.link_ac = s.link_ab;
    s.scheme = scheme;
    s.seed = seed;
    Rng rng = substream(seed, 0x3E55A6E);
    s.message = random_bits(scheme == Scheme::single_bit ? 1 : 256, rng);
    return s;
}

namespace {

LinkConfig at_desk_scale(const LinkConfig& link, std::uint64_t n) {
    LinkConfig c = link;
    c.source_a.total_pulses = n;
    c.source_b.total_pulses = n;
    return c;
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) { return splitmix64(splitmix64(seed) + tag); }

double unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

void fnv_update(std::uint64_t& h, std::uint64_t value, int bytes) {
    for (int i = 0; i < bytes; ++i) {
        h ^= (value >> (8 * i)) & 0xFFU;
        h *= 0x100000001b3ULL;
    }
}

constexpr std::uint64_t kFnvBasis = 0xcbf29ce484222325ULL;

std::uint64_t digest_bits(BitView bits) { return fnv1a(pack_bits(bits)); }

}  // namespace

void validate_scenario(const Scenario& s) {
    if (s.desk_scale_N > kDeskScaleMaxPulses)
        throw ResourceLimitError("scenario.desk_scale_N exceeds the desk-scale limit of 1e9");
    validate(at_desk_scale(s.link_ab, s.desk_scale_N));
    validate(at_desk_scale(s.link_ac, s.desk_scale_N));
    if (!(s.link_ab.budget == s.link_ac.budget))
        throw ValidationError("both links must use the same security budget");
    if (s.message.empty()) throw ValidationError("scenario.message must not be empty");
    for (auto b : s.message)
        if (b > 1) throw ValidationError("scenario.message must be a bit string");
    if (!(s.error_test_fraction > 0.0 && s.error_test_fraction < 1.0))
        throw ValidationError("scenario.error_test_fraction must lie in (0, 1)");
}

Scenario inject_attack(const Scenario& scenario, Attack attack) {
    if (scenario.attack != Attack::none)
        throw std::invalid_argument(std::string("scenario already carries the attack '") + to_string(scenario.attack) +
                                    "'; attacks do not compose");
    Scenario out = scenario;
    out.attack = attack;
    return out;
}

// ---------------------------------------------------------------- sources and David

void emit_pulses(const SourceParams& source, std::uint64_t seed, std::uint64_t first_window, std::size_t count,
                 SourceBatch& b) {
    const double p_o = choice_probability(PulseChoice::vacuum, source);
    const double p_ov = p_o + choice_probability(PulseChoice::decoy, source);
    const double p_ovs = p_ov + choice_probability(PulseChoice::send, source);
    const float mu_of[4] = {0.0f, static_cast<float>(source.decoy_intensity),
                            static_cast<float>(source.signal_intensity), 0.0f};
    const std::uint64_t key = splitmix64(seed);

    b.choices.resize(count);
    b.phase_bins.resize(count);
    b.pulses.resize(count);
    PulseChoice* choices = b.choices.data();
    std::uint8_t* bins = b.phase_bins.data();
    OpticalPulse* pulses = b.pulses.data();
    const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(static) firstprivate(choices, bins, pulses, key, first_window, p_o, p_ov, p_ovs, mu_of)
    for (std::int64_t i = 0; i < n; ++i) {
        const std::uint64_t x = splitmix64(key + first_window + static_cast<std::uint64_t>(i));
        const double r = unit(x);
        const int level = (r >= p_o) + (r >= p_ov) + (r >= p_ovs);
        const auto bin = static_cast<std::uint8_t>(x & 0xFFU);
        choices[i] = static_cast<PulseChoice>(level);
        bins[i] = bin;
        pulses[i] = {mu_of[level], bin};
    }
}

SourceBatch emit_pulses(const SourceParams& source, std::uint64_t seed, std::uint64_t first_window,
                        std::size_t count) {
    SourceBatch b;
    emit_pulses(source, seed, first_window, count, b);
    return b;
}

DavidOptics david_optics(const ValidatedConfig& cfg) {
    return {cfg.eta(), 1.0 - 2.0 * cfg.device().misalignment, cfg.device().dark_count_prob};
}

namespace {

// Click probabilities for every pair of intensity levels present and every
// relative phase bin.
class ClickTable {
public:
    ClickTable(std::span<const OpticalPulse> a, std::span<const OpticalPulse> b, const DavidOptics& optics) {
        slot_key_.fill(kEmpty);
        discover(a);
        discover(b);
        const std::size_t n = levels_.size();
        table_.resize(n * n * kPhaseBins);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (int d = 0; d < kPhaseBins; ++d)
                    table_[(i * n + j) * kPhaseBins + static_cast<std::size_t>(d)] =
                        click_probabilities(levels_[i], levels_[j], relative_phase(d, 0), optics.eta,
                                            optics.visibility, optics.dark_count_prob);
    }

    const ExclusiveClicks& at(const OpticalPulse& a, const OpticalPulse& b) const {
        const std::size_t n = levels_.size();
        const std::size_t i = slot_level_[slot(a.mean_photon_number)];
        const std::size_t j = slot_level_[slot(b.mean_photon_number)];
        const auto d = static_cast<std::uint8_t>(a.phase_bin - b.phase_bin);
        return table_[(i * n + j) * kPhaseBins + d];
    }

private:
    static constexpr std::size_t kMaxLevels = 16;
    static constexpr int kSlotBits = 8;
    static constexpr std::uint64_t kEmpty = ~std::uint64_t{0};

    std::size_t slot(float mu) const {
        return static_cast<std::size_t>((std::uint64_t{std::bit_cast<std::uint32_t>(mu)} * multiplier_) >>
                                        (64 - kSlotBits));
    }

    // New multiplier until every known level has its own slot.
    void rehash() {
        for (;;) {
            multiplier_ = splitmix64(multiplier_) | 1U;
            slot_key_.fill(kEmpty);
            bool clean = true;
            for (std::size_t k = 0; k < levels_.size() && clean; ++k) {
                const std::size_t s = slot(levels_[k]);
                clean = slot_key_[s] == kEmpty;
                slot_key_[s] = std::bit_cast<std::uint32_t>(levels_[k]);
                slot_level_[s] = static_cast<std::uint8_t>(k);
            }
            if (clean) return;
        }
    }

    void discover(std::span<const OpticalPulse> batch) {
        for (const auto& p : batch) {
            const std::uint32_t bits = std::bit_cast<std::uint32_t>(p.mean_photon_number);
            const std::size_t s = slot(p.mean_photon_number);
            if (slot_key_[s] == bits) continue;
            if (levels_.size() >= kMaxLevels) throw FabricError("too many distinct pulse intensities");
            levels_.push_back(p.mean_photon_number);
            if (slot_key_[s] != kEmpty) {
                rehash();
                continue;
            }
            slot_key_[s] = bits;
            slot_level_[s] = static_cast<std::uint8_t>(levels_.size() - 1);
        }
    }

    std::array<std::uint64_t, std::size_t{1} << kSlotBits> slot_key_{};
    std::array<std::uint8_t, std::size_t{1} << kSlotBits> slot_level_{};
    std::uint64_t multiplier_ = 0x9E3779B97F4A7C15ULL;
    std::vector<float> levels_;
    std::vector<ExclusiveClicks> table_;
};

Announcement announce(const ExclusiveClicks& p, std::uint64_t key, std::uint64_t window) {
    const double r = unit(splitmix64(key + window));
    return static_cast<Announcement>((r < p.d1) + 2 * (r >= p.d1 && r < p.d1 + p.d2));
}

void check_aligned(std::span<const OpticalPulse> a, std::span<const OpticalPulse> b) {
    if (a.size() != b.size()) throw FabricError("David received misaligned pulse batches");
}

}  // namespace

void david_measure(std::span<const OpticalPulse> batch_a, std::span<const OpticalPulse> batch_b,
                   const DavidOptics& optics, std::uint64_t seed, std::uint64_t first_window,
                   std::vector<Announcement>& out) {
    check_aligned(batch_a, batch_b);
    const ClickTable table(batch_a, batch_b, optics);
    const std::uint64_t key = splitmix64(seed);
    out.resize(batch_a.size());
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < batch_a.size(); ++i)
        out[i] = announce(table.at(batch_a[i], batch_b[i]), key, first_window + i);
}

std::vector<Announcement> david_measure(std::span<const OpticalPulse> batch_a, std::span<const OpticalPulse> batch_b,
                                        const DavidOptics& optics, std::uint64_t seed, std::uint64_t first_window) {
    std::vector<Announcement> out;
    david_measure(batch_a, batch_b, optics, seed, first_window, out);
    return out;
}

std::vector<Announcement> david_measure_serial(std::span<const OpticalPulse> batch_a,
                                               std::span<const OpticalPulse> batch_b, const DavidOptics& optics,
                                               std::uint64_t seed, std::uint64_t first_window) {
    check_aligned(batch_a, batch_b);
    const ClickTable table(batch_a, batch_b, optics);
    const std::uint64_t key = splitmix64(seed);
    std::vector<Announcement> out(batch_a.size());
    for (std::size_t i = 0; i < batch_a.size(); ++i)
        out[i] = announce(table.at(batch_a[i], batch_b[i]), key, first_window + i);
    return out;
}

// ---------------------------------------------------------------- transcript helpers

const VerdictRecord* Transcript::verdict(const std::string& verifier) const {
    for (const auto& v : verdicts)
        if (v.verifier == verifier) return &v;
    return nullptr;
}

std::vector<std::string> audit_transcript(const Transcript& t) {
    static const std::vector<std::string> allowed = {"error_test", "key_exchange", "signature", "forward"};
    std::vector<std::string> problems;
    for (const auto& e : t.events) {
        if (!e.key_material) continue;
        if (e.channel != ChannelType::authenticated_classical)
            problems.push_back("event " + std::to_string(e.seq) + " carries key material on a " + to_string(e.channel) +
                               " edge");
        if (std::find(allowed.begin(), allowed.end(), e.type) == allowed.end())
            problems.push_back("event " + std::to_string(e.seq) + " of type '" + e.type + "' carries key material");
    }
    for (const char* who : {"Bob", "Charlie"}) {
        const auto n = std::count_if(t.events.begin(), t.events.end(),
                                     [&](const TranscriptEvent& e) { return e.type == "verdict" && e.sender == who; });
        if (n != 1) problems.push_back(std::string(who) + " issued " + std::to_string(n) + " verdicts");
    }
    return problems;
}

namespace {

class EventLog {
public:
    explicit EventLog(std::vector<TranscriptEvent>& events) : events_(events) {}
    void add(std::string sender, std::string receiver, ChannelType channel, std::string type, std::uint64_t digest,
             std::uint64_t size_bits, bool key_material, std::string note = {}) {
        events_.push_back({events_.size(), std::move(sender), std::move(receiver), channel, std::move(type), digest,
                           size_bits, key_material, std::move(note)});
    }

private:
    std::vector<TranscriptEvent>& events_;
};

constexpr std::size_t kBatch = std::size_t{1} << 20;

LinkDistribution distribute_link(const Scenario& s, int index, EventLog& log) {
    const bool ab = index == 0;
    const std::string partner = ab ? "Bob" : "Charlie";
    LinkDistribution out;
    out.link = ab ? "AB" : "AC";
    const ValidatedConfig cfg = validate(at_desk_scale(ab ? s.link_ab : s.link_ac, s.desk_scale_N));
    const DavidOptics optics = david_optics(cfg);
    const std::uint64_t alice_seed = derive(s.seed, 0x100 + index);
    const std::uint64_t partner_seed = derive(s.seed, 0x200 + index);
    const std::uint64_t david_seed = derive(s.seed, 0x300 + index);

    CellCounts cells{std::vector<double>(kCellCount, 0.0), std::vector<double>(kCellCount, 0.0)};
    BitString alice_z, partner_z;
    std::uint64_t announce_digest = kFnvBasis;
    std::uint64_t sift_digest = kFnvBasis;
    std::uint64_t effective = 0;

    const std::uint64_t n = s.desk_scale_N;
    SourceBatch a, b;
    std::vector<Announcement> clicks;
    for (std::uint64_t first = 0; first < n; first += kBatch) {
        const std::size_t count = static_cast<std::size_t>(std::min<std::uint64_t>(kBatch, n - first));
        emit_pulses(cfg.source(), alice_seed, first, count, a);
        emit_pulses(cfg.source(), partner_seed, first, count, b);
        david_measure(a.pulses, b.pulses, optics, david_seed, first, clicks);
        for (std::size_t i = 0; i < count; ++i) {
            if (clicks[i] == Announcement::none) continue;
            ++effective;
            fnv_update(announce_digest, first + i, 8);
            fnv_update(announce_digest, static_cast<std::uint64_t>(clicks[i]), 1);
            const PulseChoice ca = a.choices[i], cb = b.choices[i];
            const auto d = static_cast<std::uint8_t>(a.phase_bins[i] - b.phase_bins[i]);
            auto& slot = clicks[i] == Announcement::d1 ? cells.d1 : cells.d2;
            slot[cell_index(ca, cb, d)] += 1.0;
            const bool za = window_of(ca) == Window::z, zb = window_of(cb) == Window::z;
            if (za && zb) {
                alice_z.push_back(ca == PulseChoice::send ? 1 : 0);
                partner_z.push_back(cb == PulseChoice::send ? 0 : 1);
                fnv_update(sift_digest, 0xFF, 1);
            } else {
                // X labels in full; the Z side of a mixed window reveals send or not
                fnv_update(sift_digest, static_cast<std::uint64_t>(ca), 1);
                fnv_update(sift_digest, static_cast<std::uint64_t>(cb), 1);
                fnv_update(sift_digest, d, 1);
            }
        }
    }
    log.add("Alice", "David", ChannelType::optical, "pulses", 0, 0, false, std::to_string(n) + " windows");
    log.add(partner, "David", ChannelType::optical, "pulses", 0, 0, false, std::to_string(n) + " windows");
    log.add("David", "public", ChannelType::quantum_announcement, "click_announcements", announce_digest,
            effective * 65, false, std::to_string(effective) + " effective windows");
    log.add("Alice", partner, ChannelType::authenticated_classical, "sifting", sift_digest, effective * 8, false);
    log.add(partner, "Alice", ChannelType::authenticated_classical, "sifting", sift_digest, effective * 8, false);

    out.observables = tally(cells, cfg);

    // AOPP on the raw Z key
    Rng pair_rng = substream(derive(s.seed, 0x400 + index), 1);
    Rng group_rng = substream(derive(s.seed, 0x400 + index), 2);
    const auto pairs = aopp_form_pairs(partner_z, pair_rng);
    const auto odd = aopp_random_grouping_odd(partner_z, group_rng);
    const auto kept = aopp_filter_pairs(alice_z, pairs);
    std::uint64_t pair_digest = kFnvBasis, kept_digest = kFnvBasis;
    for (const auto& p : pairs) {
        fnv_update(pair_digest, p.first, 8);
        fnv_update(pair_digest, p.second, 8);
    }
    for (const auto& p : kept) fnv_update(kept_digest, p.first, 8);
    log.add(partner, "Alice", ChannelType::authenticated_classical, "aopp_pairs", pair_digest, pairs.size() * 128,
            false);
    log.add("Alice", partner, ChannelType::authenticated_classical, "aopp_parity", kept_digest, kept.size() * 64,
            false);
    out.observables.n_g = static_cast<double>(pairs.size());
    out.observables.n_odd = static_cast<double>(odd);
    out.observables.n_Z_prime = static_cast<double>(kept.size());

    BitString alice_pool, partner_pool;
    alice_pool.reserve(kept.size());
    partner_pool.reserve(kept.size());
    for (const auto& p : kept) {
        alice_pool.push_back(alice_z[p.first]);
        partner_pool.push_back(partner_z[p.first]);
    }

    // error test on a random sample, disclosed and discarded
    const std::size_t m = alice_pool.size();
    const auto sample = std::min<std::size_t>(
        m, static_cast<std::size_t>(std::ceil(s.error_test_fraction * static_cast<double>(m))));
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng test_rng = substream(derive(s.seed, 0x500 + index), 0);
    for (std::size_t i = 0; i < sample; ++i) std::swap(order[i], order[i + test_rng() % (m - i)]);
    std::vector<std::uint8_t> tested(m, 0);
    BitString disclosed;
    for (std::size_t i = 0; i < sample; ++i) {
        tested[order[i]] = 1;
        disclosed.push_back(alice_pool[order[i]]);
        out.error_test_errors += alice_pool[order[i]] != partner_pool[order[i]];
    }
    out.error_test_sample = sample;
    log.add("Alice", partner, ChannelType::authenticated_classical, "error_test", digest_bits(disclosed),
            sample * 65, true, "sample fraction " + std::to_string(s.error_test_fraction));
    log.add(partner, "Alice", ChannelType::authenticated_classical, "error_test_result", out.error_test_errors, 64,
            false, std::to_string(out.error_test_errors) + " mismatches");
    out.observables.E_Z_prime =
        sample > 0 ? static_cast<double>(out.error_test_errors) / static_cast<double>(sample) : 0.0;

    for (std::size_t i = 0; i < m; ++i) {
        if (tested[i]) continue;
        out.signer_bits.push_back(alice_pool[i]);
        out.verifier_bits.push_back(partner_pool[i]);
    }
    return out;
}

}  // namespace

Distribution run_distribution(const Scenario& scenario) {
    validate_scenario(scenario);
    Distribution d;
    EventLog log(d.events);
    // one David node, links served one after the other
    for (int i = 0; i < 2; ++i) d.links[static_cast<std::size_t>(i)] = distribute_link(scenario, i, log);
    return d;
}

// ---------------------------------------------------------------- messaging

namespace {

void flip_fraction(BitString& bits, double fraction, Rng& rng) {
    for (auto& b : bits)
        if (uniform01(rng) < fraction) b ^= 1U;
}

void abort_run(Transcript& t, EventLog& log, const std::string& reason) {
    t.aborted = true;
    t.abort_reason = reason;
    log.add("protocol", "public", ChannelType::authenticated_classical, "abort", 0, 0, false, reason);
    for (const char* who : {"Bob", "Charlie"}) {
        t.verdicts.push_back({who, false, "aborted: " + reason, {}});
        log.add(who, "public", ChannelType::authenticated_classical, "verdict", 0, 1, false, "reject (aborted)");
    }
}

struct Verdicts {
    VerdictRecord bob{"Bob", true, {}, {}};
    VerdictRecord charlie{"Charlie", true, {}, {}};

    static void merge(VerdictRecord& into, bool accept, const std::array<std::size_t, 2>& mm,
                      const std::string& reason) {
        into.mismatches[0] += mm[0];
        into.mismatches[1] += mm[1];
        if (!accept && into.accept) {
            into.accept = false;
            into.reason = reason;
        }
    }
};

void sign_single_bits(const Scenario& s, std::size_t L, const Thresholds& th, KeyPool& alice_ab, KeyPool& bob,
                      KeyPool& alice_ac, KeyPool& charlie, Rng& rng, EventLog& log, Verdicts& v) {
    for (const std::uint8_t m : s.message) {
        SignerSingleKeys alice;
        std::array<BitString, 2> bob_keys, charlie_keys;
        for (int k = 0; k < 2; ++k) {
            alice.a_b[k] = draw_keys(alice_ab, L);
            alice.a_c[k] = draw_keys(alice_ac, L);
            bob_keys[k] = draw_keys(bob, L);
            charlie_keys[k] = draw_keys(charlie, L);
        }
        const SingleBitExchange ex = exchange_single_bit(bob_keys, charlie_keys, rng());
        BitString sent_b = ex.bob_sent.bits[0], sent_c = ex.charlie_sent.bits[0];
        sent_b.insert(sent_b.end(), ex.bob_sent.bits[1].begin(), ex.bob_sent.bits[1].end());
        sent_c.insert(sent_c.end(), ex.charlie_sent.bits[1].begin(), ex.charlie_sent.bits[1].end());
        log.add("Bob", "Charlie", ChannelType::authenticated_classical, "key_exchange", digest_bits(sent_b),
                sent_b.size(), true);
        log.add("Charlie", "Bob", ChannelType::authenticated_classical, "key_exchange", digest_bits(sent_c),
                sent_c.size(), true);

        SignatureBundle bundle = sign_single(m, alice);
        if (s.attack == Attack::repudiate) flip_fraction(bundle.payload[1], 0.5 * (th.s_a + th.s_v), rng);
        if (s.attack == Attack::forge_without_keys)
            for (auto& part : bundle.payload) part = random_bits(L, rng);
        log.add("Alice", "Bob", ChannelType::authenticated_classical, "signature", fnv1a(serialize(bundle)),
                serialize(bundle).size() * 8, true);
        const SingleVerdict vb = verify_single(bundle, ex.bob, th.s_a, L);
        Verdicts::merge(v.bob, vb.accept, vb.mismatches, vb.reason);

        SignatureBundle forwarded = bundle;
        if (s.attack == Attack::tamper_message) forwarded.message[0] ^= 1U;
        if (s.attack == Attack::tamper_signature)
            for (auto& part : forwarded.payload) flip_fraction(part, 0.25, rng);
        log.add("Bob", "Charlie", ChannelType::authenticated_classical, "forward", fnv1a(serialize(forwarded)),
                serialize(forwarded).size() * 8, true);
        const SingleVerdict vc = verify_single(forwarded, ex.charlie, th.s_v, L);
        Verdicts::merge(v.charlie, vc.accept, vc.mismatches, vc.reason);
    }
}

void sign_multi_message(const Scenario& s, std::size_t L, KeyPool& alice_ab, KeyPool& bob, KeyPool& alice_ac,
                        KeyPool& charlie, Rng& rng, EventLog& log, Verdicts& v) {
    const BitString x_ab = draw_keys(alice_ab, L), y_ab = draw_keys(alice_ab, L);
    const BitString x_ac = draw_keys(alice_ac, L), y_ac = draw_keys(alice_ac, L);
    const BitString x_b = draw_keys(bob, L), y_b = draw_keys(bob, L);
    const BitString x_c = draw_keys(charlie, L), y_c = draw_keys(charlie, L);
    const BitString p_a = random_bits(L, rng);
    OtuhKeys keys = make_otuh_keys(x_ab, y_ab, x_ac, y_ac, x_b, y_b, x_c, y_c, p_a);
    if (s.attack == Attack::repudiate) keys.Y_a[0] ^= 1U;

    BitString xy_b = x_b, xy_c = x_c;
    xy_b.insert(xy_b.end(), y_b.begin(), y_b.end());
    xy_c.insert(xy_c.end(), y_c.begin(), y_c.end());
    log.add("Bob", "Charlie", ChannelType::authenticated_classical, "key_exchange", digest_bits(xy_b), xy_b.size(),
            true);
    log.add("Charlie", "Bob", ChannelType::authenticated_classical, "key_exchange", digest_bits(xy_c), xy_c.size(),
            true);
    const BitString K_X = xor_bits(x_b, x_c), K_Y = xor_bits(y_b, y_c);

    SignatureBundle bundle = sign_multi(s.message, keys);
    if (s.attack == Attack::forge_without_keys)
        for (auto& part : bundle.payload) part = random_bits(L, rng);
    log.add("Alice", "Bob", ChannelType::authenticated_classical, "signature", fnv1a(serialize(bundle)),
            serialize(bundle).size() * 8, true);
    const MultiVerdict vb = verify_multi(bundle, K_X, K_Y);
    Verdicts::merge(v.bob, vb.accept, {}, vb.reason);

    SignatureBundle forwarded = bundle;
    if (s.attack == Attack::tamper_message) forwarded.message[0] ^= 1U;
    if (s.attack == Attack::tamper_signature) forwarded.payload[0][0] ^= 1U;
    log.add("Bob", "Charlie", ChannelType::authenticated_classical, "forward", fnv1a(serialize(forwarded)),
            serialize(forwarded).size() * 8, true);
    const MultiVerdict vc = verify_multi(forwarded, K_X, K_Y);
    Verdicts::merge(v.charlie, vc.accept, {}, vc.reason);
}

}  // namespace

Transcript run_protocol(const Scenario& s, const Distribution& dist) {
    validate_scenario(s);
    Transcript t;
    t.events = dist.events;
    EventLog log(t.events);
    const SecurityBudget& budget = s.link_ab.budget;

    std::array<PoolStats, 2> pools;
    for (int i = 0; i < 2; ++i) {
        const LinkDistribution& ld = dist.links[static_cast<std::size_t>(i)];
        LinkReport rep;
        rep.link = ld.link;
        rep.observables = ld.observables;
        rep.error_test_sample = ld.error_test_sample;
        rep.error_test_errors = ld.error_test_errors;
        rep.pool_bits = ld.signer_bits.size();
        const ValidatedConfig cfg = validate(at_desk_scale(i == 0 ? s.link_ab : s.link_ac, s.desk_scale_N));
        try {
            rep.pre = estimate_pre_aopp(ld.observables, cfg);
            pools[static_cast<std::size_t>(i)] = aopp_estimates(rep.pre, ld.observables, budget);
            rep.pool = pools[static_cast<std::size_t>(i)];
        } catch (const std::exception& e) {
            t.links.push_back(rep);
            abort_run(t, log, ld.link + " estimation failed: " + e.what());
            return t;
        }
        t.links.push_back(rep);
    }

    const PoolStats pool = weaker_pool(pools[0], pools[1]);
    const double message_bits = s.scheme == Scheme::multi_bit ? static_cast<double>(s.message.size()) : 1.0;
    SecurityReport report;
    try {
        if (pool.degenerate) throw Infeasible("pool statistics are degenerate", 1.0);
        report = min_signature_length(pool, s.scheme, message_bits, budget);
        if (s.scheme == Scheme::single_bit && std::fmod(report.L, 2.0) != 0.0)
            report = evaluate_security(pool, report.L + 1.0, s.scheme, message_bits, budget);
    } catch (const Infeasible& e) {
        abort_run(t, log, std::string("no secure signature length: ") + e.what());
        return t;
    }
    t.security = report;
    const auto L = static_cast<std::size_t>(report.L);
    const std::size_t need = s.scheme == Scheme::single_bit ? 2 * L * s.message.size() : 2 * L;
    const std::size_t have = std::min(dist.links[0].signer_bits.size(), dist.links[1].signer_bits.size());
    if (have < need) {
        abort_run(t, log,
                  "key pool holds " + std::to_string(have) + " bits, signing needs " + std::to_string(need) + " per link");
        return t;
    }
    log.add("Alice", "public", ChannelType::authenticated_classical, "signature_length", 0, 32, false,
            "L = " + std::to_string(L));

    KeyPool alice_ab{"AB", dist.links[0].signer_bits, 0, s.scheme};
    KeyPool alice_ac{"AC", dist.links[1].signer_bits, 0, s.scheme};
    KeyPool bob{"AB", dist.links[0].verifier_bits, 0, s.scheme};
    KeyPool charlie{"AC", dist.links[1].verifier_bits, 0, s.scheme};
    if (s.scheme == Scheme::multi_bit) {
        // ideal error correction; leakage is charged in the min-entropy
        for (int i = 0; i < 2; ++i) {
            const LinkDistribution& ld = dist.links[static_cast<std::size_t>(i)];
            const double leak =
                budget.ec_efficiency * binary_entropy(ld.observables.E_Z_prime) * ld.signer_bits.size();
            log.add("Alice", i == 0 ? "Bob" : "Charlie", ChannelType::authenticated_classical, "error_correction", 0,
                    static_cast<std::uint64_t>(std::ceil(leak)), false);
        }
        bob.bits = alice_ab.bits;
        charlie.bits = alice_ac.bits;
    }

    Rng rng = substream(derive(s.seed, 0x600), 0);
    Verdicts v;
    if (s.scheme == Scheme::single_bit)
        sign_single_bits(s, L, *report.thresholds, alice_ab, bob, alice_ac, charlie, rng, log, v);
    else
        sign_multi_message(s, L, alice_ab, bob, alice_ac, charlie, rng, log, v);

    for (const VerdictRecord* r : {&v.bob, &v.charlie}) {
        t.verdicts.push_back(*r);
        log.add(r->verifier, "public", ChannelType::authenticated_classical, "verdict", r->accept ? 1 : 0, 1, false,
                r->accept ? "accept" : "reject: " + r->reason);
    }
    return t;
}

Transcript run_protocol(const Scenario& scenario) { return run_protocol(scenario, run_distribution(scenario)); }

}  // namespace tfqds
