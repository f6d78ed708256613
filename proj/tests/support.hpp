#pragma once

// Independent oracles shared by the unit tests and the acceptance binary.
// None of them call into the code they check.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tfqds/bits.hpp"
#include "tfqds/channel.hpp"
#include "tfqds/estimation.hpp"
#include "tfqds/params.hpp"
#include "tfqds/rng.hpp"

namespace oracle {

// ---- GF(2) polynomials as integer masks (bit i = coefficient of x^i), degree < 64.

inline int degree(std::uint64_t p) { return p == 0 ? -1 : 63 - __builtin_clzll(p); }

inline std::uint64_t mod(std::uint64_t a, std::uint64_t m) {
    const int dm = degree(m);
    while (degree(a) >= dm) a ^= m << (degree(a) - dm);
    return a;
}

// Trial division by every polynomial of degree 1..deg/2.
inline bool irreducible_by_trial_division(std::uint64_t p) {
    const int d = degree(p);
    if (d < 1) return false;
    for (int k = 1; k <= d / 2; ++k)
        for (std::uint64_t q = std::uint64_t{1} << k; q < (std::uint64_t{2} << k); ++q)
            if (mod(p, q) == 0) return false;
    return true;
}

// (M(x) * x^L) mod P by schoolbook long division, M's first bit highest.
inline tfqds::BitString division_digest(const tfqds::BitString& message, std::uint64_t poly) {
    const int L = degree(poly);
    std::uint64_t r = 0;
    auto push = [&](int bit) {
        r = (r << 1) | static_cast<std::uint64_t>(bit);
        if (degree(r) >= L) r ^= poly;
    };
    for (auto b : message) push(b);
    for (int i = 0; i < L; ++i) push(0);
    tfqds::BitString out(static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i) out[static_cast<std::size_t>(i)] = (r >> (L - 1 - i)) & 1U;
    return out;
}

inline std::uint64_t mask_from_bits_high_first(const tfqds::BitString& bits) {
    std::uint64_t m = 0;
    for (auto b : bits) m = (m << 1) | b;
    return m;
}

// ---- sampling without replacement

// Marked items in a draw of n from a population with `marked` of `total`.
inline std::uint64_t hypergeometric(std::uint64_t total, std::uint64_t marked, std::uint64_t n, tfqds::Rng& rng) {
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const double p = static_cast<double>(marked) / static_cast<double>(total - i);
        if (tfqds::uniform01(rng) < p) {
            ++hits;
            --marked;
        }
    }
    return hits;
}

// ---- click model

// One photon from one side, vacuum on the other: one detector clicks exactly.
inline double single_photon_yield(double eta, double pd) {
    return eta * (1.0 - pd) + 2.0 * (1.0 - eta) * pd * (1.0 - pd);
}

// Expected heralded Z-basis events where exactly one party sent and its pulse
// held exactly one photon.
inline double true_untagged_z(const tfqds::ValidatedConfig& cfg) {
    const auto& s = cfg.source();
    const double N = static_cast<double>(s.total_pulses);
    const double u = s.signal_intensity;
    const double pz = cfg.p_z();
    return N * pz * pz * 2.0 * s.prob_signal_window_send * (1.0 - s.prob_signal_window_send) * u * std::exp(-u) *
           single_photon_yield(cfg.eta(), cfg.device().dark_count_prob);
}

// ---- Published observed counts for both distances and both links.

struct Table2Link {
    const char* label;
    double n_oo, n_ov, n_vo, n_ou, n_uo, m_vv, n_Z, E_Z;
    double n_1, e_ph;
};

inline const Table2Link kTable2[4] = {
    {"302AB", 7, 397043, 385695, 84552427, 83052633, 3822, 17353767556.0, 0.282, 8315412214.0, 0.0223},
    {"302AC", 5, 393944, 370335, 82983350, 84535445, 3948, 17361970696.0, 0.281, 8098661172.0, 0.0236},
    {"504AB", 233, 151667, 144307, 3340314, 3296684, 1490, 247877706.0, 0.285, 113656381.0, 0.0303},
    {"504AC", 56, 136596, 153476, 3320024, 3273380, 1389, 255294247.0, 0.279, 111062741.0, 0.0296},
};

inline tfqds::LinkObservables observables(const Table2Link& t) {
    tfqds::LinkObservables o;
    o.n_oo = t.n_oo;
    o.n_ov = t.n_ov;
    o.n_vo = t.n_vo;
    o.n_ou = t.n_ou;
    o.n_uo = t.n_uo;
    o.m_vv = t.m_vv;
    o.n_Z = t.n_Z;
    o.E_Z = t.E_Z;
    return o;
}

inline tfqds::SourceParams source_302() {
    tfqds::SourceParams s;
    s.signal_intensity = 0.418;
    s.decoy_intensity = 0.0264;
    s.prob_vacuum = 0.0093;
    s.prob_decoy = 0.0197;
    s.prob_signal_window_send = 0.28;
    s.total_pulses = 100'000'000'000'000ULL;
    return s;
}

inline tfqds::SourceParams source_504() {
    tfqds::SourceParams s;
    s.signal_intensity = 0.424;
    s.decoy_intensity = 0.1;
    s.prob_vacuum = 0.024;
    s.prob_decoy = 0.049;
    s.prob_signal_window_send = 0.28;
    s.total_pulses = 100'000'000'000'000ULL;
    return s;
}

inline tfqds::ValidatedConfig config_for(const Table2Link& t) {
    const bool far = std::string(t.label).rfind("504", 0) == 0;
    return tfqds::validate(tfqds::table1_config(far ? source_504() : source_302(), far ? 504.0 : 302.0));
}

// Published post-AOPP values: n'_Z, E'_Z, n'_1, e'_ph (504 AB with the corrected n'_Z).
inline tfqds::PoolStats post_aopp(int index) {
    static const double v[4][4] = {{3514754061.0, 5.71e-6, 1561633524.0, 0.0437},
                                   {3507806729.0, 2.00e-5, 1473015353.0, 0.0462},
                                   {50279301.0, 1.21e-3, 20528600.0, 0.0599},
                                   {51913395.0, 3.14e-4, 18630179.0, 0.0591}};
    return tfqds::pool_from_values(v[index][0], v[index][1], v[index][2], v[index][3]);
}

inline tfqds::PoolStats weaker_302() { return tfqds::weaker_pool(post_aopp(0), post_aopp(1)); }
inline tfqds::PoolStats weaker_504() { return tfqds::weaker_pool(post_aopp(2), post_aopp(3)); }

}  // namespace oracle
