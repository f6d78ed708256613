#include <doctest.h>

#include <cmath>
#include <string>

#include "support.hpp"
#include "tfqds/estimation.hpp"

using namespace tfqds;

namespace {

SecurityBudget loose_budget() {
    SecurityBudget b;
    b.epsilon_total = 1e-4;
    b.eps_p = b.eps_aopp = b.eps_pe = b.g = b.eps_cor = b.eps_prime = 1e-6;
    return b;
}

ValidatedConfig desk_config(double km, std::uint64_t N) {
    SourceParams s;
    s.signal_intensity = 0.28;
    s.decoy_intensity = 0.066;
    s.prob_vacuum = 0.077;
    s.prob_decoy = 0.17;
    s.prob_signal_window_send = 0.29;
    s.total_pulses = N;
    LinkConfig c = table1_config(s, km);
    c.budget = loose_budget();
    return validate(c);
}

}  // namespace

TEST_CASE("Chernoff bounds") {
    SUBCASE("zero count") {
        const ChernoffInterval c = chernoff_bounds(0.0, 1e-12);
        CHECK(c.lower == 0.0);
        CHECK(c.upper == doctest::Approx(28.3241).epsilon(1e-4));
    }
    SUBCASE("deltas solve both tail equations") {
        const double x = 1e6, eps = 1e-12;
        const ChernoffInterval c = chernoff_bounds(x, eps);
        CHECK(std::abs(chernoff_lower_residual(x, x / c.lower - 1.0, eps)) < 1e-12 * 28.0);
        CHECK(std::abs(chernoff_upper_residual(x, 1.0 - x / c.upper, eps)) < 1e-12 * 28.0);
        CHECK(c.lower < x);
        CHECK(c.upper > x);
    }
    SUBCASE("a larger failure probability tightens the interval") {
        const ChernoffInterval tight = chernoff_bounds(1e4, 1e-3), wide = chernoff_bounds(1e4, 1e-12);
        CHECK(tight.lower > wide.lower);
        CHECK(tight.upper < wide.upper);
    }
    SUBCASE("relative width shrinks as counts grow") {
        double previous = 1e300;
        for (double x : {1.0, 10.0, 1e3, 1e5, 1e7, 1e9}) {
            const ChernoffInterval c = chernoff_bounds(x, 1e-10);
            const double width = (c.upper - c.lower) / x;
            CHECK(width < previous);
            previous = width;
        }
    }
    SUBCASE("invalid inputs") {
        CHECK_THROWS_AS(chernoff_bounds(-1.0, 1e-10), DomainError);
        CHECK_THROWS_AS(chernoff_bounds(1.0, 0.0), DomainError);
        CHECK_THROWS_AS(chernoff_bounds(std::nan(""), 1e-10), DomainError);
    }
}

TEST_CASE("pre-AOPP estimates reproduce the published values") {
    for (const auto& t : oracle::kTable2) {
        const PreAoppEstimates e = estimate_pre_aopp(oracle::observables(t), oracle::config_for(t));
        INFO(std::string(t.label) << ": n_1 " << e.n_1 << " e_ph " << e.e_ph);
        CHECK(std::abs(e.n_1 / t.n_1 - 1.0) < 0.015);
        CHECK(std::abs(e.e_ph - t.e_ph) < 0.0015);
        CHECK(!e.clamped);
    }
}

TEST_CASE("phase error clamps to zero when the vacuum baseline dominates") {
    LinkObservables o = oracle::observables(oracle::kTable2[0]);
    o.m_vv = 0.0;
    o.n_oo = 1e7;
    const XBasisEstimate x = estimate_x_basis(o, oracle::config_for(oracle::kTable2[0]));
    if (x.n_X1 > 0.0) {
        CHECK(x.e_ph == 0.0);
        CHECK(x.clamped);
    } else {
        CHECK(x.e_ph == 0.5);
    }
}

TEST_CASE("all-zero counts estimate nothing") {
    const PreAoppEstimates e = estimate_pre_aopp(LinkObservables{}, oracle::config_for(oracle::kTable2[0]));
    CHECK(e.n_1 == 0.0);
    CHECK(e.n_X1 == 0.0);
    CHECK(e.clamped);
}

TEST_CASE("untagged estimate sits just below the true single-photon count") {
    const ValidatedConfig cfg = desk_config(50.0, 100'000'000'000ULL);
    const PreAoppEstimates e = estimate_pre_aopp(expected_observables(cfg), cfg);
    const double truth = oracle::true_untagged_z(cfg);
    INFO("n_1 " << e.n_1 << " truth " << truth);
    CHECK(e.n_1 <= truth * 1.001);
    CHECK(e.n_1 >= truth * 0.98);
}

TEST_CASE("AOPP chain") {
    const auto& t = oracle::kTable2[0];
    const ValidatedConfig cfg = oracle::config_for(t);
    const LinkObservables base = oracle::observables(t);
    const PreAoppEstimates pre = estimate_pre_aopp(base, cfg);

    SUBCASE("no pairs is degenerate") {
        LinkObservables o = base;
        o.n_odd = 1.0;
        CHECK_THROWS_AS(aopp_estimates(pre, o, cfg.budget()), DegenerateStatistics);
    }
    SUBCASE("h is n_g over twice n_odd") {
        LinkObservables o = base;
        o.n_g = 1e9;
        o.n_odd = 2.5e9;
        o.n_Z_prime = 5e8;
        CHECK(aopp_estimates(pre, o, cfg.budget()).h == doctest::Approx(0.2));
    }
    SUBCASE("expected AOPP counts land near the published post-AOPP row") {
        const LinkObservables e = expected_observables(cfg);
        LinkObservables o = base;
        o.n_g = e.n_g / e.n_Z * o.n_Z;
        o.n_odd = e.n_odd / e.n_Z * o.n_Z;
        o.n_Z_prime = oracle::post_aopp(0).n_Z_prime;
        o.E_Z_prime = oracle::post_aopp(0).E_Z_prime;
        const PoolStats p = aopp_estimates(pre, o, cfg.budget());
        INFO("n'_1 " << p.n_1_prime << " e'_ph " << p.e_ph_prime);
        CHECK(std::abs(p.n_1_prime / oracle::post_aopp(0).n_1_prime - 1.0) < 0.1);
        CHECK(std::abs(p.e_ph_prime - oracle::post_aopp(0).e_ph_prime) < 0.01);
        CHECK(p.failure_total() > 0.0);
    }
}

TEST_CASE("bitwise AOPP") {
    SUBCASE("identical balanced keys keep every pair without error") {
        RawKeyRecord raw;
        for (int i = 0; i < 1000; ++i) raw.alice_bits.push_back(static_cast<std::uint8_t>(i % 2));
        raw.bob_bits = raw.alice_bits;
        const AoppBitwiseResult r = aopp_bitwise(raw, 3);
        CHECK(r.n_g == 500);
        CHECK(r.n_Z_prime == r.n_g);
        CHECK(r.E_Z_prime == 0.0);
    }
    SUBCASE("all-zero keys pair nothing") {
        RawKeyRecord raw;
        raw.alice_bits.assign(1000, 0);
        raw.bob_bits = raw.alice_bits;
        const AoppBitwiseResult r = aopp_bitwise(raw, 3);
        CHECK(r.n_g == 0);
        CHECK(r.n_odd == 0);
        CHECK(r.n_Z_prime == 0);
    }
    SUBCASE("mismatched lengths are rejected") {
        RawKeyRecord raw;
        raw.alice_bits.assign(3, 0);
        raw.bob_bits.assign(4, 0);
        CHECK_THROWS(aopp_bitwise(raw, 1));
    }
}

TEST_CASE("bitwise AOPP suppresses the raw error rate and bounds the true single-photon count") {
    const ValidatedConfig cfg = desk_config(50.0, 50'000'000ULL);
    const int seeds = 20;
    int covered = 0;
    for (int s = 0; s < seeds; ++s) {
        SimulationResult sim = simulate_link(cfg, 500 + static_cast<std::uint64_t>(s), true);
        const RawKeyRecord& raw = *sim.raw;
        const AoppBitwiseResult r = aopp_bitwise(raw, 900 + static_cast<std::uint64_t>(s));
        CHECK(sim.observables.E_Z > 0.2);
        CHECK(r.E_Z_prime < 1e-2);

        LinkObservables o = sim.observables;
        o.n_g = static_cast<double>(r.n_g);
        o.n_odd = static_cast<double>(r.n_odd);
        o.n_Z_prime = static_cast<double>(r.n_Z_prime);
        o.E_Z_prime = r.E_Z_prime;
        const PoolStats p = aopp_estimates(estimate_pre_aopp(o, cfg), o, cfg.budget());

        std::uint64_t truth = 0;
        for (const auto& [a, b] : r.kept_pairs) truth += raw.tags[a].untagged() && raw.tags[b].untagged();
        covered += p.n_1_prime <= static_cast<double>(truth);
    }
    CHECK(covered == seeds);
}

TEST_CASE("sampling deviation") {
    SUBCASE("symmetric in n and k") {
        CHECK(gamma_upper(1e4, 3e4, 0.3, 1e-10) == doctest::Approx(gamma_upper(3e4, 1e4, 0.3, 1e-10)));
    }
    SUBCASE("lambda outside (0, 1) is a domain error") {
        CHECK_THROWS_AS(gamma_upper(10, 10, 0.0, 1e-3), DomainError);
        CHECK_THROWS_AS(gamma_upper(10, 10, 1.0, 1e-3), DomainError);
    }
    SUBCASE("302 km signature draw") {
        const PoolStats ac = oracle::post_aopp(1);
        const double lambda = ac.n_1_prime / ac.n_Z_prime;
        const double n = 164920.5;
        const double g = gamma_upper(n, ac.n_Z_prime - n, lambda, 1e-12);
        CHECK(n * (lambda - g) == doctest::Approx(67939.0).epsilon(0.01));
    }
    SUBCASE("covers hypergeometric draws") {
        const std::uint64_t total = 4000, marked = 1200, n = 400;
        const double lambda = static_cast<double>(marked) / total;
        const double g = gamma_upper(n, total - n, lambda, 1e-3);
        Rng rng = substream(77, 0);
        int below = 0;
        const int draws = 20000;
        for (int i = 0; i < draws; ++i) {
            const double frac = static_cast<double>(oracle::hypergeometric(total, marked, n, rng)) / n;
            below += frac < lambda - g;
        }
        // the bound fails with probability at most eps
        CHECK(below <= 1e-3 * draws + 4.0 * std::sqrt(1e-3 * draws));
    }
}

TEST_CASE("subset bounds reproduce the published values") {
    struct Row {
        PoolStats pool;
        double length;
        Scheme scheme;
        double n1, eph;
    };
    const Row rows[] = {
        {oracle::weaker_302(), 329841, Scheme::single_bit, 67939, 0.0519},
        {oracle::weaker_302(), 832, Scheme::multi_bit, 249, 0.239},
        {oracle::weaker_504(), 689647, Scheme::single_bit, 125916, 0.0646},
        {oracle::weaker_504(), 1148, Scheme::multi_bit, 308, 0.231},
    };
    for (const auto& r : rows) {
        const SubsetBounds sb = subset_bounds(r.pool, r.length, r.scheme, 1e-12);
        INFO(to_string(r.scheme) << " L " << r.length << ": n1_L " << sb.n1_L << " eph_L " << sb.eph_L);
        CHECK(sb.n1_L == doctest::Approx(r.n1).epsilon(0.01));
        CHECK(std::abs(sb.eph_L - r.eph) < 0.0015);
        CHECK(sb.eph_L >= r.pool.e_ph_prime);
        const double draw = r.scheme == Scheme::single_bit ? r.length / 2 : r.length;
        CHECK(sb.n1_L / draw <= r.pool.n_1_prime / r.pool.n_Z_prime);
        CHECK(sb.failure_n1 == doctest::Approx(11e-12));
        CHECK(sb.failure_eph == doctest::Approx(20e-12));
    }
    CHECK_THROWS_AS(subset_bounds(oracle::weaker_504(), 2.1e8, Scheme::single_bit, 1e-12), InsufficientPool);
}

TEST_CASE("binary entropy") {
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(binary_entropy(0.5) == doctest::Approx(1.0));
    CHECK(binary_entropy(0.11) == doctest::Approx(0.4999).epsilon(1e-3));
}

TEST_CASE("min-entropy") {
    const SecurityBudget budget;
    const PoolStats pool = oracle::weaker_302();
    SUBCASE("multi-bit 302 km") {
        const PoolStats ab = oracle::post_aopp(0);
        SubsetBounds sb{832, 249, 0.239, Scheme::multi_bit};
        const MinEntropy h = min_entropy(sb, ab, budget);
        const double by_hand = 249 * (1 - 0.7933734) - 832 * 1.1 * 1.07695e-4;
        CHECK(h.value == doctest::Approx(by_hand).epsilon(1e-4));
        CHECK(h.value == doctest::Approx(51.7).epsilon(0.01));
        CHECK(!h.degenerate);
    }
    SUBCASE("single-bit 302 km") {
        SubsetBounds sb{329841, 67939, 0.0519, Scheme::single_bit};
        CHECK(min_entropy(sb, pool, budget).value == doctest::Approx(4.78e4).epsilon(0.01));
    }
    SUBCASE("phase error of one half leaves nothing") {
        SubsetBounds sb{832, 249, 0.5, Scheme::multi_bit};
        CHECK(min_entropy(sb, pool, budget).degenerate);
    }
}
