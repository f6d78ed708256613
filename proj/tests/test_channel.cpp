#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "support.hpp"
#include "tfqds/channel.hpp"

using namespace tfqds;

namespace {

ValidatedConfig desk(double km, std::uint64_t N) {
    SourceParams s = oracle::source_302();
    s.total_pulses = N;
    return validate(table1_config(s, km));
}

}  // namespace

TEST_CASE("click probabilities") {
    SUBCASE("no light, no dark counts") {
        const ExclusiveClicks c = click_probabilities(0.0, 0.0, 0.0, 0.5, 1.0, 0.0);
        CHECK(c.d1 == 0.0);
        CHECK(c.d2 == 0.0);
    }
    SUBCASE("equal pulses in phase all reach D1") {
        const double eta = 0.3, v = 0.1;
        const ExclusiveClicks c = click_probabilities(v, v, 0.0, eta, 1.0, 0.0);
        CHECK(c.d1 == doctest::Approx(1.0 - std::exp(-2.0 * eta * v)).epsilon(1e-14));
        CHECK(c.d2 == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("quadrature is symmetric") {
        const ExclusiveClicks c = click_probabilities(0.2, 0.2, std::numbers::pi / 2, 0.4, 1.0, 1e-6);
        CHECK(c.d1 == doctest::Approx(c.d2).epsilon(1e-12));
    }
    SUBCASE("exclusive probabilities never exceed one") {
        for (double mu : {0.0, 0.1, 1.0, 10.0})
            for (int bin = 0; bin < kPhaseBins; bin += 17) {
                const ExclusiveClicks c = click_probabilities(mu, 0.5 * mu, relative_phase(bin, 0), 0.9, 0.96, 0.01);
                CHECK(c.d1 >= 0.0);
                CHECK(c.d2 >= 0.0);
                CHECK(c.effective() <= 1.0);
            }
    }
}

TEST_CASE("phase slices keep 1/M of the circle each") {
    const int M = 16;
    int k0 = 0, k1 = 0;
    for (int d = 0; d < kPhaseBins; ++d) {
        const int s = matched_slice(relative_phase(d, 0), M);
        k0 += s == 0;
        k1 += s == 1;
    }
    CHECK(k0 == kPhaseBins / M);
    CHECK(k1 == kPhaseBins / M);
}

TEST_CASE("expected observables") {
    SUBCASE("all intensities near zero and no dark counts give nothing") {
        LinkConfig c = table1_config(oracle::source_302(), 50.0);
        c.device.dark_count_prob = 0.0;
        c.device.detector_efficiency = 1e-300;
        const LinkObservables o = expected_observables(validate(c));
        CHECK(o.n_oo == 0.0);
        CHECK(o.n_Z == doctest::Approx(0.0));
    }
    SUBCASE("vacuum-vacuum clicks are dark counts") {
        const ValidatedConfig cfg = validate(table1_config(oracle::source_302(), 302.0));
        const double pd = cfg.device().dark_count_prob, po = cfg.source().prob_vacuum;
        const double N = static_cast<double>(cfg.source().total_pulses);
        CHECK(expected_observables(cfg).n_oo == doctest::Approx(N * po * po * 2.0 * pd * (1.0 - pd)).epsilon(1e-6));
    }
    SUBCASE("302 km configuration lands near the published counts") {
        const LinkObservables o = expected_observables(validate(table1_config(oracle::source_302(), 302.0)));
        CHECK(o.n_Z > 17353767556.0 / 2.0);
        CHECK(o.n_Z < 17353767556.0 * 2.0);
        CHECK(std::abs(o.E_Z - 0.282) < 0.05);
    }
    SUBCASE("matched-slice error at perfect visibility stays under the slice-width bound") {
        LinkConfig c = table1_config(oracle::source_302(), 100.0);
        c.device.misalignment = 0.0;
        c.device.dark_count_prob = 0.0;
        const LinkObservables o = expected_observables(validate(c));
        const double delta = 2.0 * std::numbers::pi / c.device.phase_slices;
        REQUIRE(o.n_vv_total > 0.0);
        CHECK(o.m_vv / o.n_vv_total <= std::pow(std::sin(delta / 4.0), 2.0));
    }
}

TEST_CASE("parallel kernels match their serial references exactly") {
    const ValidatedConfig cfg = desk(50.0, 100'000'000ULL);
    const CellCounts a = expected_cells(cfg), b = expected_cells_serial(cfg);
    CHECK(a.d1 == b.d1);
    CHECK(a.d2 == b.d2);
    const CellCounts s = sample_cells(cfg, 42), t = sample_cells_serial(cfg, 42);
    CHECK(s.d1 == t.d1);
    CHECK(s.d2 == t.d2);
}

TEST_CASE("sampled cells stay within the pulse count") {
    const ValidatedConfig cfg = desk(50.0, 1'000'000ULL);
    const CellCounts s = sample_cells(cfg, 9);
    const double N = static_cast<double>(cfg.source().total_pulses);
    for (PulseChoice a : kPulseChoices)
        for (PulseChoice b : kPulseChoices)
            for (int d = 0; d < kPhaseBins; ++d) {
                const std::size_t i = cell_index(a, b, d);
                CHECK_LE(s.d1[i] + s.d2[i], N);
                CHECK_GE(s.d1[i], 0.0);
            }
}

TEST_CASE("simulate_link") {
    const ValidatedConfig cfg = desk(50.0, 20'000'000ULL);
    SUBCASE("deterministic per seed") {
        CHECK(simulate_link(cfg, 5, false).observables == simulate_link(cfg, 5, false).observables);
        CHECK(!(simulate_link(cfg, 5, false).observables == simulate_link(cfg, 6, false).observables));
    }
    SUBCASE("zero pulses give zero counts") {
        const LinkObservables o = simulate_link(desk(50.0, 0), 1, true).observables;
        CHECK(o.n_Z == 0.0);
        CHECK(o.n_oo + o.n_ov + o.n_vo + o.n_ou + o.n_uo == 0.0);
    }
    SUBCASE("raw key error rate equals E_Z bit-exactly") {
        const SimulationResult r = simulate_link(cfg, 11, true);
        REQUIRE(r.raw.has_value());
        const auto& raw = *r.raw;
        REQUIRE(raw.alice_bits.size() == raw.bob_bits.size());
        CHECK(static_cast<double>(raw.alice_bits.size()) == r.observables.n_Z);
        const double errors = static_cast<double>(hamming_distance(raw.alice_bits, raw.bob_bits));
        CHECK(errors / r.observables.n_Z == r.observables.E_Z);
    }
    SUBCASE("AOPP counts respect their ordering") {
        const LinkObservables o = simulate_link(cfg, 3, false).observables;
        CHECK(o.n_Z_prime <= o.n_g);
        CHECK(o.n_g <= std::floor(o.n_Z / 2.0));
        CHECK(o.n_odd <= std::floor(o.n_Z / 2.0));
    }
    SUBCASE("desk scale refuses more than 1e9 pulses") {
        CHECK_THROWS_AS(simulate_link(desk(50.0, 2'000'000'000ULL), 1, true), ResourceLimitError);
    }
}

TEST_CASE("sampled means match the analytic expectation within 4 standard errors") {
    const ValidatedConfig cfg = desk(50.0, 100'000'000ULL);
    const LinkObservables e = expected_observables(cfg);
    const int seeds = 200;
    struct Field {
        const char* name;
        double (*get)(const LinkObservables&);
    };
    const Field fields[] = {
        {"n_oo", [](const LinkObservables& o) { return o.n_oo; }},
        {"n_ov", [](const LinkObservables& o) { return o.n_ov; }},
        {"n_vo", [](const LinkObservables& o) { return o.n_vo; }},
        {"n_ou", [](const LinkObservables& o) { return o.n_ou; }},
        {"n_uo", [](const LinkObservables& o) { return o.n_uo; }},
        {"m_vv", [](const LinkObservables& o) { return o.m_vv; }},
        {"n_Z", [](const LinkObservables& o) { return o.n_Z; }},
        {"Z errors", [](const LinkObservables& o) { return o.E_Z * o.n_Z; }},
    };
    std::vector<LinkObservables> runs;
    for (int s = 0; s < seeds; ++s)
        runs.push_back(simulate_link(cfg, static_cast<std::uint64_t>(1000 + s), false).observables);
    for (const auto& f : fields) {
        double sum = 0.0, sq = 0.0;
        for (const auto& o : runs) {
            const double x = f.get(o);
            sum += x;
            sq += x * x;
        }
        const double mean = sum / seeds;
        const double var = std::max(0.0, (sq - seeds * mean * mean) / (seeds - 1));
        // counts with a tiny mean are Poisson; never trust a zero sample variance
        const double se = std::sqrt(std::max(var, f.get(e)) / seeds);
        INFO(std::string(f.name) << ": mean " << mean << " expected " << f.get(e) << " se " << se);
        CHECK(std::abs(mean - f.get(e)) <= 4.0 * se + 1e-9);
    }
}
