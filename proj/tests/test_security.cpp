#include <doctest.h>

#include <cmath>
#include <string>

#include "support.hpp"
#include "tfqds/security.hpp"

using namespace tfqds;

TEST_CASE("thresholds from min-entropy") {
    SUBCASE("302 km single-bit") {
        const Thresholds t = thresholds_from_entropy(4.78e4, 329841, 5.71e-6);
        CHECK(t.P_e == doctest::Approx(0.0506).epsilon(0.02));
        CHECK(t.s_a == doctest::Approx(0.0174).epsilon(0.02));
        CHECK(t.s_v == doctest::Approx(0.0343).epsilon(0.02));
        CHECK(binary_entropy(t.P_e) == doctest::Approx(2 * 4.78e4 / 329841).epsilon(1e-9));
    }
    SUBCASE("full entropy rate gives one half") {
        CHECK(thresholds_from_entropy(500, 1000, 1e-3).P_e == doctest::Approx(0.5));
    }
    SUBCASE("no entropy leaves no margin") {
        CHECK_THROWS_AS(thresholds_from_entropy(0, 1000, 1e-3), NoSecurityMargin);
    }
}

TEST_CASE("single-bit security") {
    const PoolStats pool = oracle::weaker_302();
    const SecurityBudget budget;
    SUBCASE("published length meets the security level") {
        const SecurityReport r = evaluate_security(pool, 329841, Scheme::single_bit, 1, budget);
        CHECK(r.eps_achieved <= 1.5e-10);
        CHECK(r.eps_rob == doctest::Approx(2e-12));
        CHECK(r.eps_achieved == std::max({r.eps_rob, r.eps_rep, r.eps_forge}));
        CHECK(r.thresholds.has_value());
    }
    SUBCASE("repudiation bound falls with L") {
        double previous = 3.0;
        for (double L : {2e4, 4e4, 8e4, 1.6e5}) {
            const SecurityReport r = evaluate_security(pool, L, Scheme::single_bit, 1, budget);
            CHECK(r.eps_rep < previous);
            previous = r.eps_rep;
        }
    }
    SUBCASE("thresholds without a gap void the bound") {
        const SubsetBounds sb = subset_bounds(pool, 329841, Scheme::single_bit, budget.eps_p);
        PoolStats flat = pool;
        flat.E_Z_prime = 0.4999;
        const SecurityReport r = single_bit_security(329841, flat, sb, budget);
        CHECK(r.eps_achieved >= 1.0);
        CHECK((r.has_flag("no_security_margin") || r.has_flag("degenerate_entropy")));
    }
}

TEST_CASE("multi-bit security") {
    const PoolStats pool = oracle::weaker_302();
    const SecurityBudget budget;
    const SubsetBounds sb = subset_bounds(pool, 832, Scheme::multi_bit, budget.eps_p);
    const SecurityReport big = multi_bit_security(832, 1e6, pool, sb, budget);
    const SecurityReport one = multi_bit_security(832, 1, pool, sb, budget);
    CHECK(big.eps_forge == doctest::Approx(one.eps_forge * 1e6).epsilon(1e-12));
    CHECK(big.eps_forge <= 1e-10);
    CHECK(big.eps_forge == doctest::Approx(1e6 * std::pow(2.0, -2.0 - big.H_L)).epsilon(1e-12));
    CHECK(big.eps_rob == doctest::Approx(4e-12));
    CHECK(big.eps_rep == doctest::Approx(2e-12));
    CHECK(!big.thresholds.has_value());
}

TEST_CASE("minimum signature length") {
    const SecurityBudget budget;
    struct Row {
        PoolStats pool;
        Scheme scheme;
        double published;
    };
    const Row rows[] = {
        {oracle::weaker_302(), Scheme::single_bit, 329841},
        {oracle::weaker_302(), Scheme::multi_bit, 832},
        {oracle::weaker_504(), Scheme::single_bit, 689647},
        {oracle::weaker_504(), Scheme::multi_bit, 1148},
    };
    for (const auto& r : rows) {
        const SecurityReport rep = min_signature_length(r.pool, r.scheme, 1e6, budget);
        INFO(to_string(r.scheme) << " published " << r.published << " found " << rep.L);
        CHECK(rep.L == doctest::Approx(r.published).epsilon(0.1));
        CHECK(rep.eps_achieved <= budget.epsilon_total);
        const double step = r.scheme == Scheme::single_bit ? 2.0 : 1.0;
        CHECK(evaluate_security(r.pool, rep.L - step, r.scheme, 1e6, budget).eps_achieved > budget.epsilon_total);
    }
}

TEST_CASE("a pool too small for any signature is infeasible") {
    const PoolStats tiny = pool_from_values(200, 1e-3, 80, 0.06);
    CHECK_THROWS_AS(min_signature_length(tiny, Scheme::multi_bit, 1e6, SecurityBudget{}), Infeasible);
}

TEST_CASE("signature rate") {
    const SignatureRate single = signature_rate(3514754061.0, 3507806729.0, 329841, 1e14, 1e9);
    CHECK(single.per_second == doctest::Approx(0.0532).epsilon(0.01));
    const SignatureRate multi = signature_rate(50279301.0, 51913395.0, 1148, 1e14, 1e9);
    CHECK(multi.per_second == doctest::Approx(0.219).epsilon(0.01));
    const SignatureRate none = signature_rate(0, 5, 10, 1e14, 1e9);
    CHECK(none.per_run == 0.0);
    CHECK(none.per_second == 0.0);
}

TEST_CASE("optimizer") {
    const DeviceParams device;
    const SecurityBudget budget;
    const OptimizationResult far = optimize_parameters(device, 302.0, Scheme::multi_bit, 1e6, budget);
    INFO("302 km multi-bit optimum " << far.best.rate << " tps");
    CHECK(far.best.feasible);
    CHECK(far.best.rate >= 21.1 / 2);
    CHECK(far.best.rate <= 21.1 * 2);

    SUBCASE("deterministic and schedule independent") {
        const OptimizationResult again = optimize_parameters(device, 302.0, Scheme::multi_bit, 1e6, budget);
        const OptimizationResult serial = optimize_parameters_serial(device, 302.0, Scheme::multi_bit, 1e6, budget);
        CHECK(again.best.rate == far.best.rate);
        CHECK(serial.best.rate == far.best.rate);
        CHECK(serial.source == far.source);
    }
    SUBCASE("no loss beats 302 km") {
        DeviceParams quiet = device;
        quiet.dark_count_prob = 0.0;
        const OptimizationResult near = optimize_parameters(quiet, 0.0, Scheme::multi_bit, 1e6, budget);
        CHECK(near.best.rate > far.best.rate);
    }
}

TEST_CASE("optimized curves fall with distance") {
    CurveOptions opt;
    opt.min_km = 0.0;
    opt.max_km = 600.0;
    opt.step_km = 50.0;
    const auto curve = optimized_rate_curve(DeviceParams{}, SecurityBudget{}, opt);
    REQUIRE(curve.size() == 13);
    for (std::size_t i = 1; i < curve.size(); ++i) {
        INFO("at " << curve[i].distance_km << " km");
        CHECK(curve[i].rate_single_bps <= curve[i - 1].rate_single_bps);
        CHECK(curve[i].rate_multi_tps <= curve[i - 1].rate_multi_tps);
    }
    CHECK(curve.front().rate_multi_tps > 0.0);
    CHECK_THROWS_AS(optimized_rate_curve(DeviceParams{}, SecurityBudget{}, CurveOptions{10, 5, 1}), ValidationError);
}
