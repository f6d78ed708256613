// tfqds: estimation from fixtures, link simulation, parameter optimization,
// protocol demos, reproduction of the published results and rate curves.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tfqds/channel.hpp"
#include "tfqds/estimation.hpp"
#include "tfqds/harness.hpp"
#include "tfqds/io.hpp"
#include "tfqds/params.hpp"
#include "tfqds/security.hpp"

using namespace tfqds;

namespace {

enum Exit { kOk = 0, kValidation = 1, kInfeasible = 2, kDiff = 3 };

struct Options {
    std::string config;
    std::string fixture;
    std::uint64_t seed = 1;
    std::string out;
    std::string scheme;
    double message_bits = 0.0;
    std::string attack;
    std::string device = "table1";
    std::vector<std::string> overrides;
    double max_km = 600.0;
    double step_km = 2.0;
};

void write_output(const Options& o, const std::string& text) {
    if (o.out.empty() || o.out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw ValidationError("cannot write '" + o.out + "'");
    f << text;
}

// --set section.key=value, applied to a config document before parsing.
void apply_overrides(Json& doc, const std::vector<std::string>& overrides) {
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        const auto dot = item.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ValidationError("override '" + item + "' must look like section.key=value");
        const std::string section = item.substr(0, dot), key = item.substr(dot + 1, eq - dot - 1);
        const std::string value = item.substr(eq + 1);
        Json parsed;
        try {
            parsed = Json::parse(value);
        } catch (const Json::parse_error&) {
            parsed = value;
        }
        doc[section][key] = parsed;
    }
}

Json config_document(const Options& o) {
    Json doc = o.config.empty() ? Json::object() : load_json(o.config);
    apply_overrides(doc, o.overrides);
    return doc;
}

std::vector<Scheme> schemes_of(const Options& o) {
    if (o.scheme.empty()) return {Scheme::single_bit, Scheme::multi_bit};
    try {
        return {scheme_from_string(o.scheme)};
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("--scheme: ") + e.what());
    }
}

double message_bits_for(Scheme scheme, const Options& o, double fixture_bits) {
    if (scheme == Scheme::single_bit) return 1.0;
    return o.message_bits > 0.0 ? o.message_bits : fixture_bits;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------- estimate

int cmd_estimate(const Options& o) {
    if (o.fixture.empty()) throw ValidationError("estimate needs --fixture");
    const Table2Fixture f = load_fixture(o.fixture);
    const ValidatedConfig cfg = validate(f.config);
    Json doc;
    doc["fixture"] = f.name;
    std::vector<PoolStats> pools;
    for (const auto& [name, obs] : f.links) {
        if (!(obs.n_Z > 0.0) || !(obs.n_ov + obs.n_vo + obs.m_vv > 0.0))
            throw DegenerateStatistics("zero statistics on link " + name +
                                       ": no Z-basis or decoy counts to estimate from");
        Json link;
        link["observables"] = observables_to_json(obs);
        const PreAoppEstimates pre = estimate_pre_aopp(obs, cfg);
        link["pre_aopp"] = pre_aopp_to_json(pre);
        PoolStats pool;
        if (obs.n_g > 0.0 && obs.n_odd > 0.0) {
            pool = aopp_estimates(pre, obs, cfg.budget());
            link["pool_source"] = "aopp_estimates";
        } else if (f.post_aopp.count(name)) {
            pool = f.post_aopp.at(name);
            link["pool_source"] = "published post-AOPP values";
        } else {
            throw DegenerateStatistics("link " + name + " has neither AOPP counts nor post-AOPP values");
        }
        if (pool.degenerate) throw DegenerateStatistics("link " + name + ": AOPP estimates are degenerate");
        link["pool"] = pool_to_json(pool);
        doc["links"][name] = link;
        pools.push_back(pool);
    }
    if (pools.empty()) throw ValidationError("fixture has no links");
    PoolStats weak = pools.front();
    for (const auto& p : pools) weak = weaker_pool(weak, p);
    doc["weaker_pool"] = pool_to_json(weak);

    int status = kOk;
    for (const Scheme scheme : schemes_of(o)) {
        const double m = message_bits_for(scheme, o, f.message_bits);
        Json entry;
        try {
            const SecurityReport rep = min_signature_length(weak, scheme, m, cfg.budget());
            entry["report"] = report_to_json(rep);
            const SignatureRate r =
                signature_rate(weak.n_Z_prime, weak.n_Z_prime, rep.L,
                               static_cast<double>(cfg.source().total_pulses), cfg.device().clock_rate);
            entry["rate"] = {{"per_run", r.per_run}, {"per_second", r.per_second}};
        } catch (const Infeasible& e) {
            entry["infeasible"] = {{"reason", e.what()}, {"best_eps", e.best_eps()}};
            std::cerr << "estimate: " << e.what() << "\n";
            status = kInfeasible;
        }
        doc["schemes"][to_string(scheme)] = entry;
    }
    write_output(o, doc.dump(2) + "\n");
    return status;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Options& o) {
    const Json doc = config_document(o);
    const ValidatedConfig cfg = validate(config_from_json(doc));
    const bool desk = cfg.source().total_pulses <= kDeskScaleMaxPulses;
    const SimulationResult sim = simulate_link(cfg, o.seed, desk);
    Json out;
    out["config"] = config_to_json(cfg.config());
    out["seed"] = o.seed;
    out["observables"] = observables_to_json(sim.observables);
    out["expected"] = observables_to_json(expected_observables(cfg));
    const PreAoppEstimates pre = estimate_pre_aopp(sim.observables, cfg);
    out["pre_aopp"] = pre_aopp_to_json(pre);
    try {
        out["pool"] = pool_to_json(aopp_estimates(pre, sim.observables, cfg.budget()));
    } catch (const DegenerateStatistics& e) {
        out["pool_error"] = e.what();
    }
    if (sim.raw) out["raw_key_bits"] = sim.raw->alice_bits.size();
    write_output(o, out.dump(2) + "\n");
    return kOk;
}

// ---------------------------------------------------------------- optimize

int cmd_optimize(const Options& o) {
    const Json doc = config_document(o);
    const LinkConfig base = config_from_json(doc);
    Json out = Json::object();
    int status = kOk;
    for (const Scheme scheme : schemes_of(o)) {
        const double m = message_bits_for(scheme, o, 1e6);
        OptimizerOptions opt;
        opt.starts = default_start_grid(base.source_a.total_pulses);
        if (!o.config.empty() && doc.contains("source")) opt.starts.push_back(base.source_a);
        Json entry;
        try {
            const OptimizationResult r =
                optimize_parameters(base.device, base.fiber_length_km, scheme, m, base.budget, opt);
            LinkConfig best = base;
            best.source_a = best.source_b = r.source;
            entry = config_to_json(best);
            entry["result"] = {{"scheme", to_string(scheme)}, {"message_bits", m},        {"rate", r.best.rate},
                               {"L", r.best.L},              {"eps_achieved", r.best.eps_achieved},
                               {"evaluations", r.evaluations}};
        } catch (const Infeasible& e) {
            entry["infeasible"] = {{"reason", e.what()}, {"best_eps", e.best_eps()}};
            std::cerr << "optimize: " << e.what() << "\n";
            status = kInfeasible;
        }
        out[to_string(scheme)] = entry;
    }
    write_output(o, out.dump(2) + "\n");
    return status;
}

// ---------------------------------------------------------------- demo

int cmd_demo(const Options& o) {
    Scenario s;
    if (!o.config.empty()) {
        s = scenario_from_json(config_document(o));
    } else {
        const Scheme scheme = o.scheme.empty() ? Scheme::multi_bit : schemes_of(o).front();
        s = desk_scenario(scheme, o.seed);
        if (!o.overrides.empty()) s = scenario_from_json([&] {
            Json d = scenario_to_json(s);
            apply_overrides(d, o.overrides);
            return d;
        }());
    }
    if (!o.scheme.empty() && !o.config.empty()) s.scheme = schemes_of(o).front();
    if (o.message_bits > 0.0) {
        Rng rng = substream(s.seed, 0x3E55A6E);
        s.message = random_bits(static_cast<std::size_t>(o.message_bits), rng);
    }
    if (!o.attack.empty()) {
        Attack a;
        try {
            a = attack_from_string(o.attack);
        } catch (const std::invalid_argument& e) {
            throw ValidationError(std::string("--attack: ") + e.what());
        }
        s = inject_attack(s, a);
    }
    const Transcript t = run_protocol(s);
    write_output(o, transcript_to_jsonl(t));
    for (const auto& v : t.verdicts)
        std::cerr << v.verifier << ": " << (v.accept ? "accept" : "reject") << (v.reason.empty() ? "" : " (")
                  << v.reason << (v.reason.empty() ? "" : ")") << "\n";
    if (t.aborted) {
        std::cerr << "demo: protocol aborted: " << t.abort_reason << "\n";
        return kInfeasible;
    }
    return kOk;
}

// ---------------------------------------------------------------- reproduce

class DiffReport {
public:
    // Relative tolerance when rel is true, absolute otherwise.
    void check(const std::string& label, double computed, double expected, double tol, bool rel) {
        const double dev = rel ? std::abs(computed - expected) / std::abs(expected) : std::abs(computed - expected);
        const bool ok = dev <= tol;
        all_ok_ = all_ok_ && ok;
        std::ostringstream line;
        line << (ok ? "PASS " : "FAIL ") << label << ": computed " << fmt(computed) << ", expected " << fmt(expected)
             << ", tolerance " << (rel ? "±" + fmt(tol * 100) + "%" : "±" + fmt(tol));
        lines_.push_back(line.str());
    }
    void note(const std::string& text) { lines_.push_back("NOTE " + text); }
    void fail(const std::string& text) {
        all_ok_ = false;
        lines_.push_back("FAIL " + text);
    }
    bool ok() const { return all_ok_; }
    std::string text() const {
        std::string s;
        for (const auto& l : lines_) s += l + "\n";
        return s;
    }

private:
    bool all_ok_ = true;
    std::vector<std::string> lines_;
};

int cmd_reproduce(const Options& o) {
    if (o.fixture.empty()) throw ValidationError("reproduce needs --fixture");
    const Table2Fixture f = load_fixture(o.fixture);
    const ValidatedConfig cfg = validate(f.config);
    const SecurityBudget& b = cfg.budget();
    const double N = static_cast<double>(cfg.source().total_pulses);
    const double clock = cfg.device().clock_rate;
    DiffReport d;
    d.note("fixture " + f.name);

    for (const auto& [name, obs] : f.links) {
        const PreAoppEstimates pre = estimate_pre_aopp(obs, cfg);
        if (f.published_n_1.count(name)) d.check("n_1[" + name + "]", pre.n_1, f.published_n_1.at(name), 0.015, true);
        if (f.published_e_ph.count(name))
            d.check("e_ph[" + name + "]", pre.e_ph, f.published_e_ph.at(name), 0.0015, false);
    }
    if (f.post_aopp.size() < 2) {
        d.fail("fixture lacks post-AOPP values for both links");
        write_output(o, d.text());
        return kDiff;
    }
    const PoolStats& ab = f.post_aopp.at("AB");
    const PoolStats& ac = f.post_aopp.at("AC");
    const PoolStats weak = weaker_pool(ab, ac);

    const SubsetBounds s1 = subset_bounds(weak, f.L_single, Scheme::single_bit, b.eps_p);
    d.check("n1_L (single)", s1.n1_L, f.n1_L_single, 0.01, true);
    d.check("eph_L (single)", s1.eph_L, f.eph_L_single, 0.0015, false);
    const SubsetBounds s2 = subset_bounds(weak, f.L_multi, Scheme::multi_bit, b.eps_p);
    d.check("n1_L (multi)", s2.n1_L, f.n1_L_multi, 3.0, false);
    d.check("eph_L (multi)", s2.eph_L, f.eph_L_multi, 0.01, false);

    d.check("rate single (bps)", signature_rate(ab.n_Z_prime, ac.n_Z_prime, f.L_single, N, clock).per_second,
            f.rate_single_bps, 0.01, true);
    d.check("rate multi (tps)", signature_rate(ab.n_Z_prime, ac.n_Z_prime, f.L_multi, N, clock).per_second,
            f.rate_multi_tps, 0.01, true);
    if (f.printed_n_Z_prime_ab) {
        const double literal =
            signature_rate(*f.printed_n_Z_prime_ab, ac.n_Z_prime, f.L_multi, N, clock).per_second;
        const bool misses = std::abs(literal - f.rate_multi_tps) / f.rate_multi_tps > 0.01;
        d.note("printed n'_Z[AB] = " + fmt(*f.printed_n_Z_prime_ab) + " gives rate multi " + fmt(literal) +
               " tps instead of " + fmt(f.rate_multi_tps) + (misses ? "; the corrected value " : "; ") +
               fmt(ab.n_Z_prime) + (misses ? " is required" : " is not distinguishable"));
        if (!misses) d.fail("printed n'_Z[AB] unexpectedly reproduces the published rate");
    }

    for (const auto& [scheme, published] :
         {std::pair{Scheme::single_bit, f.L_single}, std::pair{Scheme::multi_bit, f.L_multi}}) {
        const double m = scheme == Scheme::single_bit ? 1.0 : f.message_bits;
        try {
            const SecurityReport rep = min_signature_length(weak, scheme, m, b);
            d.check(std::string("min L (") + to_string(scheme) + ")", rep.L, published, 0.10, true);
            std::string flags;
            for (const auto& fl : rep.flags) flags += (flags.empty() ? "" : ",") + fl;
            if (!flags.empty()) d.note(std::string("flags (") + to_string(scheme) + "): " + flags);
        } catch (const Infeasible& e) {
            d.fail(std::string("min L (") + to_string(scheme) + "): " + e.what());
        }
    }
    d.note(d.ok() ? "all checks within tolerance" : "reproduction differs from the published values");
    write_output(o, d.text());
    return d.ok() ? kOk : kDiff;
}

// ---------------------------------------------------------------- curves

int cmd_curves(const Options& o) {
    LinkConfig base;
    if (o.device != "table1") {
        const Json doc = load_json(o.device);
        base = config_from_json(doc, {"name", "note"});
    }
    if (!o.config.empty()) base = config_from_json(config_document(o));
    validate(base);
    CurveOptions opt;
    opt.max_km = o.max_km;
    opt.step_km = o.step_km;
    opt.total_pulses = base.source_a.total_pulses;
    if (o.message_bits > 0.0) opt.message_bits = o.message_bits;
    const auto curve = optimized_rate_curve(base.device, base.budget, opt);
    std::string csv = "distance_km,rate_single_bps,rate_multi_tps\n";
    for (const auto& p : curve) csv += fmt(p.distance_km) + "," + fmt(p.rate_single_bps) + "," + fmt(p.rate_multi_tps) + "\n";
    write_output(o, csv);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Twin-field quantum digital signatures: estimation, simulation and protocol runs"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", o.out, "Output file (default: stdout)");
    };
    auto* estimate = app.add_subcommand("estimate", "Observed counts fixture -> pool statistics and security report");
    estimate->add_option("--fixture", o.fixture, "Fixture name or path")->required();
    estimate->add_option("--scheme", o.scheme, "single or multi (default: both)");
    estimate->add_option("--message-bits", o.message_bits, "Multi-bit message length");
    add_common(estimate);

    auto* simulate = app.add_subcommand("simulate", "Sample one link's observed counts");
    simulate->add_option("--config", o.config, "Config document");
    simulate->add_option("--set", o.overrides, "Override section.key=value");
    simulate->add_option("--seed", o.seed, "Seed");
    add_common(simulate);

    auto* optimize = app.add_subcommand("optimize", "Optimize source parameters for the signature rate");
    optimize->add_option("--config", o.config, "Config document (device, link, security)");
    optimize->add_option("--set", o.overrides, "Override section.key=value");
    optimize->add_option("--scheme", o.scheme, "single or multi (default: both)");
    optimize->add_option("--message-bits", o.message_bits, "Multi-bit message length (default 1e6)");
    add_common(optimize);

    auto* demo = app.add_subcommand("demo", "Run the four-party protocol at desk scale");
    demo->add_option("--config", o.config, "Scenario document");
    demo->add_option("--set", o.overrides, "Override section.key=value");
    demo->add_option("--scheme", o.scheme, "single or multi");
    demo->add_option("--seed", o.seed, "Seed (without --config)");
    demo->add_option("--message-bits", o.message_bits, "Random message of this length");
    demo->add_option("--attack", o.attack,
                     "none, tamper_message, tamper_signature, repudiate or forge_without_keys");
    add_common(demo);

    auto* reproduce = app.add_subcommand("reproduce", "Diff one published distance against the published values");
    reproduce->add_option("--fixture", o.fixture, "table2_302km, table2_504km or a path")->required();
    add_common(reproduce);

    auto* curves = app.add_subcommand("curves", "Optimized rates against distance as CSV");
    curves->add_option("--device", o.device, "table1 or a config document");
    curves->add_option("--config", o.config, "Config document");
    curves->add_option("--set", o.overrides, "Override section.key=value");
    curves->add_option("--message-bits", o.message_bits, "Multi-bit message length (default 1e6)");
    curves->add_option("--max-km", o.max_km, "Largest distance (default 600)");
    curves->add_option("--step-km", o.step_km, "Distance step (default 2)");
    add_common(curves);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }

    try {
        if (*estimate) return cmd_estimate(o);
        if (*simulate) return cmd_simulate(o);
        if (*optimize) return cmd_optimize(o);
        if (*demo) return cmd_demo(o);
        if (*reproduce) return cmd_reproduce(o);
        if (*curves) return cmd_curves(o);
    } catch (const Infeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const InsufficientPool& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const DegenerateStatistics& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    }
    return kValidation;
}
