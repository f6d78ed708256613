#include "tfqds/security.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "tfqds/channel.hpp"

namespace tfqds {

bool SecurityReport::has_flag(const std::string& flag) const {
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

Thresholds thresholds_from_entropy(double H_L, double L, double E_Z_prime) {
    if (!(L > 0.0)) throw std::invalid_argument("thresholds_from_entropy: L must be positive");
    if (!(H_L > 0.0)) throw NoSecurityMargin("min-entropy is not positive");
    if (!(E_Z_prime >= 0.0 && E_Z_prime < 0.5)) throw NoSecurityMargin("E'_Z leaves no room below 0.5");
    const double target = std::min(1.0, 2.0 * H_L / L);
    if (binary_entropy(E_Z_prime) >= target) throw NoSecurityMargin("P_e does not exceed E'_Z");

    double lo = E_Z_prime, hi = 0.5;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (binary_entropy(mid) < target ? lo : hi) = mid;
    }
    Thresholds t;
    t.P_e = target >= 1.0 ? 0.5 : 0.5 * (lo + hi);
    t.s_a = E_Z_prime + (t.P_e - E_Z_prime) / 3.0;
    t.s_v = E_Z_prime + 2.0 * (t.P_e - E_Z_prime) / 3.0;
    return t;
}

namespace {

void finish(SecurityReport& r) { r.eps_achieved = std::max({r.eps_rob, r.eps_rep, r.eps_forge}); }

}  // namespace

SecurityReport single_bit_security(double L, const PoolStats& pool, const SubsetBounds& subset,
                                   const SecurityBudget& budget) {
    SecurityReport r;
    r.scheme = Scheme::single_bit;
    r.L = L;
    r.subset = subset;
    r.flags.push_back("P_e_inferred");
    r.eps_rob = 2.0 * budget.eps_pe;
    r.failure_budget = {{"subset.n1", subset.failure_n1},
                        {"subset.eph", subset.failure_eph},
                        {"g", budget.g},
                        {"eps_PE", budget.eps_pe}};

    const MinEntropy h = min_entropy(subset, pool, budget);
    r.H_L = h.value;
    if (h.degenerate) {
        r.flags.push_back("degenerate_entropy");
        r.eps_rep = 1.0;
        r.eps_forge = 1.0;
        r.eps_forge_literal = 1.0;
        finish(r);
        return r;
    }
    Thresholds t;
    try {
        t = thresholds_from_entropy(h.value, L, pool.E_Z_prime);
    } catch (const NoSecurityMargin&) {
        r.flags.push_back("no_security_margin");
        r.eps_rep = 1.0;
        r.eps_forge = 1.0;
        r.eps_forge_literal = 1.0;
        finish(r);
        return r;
    }
    r.thresholds = t;

    const double gap = t.s_v - t.s_a;
    r.eps_rep = 2.0 * std::exp(-0.25 * gap * gap * L);
    if (gap <= 0.0) r.flags.push_back("eps_rep_vacuous");

    const double exponent = h.value - (L / 2.0) * binary_entropy(t.s_v);
    const double tail = std::exp2(-exponent);
    const double eps_f = tail / budget.g + budget.eps_p;
    r.eps_forge_literal = (tail + budget.eps_p) / budget.g;
    if (r.eps_forge_literal >= 1.0) r.flags.push_back("forgery_literal_vacuous");
    r.eps_forge = std::min(1.0, budget.g + eps_f + budget.eps_pe + subset.failure_n1 + subset.failure_eph);
    finish(r);
    return r;
}

SecurityReport multi_bit_security(double L, double message_bits, const PoolStats& pool, const SubsetBounds& subset,
                                  const SecurityBudget& budget) {
    SecurityReport r;
    r.scheme = Scheme::multi_bit;
    r.L = L;
    r.message_bits = message_bits;
    r.subset = subset;
    r.eps_rob = 2.0 * budget.eps_cor + 2.0 * budget.eps_prime;
    r.eps_rep = 2.0 * budget.eps_prime;
    r.failure_budget = {{"subset.n1", subset.failure_n1},
                        {"subset.eph", subset.failure_eph},
                        {"eps_cor", budget.eps_cor},
                        {"eps_prime", budget.eps_prime}};

    const MinEntropy h = min_entropy(subset, pool, budget);
    r.H_L = h.value;
    if (h.degenerate) {
        r.flags.push_back("degenerate_entropy");
        r.eps_forge = 1.0;
    } else {
        r.eps_forge = std::min(1.0, message_bits * std::exp2(-2.0 - h.value));
    }
    finish(r);
    return r;
}

SecurityReport evaluate_security(const PoolStats& pool, double L, Scheme scheme, double message_bits,
                                 const SecurityBudget& budget) {
    SubsetBounds sb;
    try {
        sb = subset_bounds(pool, L, scheme, budget.eps_p);
    } catch (const DomainError&) {
        SecurityReport r;
        r.scheme = scheme;
        r.L = L;
        r.message_bits = message_bits;
        r.flags.push_back("degenerate_subset");
        return r;
    } catch (const std::runtime_error&) {
        // DegenerateStatistics or InsufficientPool
        SecurityReport r;
        r.scheme = scheme;
        r.L = L;
        r.message_bits = message_bits;
        r.flags.push_back("degenerate_subset");
        return r;
    }
    return scheme == Scheme::single_bit ? single_bit_security(L, pool, sb, budget)
                                        : multi_bit_security(L, message_bits, pool, sb, budget);
}

SecurityReport min_signature_length(const PoolStats& pool, Scheme scheme, double message_bits,
                                    const SecurityBudget& budget) {
    // largest L whose draw stays strictly inside the pool
    const double bound = scheme == Scheme::single_bit ? 2.0 * pool.n_Z_prime : pool.n_Z_prime;
    const double max_L = std::ceil(bound) - 1.0;
    if (max_L < 2.0) throw Infeasible("key pool too small for any signature", 1.0);

    double best_eps = 1.0;
    auto secure = [&](double L) {
        SecurityReport r = evaluate_security(pool, L, scheme, message_bits, budget);
        best_eps = std::min(best_eps, r.eps_achieved);
        return r.eps_achieved <= budget.epsilon_total;
    };

    double lo = 1.0, hi = 2.0;
    while (!secure(hi)) {
        lo = hi;
        if (hi >= max_L) throw Infeasible("no signature length within the pool meets epsilon_total", best_eps);
        hi = std::min(2.0 * hi, max_L);
    }
    while (hi - lo > 1.0) {
        const double mid = std::floor(0.5 * (lo + hi));
        (secure(mid) ? hi : lo) = mid;
    }
    return evaluate_security(pool, hi, scheme, message_bits, budget);
}

SignatureRate signature_rate(double n_pool_ab, double n_pool_ac, double L, double total_pulses, double clock_rate) {
    const double pool = std::min(n_pool_ab, n_pool_ac);
    if (!(pool > 0.0) || !(L > 0.0) || !(total_pulses > 0.0) || !(clock_rate > 0.0)) return {};
    SignatureRate r;
    r.per_run = pool / (2.0 * L);
    r.per_second = r.per_run / (total_pulses / clock_rate);
    return r;
}

PoolStats expected_pool(const ValidatedConfig& cfg) {
    const LinkObservables obs = expected_observables(cfg);
    return aopp_estimates(estimate_pre_aopp(obs, cfg), obs, cfg.budget());
}

RateEvaluation evaluate_rate(const DeviceParams& device, const SourceParams& source, double fiber_length_km,
                             Scheme scheme, double message_bits, const SecurityBudget& budget) {
    RateEvaluation out;
    LinkConfig link;
    link.device = device;
    link.source_a = source;
    link.source_b = source;
    link.fiber_length_km = fiber_length_km;
    link.budget = budget;
    try {
        const ValidatedConfig cfg = validate(link);
        const PoolStats pool = expected_pool(cfg);
        if (pool.degenerate) return out;
        const SecurityReport rep = min_signature_length(pool, scheme, message_bits, budget);
        out.L = rep.L;
        out.eps_achieved = rep.eps_achieved;
        out.feasible = true;
        out.rate = signature_rate(pool.n_Z_prime, pool.n_Z_prime, rep.L, static_cast<double>(source.total_pulses),
                                  device.clock_rate)
                       .per_second;
    } catch (const Infeasible& e) {
        out.eps_achieved = e.best_eps();
    } catch (const ValidationError&) {
        out.eps_achieved = 2.0;
    } catch (const DegenerateStatistics&) {
        out.eps_achieved = 1.5;
    } catch (const DomainError&) {
        out.eps_achieved = 1.5;
    }
    return out;
}

// ---------------------------------------------------------------- optimizer

namespace {

constexpr int kCoordinates = 5;

double& coordinate(SourceParams& s, int i) {
    switch (i) {
        case 0: return s.signal_intensity;
        case 1: return s.decoy_intensity;
        case 2: return s.prob_vacuum;
        case 3: return s.prob_decoy;
        default: return s.prob_signal_window_send;
    }
}

// Feasible points rank by rate; infeasible ones by how close they came.
double score(const RateEvaluation& e) { return e.feasible ? e.rate : -e.eps_achieved; }

OptimizationResult descend(const DeviceParams& device, double km, Scheme scheme, double m,
                           const SecurityBudget& budget, const SourceParams& start, const OptimizerOptions& opt) {
    OptimizationResult res;
    res.source = start;
    res.best = evaluate_rate(device, start, km, scheme, m, budget);
    res.evaluations = 1;
    double best_score = score(res.best);
    double step = opt.initial_step;
    for (int sweep = 0; sweep < opt.max_sweeps && step >= opt.final_step; ++sweep) {
        bool improved = false;
        for (int c = 0; c < kCoordinates; ++c) {
            for (const double factor : {1.0 + step, 1.0 / (1.0 + step)}) {
                SourceParams trial = res.source;
                coordinate(trial, c) *= factor;
                const RateEvaluation e = evaluate_rate(device, trial, km, scheme, m, budget);
                ++res.evaluations;
                if (score(e) > best_score) {
                    best_score = score(e);
                    res.best = e;
                    res.source = trial;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) step /= 2.0;
    }
    return res;
}

OptimizationResult pick_best(const std::vector<OptimizationResult>& runs, double km, Scheme scheme) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < runs.size(); ++i)
        if (score(runs[i].best) > score(runs[best].best)) best = i;
    OptimizationResult out = runs[best];
    for (const auto& r : runs)
        if (&r != &runs[best]) out.evaluations += r.evaluations;
    if (!out.best.feasible)
        throw Infeasible("no feasible parameters at " + std::to_string(km) + " km for the " +
                             std::string(to_string(scheme)) + "-bit scheme",
                         out.best.eps_achieved);
    return out;
}

}  // namespace

std::vector<SourceParams> default_start_grid(std::uint64_t total_pulses) {
    std::vector<SourceParams> grid;
    for (const double u : {0.25, 0.45}) {
        for (const double v : {0.03, 0.1}) {
            SourceParams s;
            s.signal_intensity = u;
            s.decoy_intensity = v;
            s.prob_vacuum = 0.02;
            s.prob_decoy = 0.04;
            s.prob_signal_window_send = 0.28;
            s.total_pulses = total_pulses;
            grid.push_back(s);
        }
    }
    SourceParams table;  // the 302 km row
    table.total_pulses = total_pulses;
    grid.push_back(table);
    return grid;
}

OptimizationResult optimize_parameters(const DeviceParams& device, double fiber_length_km, Scheme scheme,
                                       double message_bits, const SecurityBudget& budget,
                                       const OptimizerOptions& options) {
    const std::vector<SourceParams> starts =
        options.starts.empty() ? default_start_grid(SourceParams{}.total_pulses) : options.starts;
    std::vector<OptimizationResult> runs(starts.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < starts.size(); ++i)
        runs[i] = descend(device, fiber_length_km, scheme, message_bits, budget, starts[i], options);
    return pick_best(runs, fiber_length_km, scheme);
}

OptimizationResult optimize_parameters_serial(const DeviceParams& device, double fiber_length_km, Scheme scheme,
                                              double message_bits, const SecurityBudget& budget,
                                              const OptimizerOptions& options) {
    const std::vector<SourceParams> starts =
        options.starts.empty() ? default_start_grid(SourceParams{}.total_pulses) : options.starts;
    std::vector<OptimizationResult> runs;
    for (const auto& s : starts) runs.push_back(descend(device, fiber_length_km, scheme, message_bits, budget, s, options));
    return pick_best(runs, fiber_length_km, scheme);
}

// ---------------------------------------------------------------- curves

namespace {

std::vector<RateEvaluation> sweep_scheme(const DeviceParams& device, const SecurityBudget& budget,
                                         const std::vector<double>& km, Scheme scheme, const CurveOptions& opt,
                                         std::vector<SourceParams>& chosen) {
    const std::size_t n = km.size();
    std::vector<RateEvaluation> rate(n);
    chosen.assign(n, SourceParams{});
    OptimizerOptions full;
    full.starts = default_start_grid(opt.total_pulses);
    bool cut_off = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (cut_off) continue;
        OptimizerOptions warm;
        warm.initial_step = 0.1;
        if (i > 0 && rate[i - 1].feasible) warm.starts = {chosen[i - 1]};
        const OptimizerOptions& use = warm.starts.empty() ? full : warm;
        try {
            const OptimizationResult r = optimize_parameters(device, km[i], scheme, opt.message_bits, budget, use);
            rate[i] = r.best;
            chosen[i] = r.source;
        } catch (const Infeasible&) {
            if (&use == &full) {
                cut_off = true;  // longer fiber only loses more
                continue;
            }
            try {
                const OptimizationResult r = optimize_parameters(device, km[i], scheme, opt.message_bits, budget, full);
                rate[i] = r.best;
                chosen[i] = r.source;
            } catch (const Infeasible&) {
                cut_off = true;
            }
        }
    }
    // carry parameters from longer distances back where they do better
    for (std::size_t i = n - 1; i-- > 0;) {
        if (!rate[i + 1].feasible) continue;
        const RateEvaluation e = evaluate_rate(device, chosen[i + 1], km[i], scheme, opt.message_bits, budget);
        if (e.feasible && e.rate > rate[i].rate) {
            rate[i] = e;
            chosen[i] = chosen[i + 1];
        }
    }
    return rate;
}

}  // namespace

std::vector<CurvePoint> optimized_rate_curve(const DeviceParams& device, const SecurityBudget& budget,
                                             const CurveOptions& options) {
    if (!(options.step_km > 0.0) || !(options.max_km >= options.min_km))
        throw ValidationError("curve range must satisfy min_km <= max_km and step_km > 0");
    std::vector<double> km;
    const auto steps = static_cast<std::size_t>(std::floor((options.max_km - options.min_km) / options.step_km + 1e-9));
    for (std::size_t i = 0; i <= steps; ++i) km.push_back(options.min_km + static_cast<double>(i) * options.step_km);

    std::vector<SourceParams> src_single, src_multi;
    const auto single = sweep_scheme(device, budget, km, Scheme::single_bit, options, src_single);
    const auto multi = sweep_scheme(device, budget, km, Scheme::multi_bit, options, src_multi);
    std::vector<CurvePoint> out(km.size());
    for (std::size_t i = 0; i < km.size(); ++i)
        out[i] = {km[i], single[i].rate, multi[i].rate, src_single[i], src_multi[i]};
    return out;
}

}  // namespace tfqds
