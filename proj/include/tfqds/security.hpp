#pragma once

// Security bounds for the single-bit and multi-bit signature schemes, the
// minimum signature length search, signature rates and source-parameter
// optimization.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfqds/estimation.hpp"
#include "tfqds/params.hpp"

namespace tfqds {

class NoSecurityMargin : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Infeasible : public std::runtime_error {
public:
    Infeasible(const std::string& what, double best_eps) : std::runtime_error(what), best_eps_(best_eps) {}
    double best_eps() const { return best_eps_; }

private:
    double best_eps_;
};

struct Thresholds {
    double P_e = 0.0;
    double s_a = 0.0;
    double s_v = 0.0;
};

struct SecurityReport {
    Scheme scheme = Scheme::single_bit;
    double L = 0.0;
    double message_bits = 1.0;
    double eps_rob = 1.0;
    double eps_rep = 1.0;
    double eps_forge = 1.0;
    double eps_achieved = 1.0;
    std::optional<Thresholds> thresholds;
    double H_L = 0.0;
    SubsetBounds subset;
    // Single-bit forgery bound with the 1/g factor applied to eps_p as well.
    double eps_forge_literal = 0.0;
    std::vector<std::string> flags;
    std::vector<BudgetEntry> failure_budget;

    bool has_flag(const std::string& flag) const;
};

// P_e solves H2(P_e) = min(1, 2 H_L / L) on [E'_Z, 0.5]; s_a and s_v sit at
// one and two thirds of the way from E'_Z to P_e.
Thresholds thresholds_from_entropy(double H_L, double L, double E_Z_prime);

SecurityReport single_bit_security(double L, const PoolStats& pool, const SubsetBounds& subset,
                                   const SecurityBudget& budget);
SecurityReport multi_bit_security(double L, double message_bits, const PoolStats& pool, const SubsetBounds& subset,
                                  const SecurityBudget& budget);

// subset_bounds followed by the scheme's bounds. Degenerate statistics give a
// report with eps_achieved = 1 instead of an exception.
SecurityReport evaluate_security(const PoolStats& pool, double L, Scheme scheme, double message_bits,
                                 const SecurityBudget& budget);

// Smallest L with eps_achieved <= epsilon_total. Throws Infeasible.
SecurityReport min_signature_length(const PoolStats& pool, Scheme scheme, double message_bits,
                                    const SecurityBudget& budget);

struct SignatureRate {
    double per_run = 0.0;
    double per_second = 0.0;
};

SignatureRate signature_rate(double n_pool_ab, double n_pool_ac, double L, double total_pulses, double clock_rate);

// Pool statistics expected for one link: expected counts, decoy estimation,
// AOPP chain. Throws DegenerateStatistics.
PoolStats expected_pool(const ValidatedConfig& cfg);

struct RateEvaluation {
    double rate = 0.0;  // per second, 0 when infeasible
    double L = 0.0;
    double eps_achieved = 1.0;
    bool feasible = false;
};

// Rate of a symmetric two-link deployment (both links at fiber_length_km).
RateEvaluation evaluate_rate(const DeviceParams& device, const SourceParams& source, double fiber_length_km,
                             Scheme scheme, double message_bits, const SecurityBudget& budget);

struct OptimizationResult {
    SourceParams source;
    RateEvaluation best;
    int evaluations = 0;
};

struct OptimizerOptions {
    std::vector<SourceParams> starts;  // empty: built-in grid
    double initial_step = 0.4;         // relative step in each coordinate
    double final_step = 0.01;
    int max_sweeps = 60;
};

std::vector<SourceParams> default_start_grid(std::uint64_t total_pulses);

// Multi-start coordinate descent over (u, v, p_o, p_v, p_s). Starts run
// concurrently; the result does not depend on the schedule.
OptimizationResult optimize_parameters(const DeviceParams& device, double fiber_length_km, Scheme scheme,
                                       double message_bits, const SecurityBudget& budget,
                                       const OptimizerOptions& options = {});
OptimizationResult optimize_parameters_serial(const DeviceParams& device, double fiber_length_km, Scheme scheme,
                                              double message_bits, const SecurityBudget& budget,
                                              const OptimizerOptions& options = {});

struct CurveOptions {
    double min_km = 0.0;
    double max_km = 600.0;
    double step_km = 2.0;
    std::uint64_t total_pulses = 100'000'000'000'000ULL;
    double message_bits = 1e6;  // multi-bit document size
};

struct CurvePoint {
    double distance_km = 0.0;
    double rate_single_bps = 0.0;
    double rate_multi_tps = 0.0;
    SourceParams source_single;
    SourceParams source_multi;
};

// Optimized rates over distance for both schemes. Each point is warm-started
// from the previous one; a backward pass then lets every distance reuse the
// parameters chosen one step further out when they do better there. Rates are
// 0 beyond the first distance with no feasible parameters.
std::vector<CurvePoint> optimized_rate_curve(const DeviceParams& device, const SecurityBudget& budget,
                                             const CurveOptions& options = {});

}  // namespace tfqds
