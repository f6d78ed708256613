#pragma once

// Finite-key estimation for the SNS link: decoy-state single-photon bounds
// with Chernoff fluctuations, the AOPP post-processing chain, the
// sampling-without-replacement bounds for an L-bit signature string, and the
// min-entropy of that string.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tfqds/bits.hpp"
#include "tfqds/channel.hpp"
#include "tfqds/params.hpp"

namespace tfqds {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Too few counts for the bounds to be meaningful.
class DegenerateStatistics : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientPool : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Scheme { single_bit, multi_bit };

const char* to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

// One failure probability charged by an estimation step.
struct BudgetEntry {
    std::string label;
    double probability = 0.0;
};

struct ChernoffInterval {
    double lower = 0.0;
    double upper = 0.0;
};

// x/(1+d1) and x/(1-d2), with d1, d2 solving the Chernoff tail equations at
// eps_p/2. x = 0 gives (0, -ln(eps_p/2)).
ChernoffInterval chernoff_bounds(double x, double eps_p);

// Log-domain residuals of the two tail equations, exposed for verification.
double chernoff_lower_residual(double x, double delta1, double eps_p);
double chernoff_upper_residual(double x, double delta2, double eps_p);

struct XBasisEstimate {
    double n_X1 = 0.0;
    double e_ph = 0.0;
    double tau_X1 = 0.0;
    bool clamped = false;
};

struct ZUntaggedEstimate {
    double n_u0 = 0.0;
    double n_u1 = 0.0;
    double n_1 = 0.0;
    double tau_Z1 = 0.0;
    bool clamped = false;
};

struct PreAoppEstimates {
    double n_X1 = 0.0;
    double e_ph = 0.0;
    double n_u0 = 0.0;
    double n_u1 = 0.0;
    double n_1 = 0.0;
    double tau_X1 = 0.0;
    double tau_Z1 = 0.0;
    bool clamped = false;
};

XBasisEstimate estimate_x_basis(const LinkObservables& obs, const ValidatedConfig& cfg);
ZUntaggedEstimate estimate_z_untagged(const LinkObservables& obs, const ValidatedConfig& cfg);
PreAoppEstimates estimate_pre_aopp(const LinkObservables& obs, const ValidatedConfig& cfg);

struct PoolStats {
    double n_Z_prime = 0.0;
    double E_Z_prime = 0.0;
    double n_1_prime = 0.0;
    double e_ph_prime = 0.0;
    bool degenerate = false;

    // AOPP chain intermediates, kept for audit output.
    double h = 0.0;
    double n_1_L = 0.0;
    double n_1_r = 0.0;
    double r = 0.0;
    double e_T = 0.0;
    double M_S_U = 0.0;

    std::vector<BudgetEntry> failure_budget_consumed;

    double failure_total() const;
};

PoolStats aopp_estimates(const PreAoppEstimates& pre, const LinkObservables& obs, const SecurityBudget& budget);

// A pool described only by published post-AOPP values.
PoolStats pool_from_values(double n_Z_prime, double E_Z_prime, double n_1_prime, double e_ph_prime);

// Component-wise weaker of two links: smaller pool and single-photon count,
// larger error rates.
PoolStats weaker_pool(const PoolStats& a, const PoolStats& b);

struct AoppBitwiseResult {
    BitString paired_alice;
    BitString paired_bob;
    std::vector<std::pair<std::size_t, std::size_t>> kept_pairs;  // raw positions, output order
    std::uint64_t n_g = 0;
    std::uint64_t n_odd = 0;
    std::uint64_t n_Z_prime = 0;
    double E_Z_prime = 0.0;
};

// Bob's half of AOPP: pair every bit of the minority value with a random bit
// of the other value. Each pair is (first, second), first chosen at random.
std::vector<std::pair<std::size_t, std::size_t>> aopp_form_pairs(BitView bob, Rng& rng);
// Odd-parity pairs when all bits are grouped two by two at random.
std::uint64_t aopp_random_grouping_odd(BitView bob, Rng& rng);
// Alice's parity check: keep pairs whose bits also have odd parity for her.
std::vector<std::pair<std::size_t, std::size_t>> aopp_filter_pairs(
    BitView alice, std::span<const std::pair<std::size_t, std::size_t>> pairs);

AoppBitwiseResult aopp_bitwise(const RawKeyRecord& raw, std::uint64_t seed);

// Upper deviation for random sampling without replacement, closed form with
// A = max(n, k).
double gamma_upper(double n, double k, double lambda, double eps_p);

struct SubsetBounds {
    double length = 0.0;
    double n1_L = 0.0;
    double eph_L = 0.0;
    Scheme scheme = Scheme::single_bit;
    double failure_n1 = 0.0;   // 11 eps_p
    double failure_eph = 0.0;  // 20 eps_p
};

SubsetBounds subset_bounds(const PoolStats& pool, double length, Scheme scheme, double eps_p);

double binary_entropy(double p);

struct MinEntropy {
    double value = 0.0;
    bool degenerate = false;
};

MinEntropy min_entropy(const SubsetBounds& sb, const PoolStats& pool, const SecurityBudget& budget);

}  // namespace tfqds
