#include "tfqds/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace tfqds {

const char* to_string(Scheme scheme) { return scheme == Scheme::single_bit ? "single" : "multi"; }

Scheme scheme_from_string(const std::string& name) {
    if (name == "single" || name == "single_bit") return Scheme::single_bit;
    if (name == "multi" || name == "multi_bit") return Scheme::multi_bit;
    throw std::invalid_argument("unknown scheme '" + name + "' (expected single or multi)");
}

// ---------------------------------------------------------------- Chernoff

namespace {

// (1+t) ln(1+t) - t for t > -1, accurate near t = 0 where the direct form
// cancels catastrophically.
double rel_entropy_term(double t) {
    if (std::abs(t) < 0.05) {
        // sum_{k>=2} (-1)^k t^k / (k (k-1))
        double sum = 0.0;
        double power = t * t;
        for (int k = 2; k < 40; ++k) {
            const double term = power / (static_cast<double>(k) * (k - 1));
            sum += (k % 2 == 0) ? term : -term;
            power *= t;
            if (std::abs(term) < 1e-30) break;
        }
        return sum;
    }
    return (1.0 + t) * std::log1p(t) - t;
}

template <typename F>
double bisect_decreasing(F&& f, double lo, double hi) {
    // f(lo) > 0 > f(hi) expected; returns hi if the root lies beyond the bracket.
    if (f(hi) >= 0.0) return hi;
    for (int i = 0; i < 4000; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

constexpr double kDeltaMin = 1e-15;
constexpr double kDeltaMax = 1e6;

}  // namespace

double chernoff_lower_residual(double x, double delta1, double eps_p) {
    // log of (e^d / (1+d)^(1+d))^(x/(1+d)) minus log(eps_p/2)
    return -x * rel_entropy_term(delta1) / (1.0 + delta1) - std::log(eps_p / 2.0);
}

double chernoff_upper_residual(double x, double delta2, double eps_p) {
    return -x * rel_entropy_term(-delta2) / (1.0 - delta2) - std::log(eps_p / 2.0);
}

ChernoffInterval chernoff_bounds(double x, double eps_p) {
    if (!std::isfinite(x) || !std::isfinite(eps_p)) throw DomainError("chernoff_bounds: non-finite input");
    if (x < 0.0) throw DomainError("chernoff_bounds: negative count");
    if (eps_p <= 0.0 || eps_p >= 1.0) throw DomainError("chernoff_bounds: eps_p must lie in (0, 1)");
    if (x == 0.0) return {0.0, -std::log(eps_p / 2.0)};

    const double d1 = bisect_decreasing([&](double d) { return chernoff_lower_residual(x, d, eps_p); },
                                        kDeltaMin, kDeltaMax);
    const double d2 = bisect_decreasing([&](double d) { return chernoff_upper_residual(x, d, eps_p); },
                                        kDeltaMin, std::nextafter(1.0, 0.0));
    return {x / (1.0 + d1), x / (1.0 - d2)};
}

// ---------------------------------------------------------------- decoy bounds

namespace {

struct Fluctuated {
    double oo_lo, oo_hi, ov_lo, vo_lo, ou_hi, uo_hi, vv_hi;
};

Fluctuated fluctuate(const LinkObservables& obs, double eps_p) {
    const auto oo = chernoff_bounds(obs.n_oo, eps_p);
    return {oo.lower,
            oo.upper,
            chernoff_bounds(obs.n_ov, eps_p).lower,
            chernoff_bounds(obs.n_vo, eps_p).lower,
            chernoff_bounds(obs.n_ou, eps_p).upper,
            chernoff_bounds(obs.n_uo, eps_p).upper,
            chernoff_bounds(obs.m_vv, eps_p).upper};
}

}  // namespace

XBasisEstimate estimate_x_basis(const LinkObservables& obs, const ValidatedConfig& cfg) {
    const auto& s = cfg.source();
    const double u = s.signal_intensity, v = s.decoy_intensity;
    const double po = s.prob_vacuum, pv = s.prob_decoy, pz = cfg.p_z(), ps = s.prob_signal_window_send;
    const double m = cfg.device().phase_slices;
    const Fluctuated f = fluctuate(obs, cfg.budget().eps_p);

    XBasisEstimate out;
    out.tau_X1 = 4.0 * pv * pv * v * std::exp(-2.0 * v) / m;
    const double bracket = u * u * std::exp(v) * (f.ov_lo + f.vo_lo) / (po * pv) -
                           v * v * std::exp(u) * (f.ou_hi + f.uo_hi) / (po * pz * ps) -
                           2.0 * (u * u - v * v) * f.oo_hi / (po * po);
    out.n_X1 = out.tau_X1 / (2.0 * u * v * (u - v)) * bracket;
    if (out.n_X1 <= 0.0) {
        out.n_X1 = 0.0;
        out.e_ph = 0.5;
        out.clamped = true;
        return out;
    }
    const double baseline = std::exp(-2.0 * v) * pv * pv / (m * po * po) * f.oo_lo;
    out.e_ph = (f.vv_hi - baseline) / out.n_X1;
    if (out.e_ph < 0.0 || out.e_ph > 1.0) {
        out.e_ph = std::clamp(out.e_ph, 0.0, 1.0);
        out.clamped = true;
    }
    return out;
}

ZUntaggedEstimate estimate_z_untagged(const LinkObservables& obs, const ValidatedConfig& cfg) {
    const auto& s = cfg.source();
    const double u = s.signal_intensity, v = s.decoy_intensity;
    const double po = s.prob_vacuum, pv = s.prob_decoy, pz = cfg.p_z(), ps = s.prob_signal_window_send;
    const Fluctuated f = fluctuate(obs, cfg.budget().eps_p);

    ZUntaggedEstimate out;
    out.tau_Z1 = pz * pz * ps * (1.0 - ps) * u * std::exp(-u);
    const double scale = out.tau_Z1 / (u * v * (u - v));
    const double vacuum = (u * u - v * v) * f.oo_hi / (po * po);
    auto bound = [&](double decoy_lo, double signal_hi) {
        return scale * (u * u * std::exp(v) * decoy_lo / (po * pv) -
                        v * v * std::exp(u) * signal_hi / (po * pz * ps) - vacuum);
    };
    out.n_u0 = bound(f.ov_lo, f.ou_hi);
    out.n_u1 = bound(f.vo_lo, f.uo_hi);
    if (out.n_u0 < 0.0 || out.n_u1 < 0.0) out.clamped = true;
    out.n_u0 = std::max(0.0, out.n_u0);
    out.n_u1 = std::max(0.0, out.n_u1);
    out.n_1 = out.n_u0 + out.n_u1;
    return out;
}

PreAoppEstimates estimate_pre_aopp(const LinkObservables& obs, const ValidatedConfig& cfg) {
    const XBasisEstimate x = estimate_x_basis(obs, cfg);
    const ZUntaggedEstimate z = estimate_z_untagged(obs, cfg);
    return {x.n_X1, x.e_ph, z.n_u0, z.n_u1, z.n_1, x.tau_X1, z.tau_Z1, x.clamped || z.clamped};
}

// ---------------------------------------------------------------- AOPP chain

double PoolStats::failure_total() const {
    return std::accumulate(failure_budget_consumed.begin(), failure_budget_consumed.end(), 0.0,
                           [](double acc, const BudgetEntry& e) { return acc + e.probability; });
}

PoolStats aopp_estimates(const PreAoppEstimates& pre, const LinkObservables& obs, const SecurityBudget& budget) {
    if (obs.n_g <= 0.0) throw DegenerateStatistics("AOPP: no pairs formed (n_g = 0)");
    if (obs.n_odd <= 0.0) throw DegenerateStatistics("AOPP: no odd-parity pairs (n_odd = 0)");
    if (pre.n_1 <= 0.0) throw DegenerateStatistics("AOPP: no untagged bits estimated (n_1 = 0)");
    if (obs.n_Z <= 0.0) throw DegenerateStatistics("AOPP: empty raw key (n_Z = 0)");

    const double ep = budget.eps_p;
    const double eps = budget.eps_aopp;
    auto lower = [ep](double x) { return chernoff_bounds(std::max(0.0, x), ep).lower; };
    auto upper = [ep](double x) { return chernoff_bounds(std::max(0.0, x), ep).upper; };

    PoolStats p;
    p.n_Z_prime = obs.n_Z_prime;
    p.E_Z_prime = obs.E_Z_prime;
    p.h = obs.n_g / (2.0 * obs.n_odd);

    const double u1 = lower(pre.n_u1 * p.h);
    const double u0 = lower(pre.n_u0 * p.h);
    p.n_1_L = u1 + u0;
    if (p.n_1_L <= 0.0) throw DegenerateStatistics("AOPP: n_1^L vanished after fluctuation");
    p.n_1_r = lower(p.n_1_L * p.n_1_L / (2.0 * p.h * obs.n_Z));

    const double spread = -std::log(eps) / (2.0 * p.n_1_r);
    if (!(spread <= 1.0)) throw DegenerateStatistics("AOPP: -ln(eps)/(2 n_1^r) exceeds 1");
    const double dev = std::sqrt(spread);
    const double nu1 = 2.0 * p.n_1_r * (u1 / p.n_1_L - dev);
    const double nu0 = 2.0 * p.n_1_r * (u0 / p.n_1_L - dev);
    const double n_min = std::min(nu1, nu0);

    const double gap = p.n_1_L - 2.0 * p.n_1_r;
    if (gap <= 0.0) throw DegenerateStatistics("AOPP: n_1^L <= 2 n_1^r");
    p.r = p.n_1_L / gap * std::log(3.0 * gap * gap / eps);
    if (p.n_1_r <= p.r) throw DegenerateStatistics("AOPP: n_1^r <= r");

    p.e_T = upper(2.0 * p.n_1_r * pre.e_ph) / (2.0 * p.n_1_r - p.r);
    p.M_S_U = upper((p.n_1_r - p.r) * p.e_T * (1.0 - p.e_T)) + p.r;

    if (n_min <= 0.0) throw DegenerateStatistics("AOPP: n'_1 <= 0");
    p.n_1_prime = 2.0 * lower(n_min * (1.0 - n_min / (2.0 * p.n_1_r)));
    if (p.n_1_prime <= 0.0) throw DegenerateStatistics("AOPP: n'_1 <= 0");
    p.e_ph_prime = 2.0 * p.M_S_U / p.n_1_prime;
    if (p.n_1_prime > p.n_Z_prime) p.n_1_prime = p.n_Z_prime;
    p.degenerate = !(p.e_ph_prime >= 0.0 && p.e_ph_prime <= 0.5);

    p.failure_budget_consumed = {
        {"aopp.n_u1^L", ep}, {"aopp.n_u0^L", ep},  {"aopp.n_1^r", ep},
        {"aopp.n'_u1", eps}, {"aopp.n'_u0", eps},  {"aopp.r", eps},
        {"aopp.e_T", ep},    {"aopp.M_S^U", ep},   {"aopp.n'_1", ep},
    };
    return p;
}

PoolStats pool_from_values(double n_Z_prime, double E_Z_prime, double n_1_prime, double e_ph_prime) {
    PoolStats p;
    p.n_Z_prime = n_Z_prime;
    p.E_Z_prime = E_Z_prime;
    p.n_1_prime = n_1_prime;
    p.e_ph_prime = e_ph_prime;
    p.degenerate = !(e_ph_prime >= 0.0 && e_ph_prime <= 0.5) || n_1_prime <= 0.0;
    return p;
}

PoolStats weaker_pool(const PoolStats& a, const PoolStats& b) {
    PoolStats p = pool_from_values(std::min(a.n_Z_prime, b.n_Z_prime), std::max(a.E_Z_prime, b.E_Z_prime),
                                   std::min(a.n_1_prime, b.n_1_prime), std::max(a.e_ph_prime, b.e_ph_prime));
    p.degenerate = p.degenerate || a.degenerate || b.degenerate;
    for (const auto& e : a.failure_budget_consumed) p.failure_budget_consumed.push_back({"AB." + e.label, e.probability});
    for (const auto& e : b.failure_budget_consumed) p.failure_budget_consumed.push_back({"AC." + e.label, e.probability});
    return p;
}

// ---------------------------------------------------------------- bitwise AOPP

std::vector<std::pair<std::size_t, std::size_t>> aopp_form_pairs(BitView bob, Rng& rng) {
    std::vector<std::size_t> zeros, ones;
    for (std::size_t i = 0; i < bob.size(); ++i) (bob[i] ? ones : zeros).push_back(i);
    auto& minority = zeros.size() <= ones.size() ? zeros : ones;
    auto& majority = zeros.size() <= ones.size() ? ones : zeros;
    // partial Fisher-Yates: a uniformly random partner for every minority bit
    for (std::size_t i = 0; i < minority.size(); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (majority.size() - i));
        std::swap(majority[i], majority[j]);
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(minority.size());
    for (std::size_t i = 0; i < minority.size(); ++i) {
        if (rng() & 1U) pairs.emplace_back(minority[i], majority[i]);
        else pairs.emplace_back(majority[i], minority[i]);
    }
    return pairs;
}

std::uint64_t aopp_random_grouping_odd(BitView bob, Rng& rng) {
    std::vector<std::size_t> order(bob.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    std::uint64_t odd = 0;
    for (std::size_t i = 0; i + 1 < order.size(); i += 2) odd += (bob[order[i]] != bob[order[i + 1]]);
    return odd;
}

std::vector<std::pair<std::size_t, std::size_t>> aopp_filter_pairs(
    BitView alice, std::span<const std::pair<std::size_t, std::size_t>> pairs) {
    std::vector<std::pair<std::size_t, std::size_t>> kept;
    kept.reserve(pairs.size());
    for (const auto& p : pairs)
        if (alice[p.first] != alice[p.second]) kept.push_back(p);
    return kept;
}

AoppBitwiseResult aopp_bitwise(const RawKeyRecord& raw, std::uint64_t seed) {
    if (raw.alice_bits.size() != raw.bob_bits.size())
        throw std::invalid_argument("aopp_bitwise: Alice and Bob keys differ in length");
    AoppBitwiseResult out;
    if (raw.bob_bits.empty()) return out;

    Rng pair_rng = substream(seed, 1);
    Rng group_rng = substream(seed, 2);
    const auto pairs = aopp_form_pairs(raw.bob_bits, pair_rng);
    out.n_g = pairs.size();
    out.n_odd = aopp_random_grouping_odd(raw.bob_bits, group_rng);
    out.kept_pairs = aopp_filter_pairs(raw.alice_bits, pairs);
    out.n_Z_prime = out.kept_pairs.size();
    out.paired_alice.reserve(out.kept_pairs.size());
    out.paired_bob.reserve(out.kept_pairs.size());
    for (const auto& p : out.kept_pairs) {
        out.paired_bob.push_back(raw.bob_bits[p.first]);
        out.paired_alice.push_back(raw.alice_bits[p.first]);
    }
    if (out.n_Z_prime > 0)
        out.E_Z_prime = static_cast<double>(hamming_distance(out.paired_alice, out.paired_bob)) /
                        static_cast<double>(out.n_Z_prime);
    return out;
}

// ---------------------------------------------------------------- sampling bounds

double gamma_upper(double n, double k, double lambda, double eps_p) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("gamma_upper: lambda must lie strictly inside (0, 1)");
    if (!(n > 0.0 && k > 0.0)) throw DomainError("gamma_upper: n and k must be positive");
    const double total = n + k;
    const double a = std::max(n, k);
    const double g =
        total / (n * k) * std::log(total / (2.0 * std::numbers::pi * n * k * lambda * (1.0 - lambda) * eps_p * eps_p));
    if (g <= 0.0) return 0.0;
    const double ag = a * g / total;
    const double numerator = (1.0 - 2.0 * lambda) * ag + std::sqrt(ag * ag + 4.0 * lambda * (1.0 - lambda) * g);
    const double denominator = 2.0 + 2.0 * a * ag / total;
    return numerator / denominator;
}

SubsetBounds subset_bounds(const PoolStats& pool, double length, Scheme scheme, double eps_p) {
    if (!(length > 0.0)) throw std::invalid_argument("subset_bounds: length must be positive");
    const double draw = scheme == Scheme::single_bit ? length / 2.0 : length;
    if (draw >= pool.n_Z_prime) throw InsufficientPool("subset_bounds: signature string exceeds the key pool");
    if (!(pool.n_1_prime > 0.0)) throw DegenerateStatistics("subset_bounds: pool has no single-photon bits");

    SubsetBounds sb;
    sb.length = length;
    sb.scheme = scheme;
    sb.failure_n1 = 11.0 * eps_p;
    sb.failure_eph = 20.0 * eps_p;

    const double fraction = pool.n_1_prime / pool.n_Z_prime;
    sb.n1_L = draw * (fraction - gamma_upper(draw, pool.n_Z_prime - draw, fraction, eps_p));
    if (sb.n1_L <= 0.0 || pool.e_ph_prime <= 0.0 || pool.e_ph_prime >= 0.5) {
        sb.n1_L = std::max(0.0, sb.n1_L);
        sb.eph_L = std::max(0.5, std::min(1.0, pool.e_ph_prime));
        return sb;
    }
    sb.eph_L = pool.e_ph_prime + gamma_upper(sb.n1_L, pool.n_1_prime - sb.n1_L, pool.e_ph_prime, eps_p);
    sb.eph_L = std::min(sb.eph_L, 1.0);
    return sb;
}

double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

MinEntropy min_entropy(const SubsetBounds& sb, const PoolStats& pool, const SecurityBudget& budget) {
    MinEntropy h;
    const double first = sb.eph_L >= 0.5 ? 0.0 : sb.n1_L * (1.0 - binary_entropy(sb.eph_L));
    const double leak = sb.scheme == Scheme::single_bit
                            ? (sb.length / 2.0) * binary_entropy(pool.E_Z_prime)
                            : sb.length * budget.ec_efficiency * binary_entropy(pool.E_Z_prime);
    h.value = first - leak;
    h.degenerate = first <= 0.0 || h.value <= 0.0;
    return h;
}

}  // namespace tfqds
