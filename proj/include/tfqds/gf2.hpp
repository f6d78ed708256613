#pragma once

// Polynomials over GF(2), packed 64 coefficients per word, with the
// irreducibility test and the division hash used by the multi-bit scheme.

#include <cstdint>
#include <vector>

#include "tfqds/bits.hpp"

namespace tfqds {

class Gf2Poly {
public:
    Gf2Poly() = default;
    static Gf2Poly monomial(std::size_t degree);
    // bits[0] is the highest-degree coefficient.
    static Gf2Poly from_bits_high_first(BitView bits);
    // Coefficients given as an integer mask, bit i = coefficient of x^i.
    static Gf2Poly from_mask(std::uint64_t mask);

    // -1 for the zero polynomial.
    long degree() const;
    bool is_zero() const { return degree() < 0; }
    bool is_one() const { return degree() == 0; }
    bool coeff(std::size_t i) const;
    void set_coeff(std::size_t i, bool value);

    // Coefficients of x^(width-1) .. x^0.
    BitString to_bits_high_first(std::size_t width) const;

    Gf2Poly& operator^=(const Gf2Poly& other);
    friend Gf2Poly operator^(Gf2Poly a, const Gf2Poly& b) { return a ^= b; }
    friend Gf2Poly operator*(const Gf2Poly& a, const Gf2Poly& b);
    friend Gf2Poly operator%(Gf2Poly a, const Gf2Poly& b);
    friend bool operator==(const Gf2Poly& a, const Gf2Poly& b);

    Gf2Poly square() const;

    const std::vector<std::uint64_t>& words() const { return words_; }

private:
    void trim();
    void xor_shifted(const Gf2Poly& other, std::size_t shift);
    std::vector<std::uint64_t> words_;
};

Gf2Poly gcd(Gf2Poly a, Gf2Poly b);

// Ben-Or: P of degree L is irreducible iff gcd(x^(2^i) - x, P) = 1 for all
// i <= L/2.
bool is_irreducible(const Gf2Poly& poly);

// Degree-L irreducible polynomial derived from p_a: p_a supplies the L low
// coefficients (first bit highest), x^L is added and the constant term set;
// coefficients 1..L-1 are then counted upward until the test passes.
Gf2Poly generate_irreducible(BitView p_a, std::size_t L);

struct HashDigest {
    BitString bits;
    bool empty_message = false;
};

// (M(x) * x^L) mod poly with M's first bit as its highest coefficient;
// L = deg(poly) output bits, highest degree first.
HashDigest gdh_hash(BitView message, const Gf2Poly& poly);

}  // namespace tfqds
