#include "tfqds/gf2.hpp"

#include <bit>
#include <stdexcept>

namespace tfqds {

namespace {

constexpr std::size_t kWordBits = 64;

// Spreads the 32 bits of x to the even positions of a 64-bit word.
std::uint64_t spread(std::uint32_t x) {
    std::uint64_t v = x;
    v = (v | (v << 16)) & 0x0000FFFF0000FFFFULL;
    v = (v | (v << 8)) & 0x00FF00FF00FF00FFULL;
    v = (v | (v << 4)) & 0x0F0F0F0F0F0F0F0FULL;
    v = (v | (v << 2)) & 0x3333333333333333ULL;
    v = (v | (v << 1)) & 0x5555555555555555ULL;
    return v;
}

}  // namespace

Gf2Poly Gf2Poly::monomial(std::size_t degree) {
    Gf2Poly p;
    p.set_coeff(degree, true);
    return p;
}

Gf2Poly Gf2Poly::from_bits_high_first(BitView bits) {
    Gf2Poly p;
    const std::size_t n = bits.size();
    p.words_.assign((n + kWordBits - 1) / kWordBits, 0);
    for (std::size_t i = 0; i < n; ++i)
        if (bits[i]) {
            const std::size_t d = n - 1 - i;
            p.words_[d / kWordBits] |= std::uint64_t{1} << (d % kWordBits);
        }
    p.trim();
    return p;
}

Gf2Poly Gf2Poly::from_mask(std::uint64_t mask) {
    Gf2Poly p;
    p.words_ = {mask};
    p.trim();
    return p;
}

long Gf2Poly::degree() const {
    if (words_.empty()) return -1;
    const std::uint64_t top = words_.back();
    return static_cast<long>((words_.size() - 1) * kWordBits) + 63 - std::countl_zero(top);
}

bool Gf2Poly::coeff(std::size_t i) const {
    const std::size_t w = i / kWordBits;
    return w < words_.size() && ((words_[w] >> (i % kWordBits)) & 1U);
}

void Gf2Poly::set_coeff(std::size_t i, bool value) {
    const std::size_t w = i / kWordBits;
    if (w >= words_.size()) {
        if (!value) return;
        words_.resize(w + 1, 0);
    }
    const std::uint64_t bit = std::uint64_t{1} << (i % kWordBits);
    words_[w] = value ? (words_[w] | bit) : (words_[w] & ~bit);
    trim();
}

BitString Gf2Poly::to_bits_high_first(std::size_t width) const {
    BitString out(width, 0);
    for (std::size_t i = 0; i < width; ++i) out[i] = coeff(width - 1 - i) ? 1 : 0;
    return out;
}

void Gf2Poly::trim() {
    while (!words_.empty() && words_.back() == 0) words_.pop_back();
}

Gf2Poly& Gf2Poly::operator^=(const Gf2Poly& other) {
    if (other.words_.size() > words_.size()) words_.resize(other.words_.size(), 0);
    for (std::size_t i = 0; i < other.words_.size(); ++i) words_[i] ^= other.words_[i];
    trim();
    return *this;
}

void Gf2Poly::xor_shifted(const Gf2Poly& other, std::size_t shift) {
    const std::size_t ws = shift / kWordBits;
    const unsigned bs = shift % kWordBits;
    const std::size_t need = other.words_.size() + ws + 1;
    if (words_.size() < need) words_.resize(need, 0);
    for (std::size_t i = 0; i < other.words_.size(); ++i) {
        const std::uint64_t w = other.words_[i];
        words_[i + ws] ^= w << bs;
        if (bs != 0) words_[i + ws + 1] ^= w >> (kWordBits - bs);
    }
    trim();
}

bool operator==(const Gf2Poly& a, const Gf2Poly& b) { return a.words_ == b.words_; }

Gf2Poly operator*(const Gf2Poly& a, const Gf2Poly& b) {
    Gf2Poly out;
    const long db = b.degree();
    for (long i = 0; i <= db; ++i)
        if (b.coeff(static_cast<std::size_t>(i))) out.xor_shifted(a, static_cast<std::size_t>(i));
    return out;
}

Gf2Poly operator%(Gf2Poly a, const Gf2Poly& b) {
    const long db = b.degree();
    if (db < 0) throw std::domain_error("GF(2) division by the zero polynomial");
    for (long da = a.degree(); da >= db; da = a.degree()) a.xor_shifted(b, static_cast<std::size_t>(da - db));
    return a;
}

Gf2Poly Gf2Poly::square() const {
    Gf2Poly out;
    out.words_.assign(2 * words_.size(), 0);
    for (std::size_t i = 0; i < words_.size(); ++i) {
        out.words_[2 * i] = spread(static_cast<std::uint32_t>(words_[i]));
        out.words_[2 * i + 1] = spread(static_cast<std::uint32_t>(words_[i] >> 32));
    }
    out.trim();
    return out;
}

Gf2Poly gcd(Gf2Poly a, Gf2Poly b) {
    while (!b.is_zero()) {
        a = a % b;
        std::swap(a, b);
    }
    return a;
}

bool is_irreducible(const Gf2Poly& poly) {
    const long L = poly.degree();
    if (L < 1) return false;
    if (L == 1) return true;
    if (!poly.coeff(0)) return false;  // divisible by x
    const Gf2Poly x = Gf2Poly::monomial(1);
    Gf2Poly t = x;
    for (long i = 1; i <= L / 2; ++i) {
        t = t.square() % poly;
        if (!gcd(poly, t ^ x).is_one()) return false;
    }
    return true;
}

Gf2Poly generate_irreducible(BitView p_a, std::size_t L) {
    if (L < 1) throw std::invalid_argument("generate_irreducible: degree must be >= 1");
    if (p_a.size() != L) throw std::invalid_argument("generate_irreducible: p_a must have L bits");
    Gf2Poly p = Gf2Poly::from_bits_high_first(p_a);
    p.set_coeff(L, true);
    p.set_coeff(0, true);
    while (!is_irreducible(p)) {
        // increment the counter held in coefficients 1..L-1, wrapping
        std::size_t i = 1;
        while (i < L && p.coeff(i)) p.set_coeff(i++, false);
        if (i < L) p.set_coeff(i, true);
    }
    return p;
}

HashDigest gdh_hash(BitView message, const Gf2Poly& poly) {
    const long L = poly.degree();
    if (L < 1) throw std::invalid_argument("gdh_hash: polynomial degree must be >= 1");
    HashDigest out;
    out.empty_message = message.empty();
    const Gf2Poly m = Gf2Poly::from_bits_high_first(message);
    if (m.is_zero()) {
        out.bits.assign(static_cast<std::size_t>(L), 0);
        return out;
    }
    // Horner over the message words keeps the working remainder below 2L bits.
    Gf2Poly r;
    const std::size_t ul = static_cast<std::size_t>(L);
    const std::size_t chunk = ul;
    const std::size_t n = message.size();
    std::size_t pos = 0;
    while (pos < n) {
        const std::size_t take = std::min(chunk, n - pos);
        Gf2Poly piece = Gf2Poly::from_bits_high_first(message.subspan(pos, take));
        r = r * Gf2Poly::monomial(take);
        r ^= piece;
        r = r % poly;
        pos += take;
    }
    r = (r * Gf2Poly::monomial(ul)) % poly;
    out.bits = r.to_bits_high_first(ul);
    return out;
}

}  // namespace tfqds
