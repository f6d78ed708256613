#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfqds/rng.hpp"

namespace tfqds {

// One bit per element, values 0 or 1.
using BitString = std::vector<std::uint8_t>;
using BitView = std::span<const std::uint8_t>;

inline BitString random_bits(std::size_t n, Rng& rng) {
    BitString out(n);
    std::size_t i = 0;
    while (i < n) {
        std::uint64_t word = rng();
        for (int b = 0; b < 64 && i < n; ++b, ++i) out[i] = static_cast<std::uint8_t>((word >> b) & 1U);
    }
    return out;
}

inline BitString xor_bits(BitView a, BitView b) {
    if (a.size() != b.size()) throw std::invalid_argument("xor_bits: length mismatch");
    BitString out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
    return out;
}

inline std::size_t hamming_distance(BitView a, BitView b) {
    if (a.size() != b.size()) throw std::invalid_argument("hamming_distance: length mismatch");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
    return d;
}

// High-order-first packing, final byte zero-padded.
inline std::vector<std::uint8_t> pack_bits(BitView bits) {
    std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80U >> (i % 8));
    return out;
}

inline BitString unpack_bits(std::span<const std::uint8_t> bytes, std::size_t nbits) {
    if (bytes.size() * 8 < nbits) throw std::invalid_argument("unpack_bits: not enough bytes");
    BitString out(nbits);
    for (std::size_t i = 0; i < nbits; ++i) out[i] = (bytes[i / 8] >> (7 - i % 8)) & 1U;
    return out;
}

inline std::string to_string(BitView bits) {
    std::string s;
    s.reserve(bits.size());
    for (auto b : bits) s.push_back(b ? '1' : '0');
    return s;
}

inline BitString from_string(const std::string& s) {
    BitString out;
    out.reserve(s.size());
    for (char c : s) {
        if (c != '0' && c != '1') throw std::invalid_argument("bit string may only contain 0 and 1");
        out.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return out;
}

// FNV-1a over bytes; used for transcript payload digests, not for security.
inline std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace tfqds
