#pragma once

// Messaging stage: one-time key pools, the verifiers' key exchange, single-bit
// signatures checked by mismatch counting, and multi-bit signatures by
// one-time universal hashing with the division hash.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfqds/bits.hpp"
#include "tfqds/estimation.hpp"

namespace tfqds {

class PoolExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct KeyPool {
    std::string link_id;
    BitString bits;
    std::size_t cursor = 0;
    Scheme scheme = Scheme::single_bit;

    std::size_t remaining() const { return bits.size() - cursor; }
};

// Next L unused bits; the cursor only moves forward.
BitString draw_keys(KeyPool& pool, std::size_t L);

// One verifier's composite string for one message value: the half of its own
// L-bit key it kept, followed by the half the other verifier sent over.
struct VerifierHalf {
    std::vector<std::size_t> kept_positions;      // into the own link's string
    BitString kept;
    std::vector<std::size_t> received_positions;  // into the other link's string
    BitString received;
};

struct SingleBitKeys {
    bool own_link_is_ab = true;  // Bob: AB, Charlie: AC
    std::array<VerifierHalf, 2> per_message;
};

// What each verifier sends the other: for every message value, half of its
// L-bit key at seeded positions.
struct ExchangedHalves {
    std::array<std::vector<std::size_t>, 2> positions;
    std::array<BitString, 2> bits;
};

struct SingleBitExchange {
    SingleBitKeys bob;
    SingleBitKeys charlie;
    ExchangedHalves bob_sent;
    ExchangedHalves charlie_sent;
};

// bob_keys[m], charlie_keys[m]: the verifier's L-bit string for message m.
SingleBitExchange exchange_single_bit(const std::array<BitString, 2>& bob_keys,
                                      const std::array<BitString, 2>& charlie_keys, std::uint64_t seed);

// Alice's strings per message value: A_B^m from the AB pool, A_C^m from AC.
struct SignerSingleKeys {
    std::array<BitString, 2> a_b;
    std::array<BitString, 2> a_c;
};

struct SignatureBundle {
    Scheme scheme = Scheme::single_bit;
    std::uint32_t length = 0;          // L
    BitString message;                 // one bit for the single-bit scheme
    std::array<BitString, 2> payload;  // (A_B^m, A_C^m) or (S, P)

    bool operator==(const SignatureBundle&) const = default;
};

std::vector<std::uint8_t> serialize(const SignatureBundle& bundle);
SignatureBundle deserialize_bundle(std::span<const std::uint8_t> bytes);

SignatureBundle sign_single(std::uint8_t m, const SignerSingleKeys& keys);

struct SingleVerdict {
    bool accept = false;
    std::array<std::size_t, 2> mismatches{};  // kept half, received half
    std::string reason;
};

// Accept iff both halves have fewer than threshold * L / 2 mismatches.
SingleVerdict verify_single(const SignatureBundle& bundle, const SingleBitKeys& keys, double threshold,
                            std::size_t L);

struct OtuhKeys {
    BitString X_a, Y_a, p_a;  // signer
    BitString X_b, Y_b;       // Bob, from the AB pool
    BitString X_c, Y_c;       // Charlie, from the AC pool
};

// X_a = X_ab ^ X_ac and Y_a = Y_ab ^ Y_ac from the two links' shared strings.
OtuhKeys make_otuh_keys(BitView x_ab, BitView y_ab, BitView x_ac, BitView y_ac, BitView x_b, BitView y_b,
                        BitView x_c, BitView y_c, BitView p_a);

SignatureBundle sign_multi(BitView message, const OtuhKeys& keys);

struct MultiVerdict {
    bool accept = false;
    std::string reason;
};

MultiVerdict verify_multi(const SignatureBundle& bundle, BitView K_X, BitView K_Y);

}  // namespace tfqds
