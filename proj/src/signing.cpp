#include "tfqds/signing.hpp"

#include <algorithm>
#include <numeric>

#include "tfqds/gf2.hpp"

namespace tfqds {

BitString draw_keys(KeyPool& pool, std::size_t L) {
    if (L > pool.remaining())
        throw PoolExhausted("key pool '" + pool.link_id + "' has " + std::to_string(pool.remaining()) +
                            " unused bits, " + std::to_string(L) + " requested");
    BitString out(pool.bits.begin() + static_cast<std::ptrdiff_t>(pool.cursor),
                  pool.bits.begin() + static_cast<std::ptrdiff_t>(pool.cursor + L));
    pool.cursor += L;
    return out;
}

namespace {

// Seeded split of 0..L-1 into (kept, sent), each sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> halve(std::size_t L, Rng& rng) {
    std::vector<std::size_t> order(L);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = L; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    std::vector<std::size_t> kept(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(L / 2));
    std::vector<std::size_t> sent(order.begin() + static_cast<std::ptrdiff_t>(L / 2), order.end());
    std::sort(kept.begin(), kept.end());
    std::sort(sent.begin(), sent.end());
    return {kept, sent};
}

BitString gather(BitView bits, const std::vector<std::size_t>& positions) {
    BitString out;
    out.reserve(positions.size());
    for (auto p : positions) out.push_back(bits[p]);
    return out;
}

}  // namespace

SingleBitExchange exchange_single_bit(const std::array<BitString, 2>& bob_keys,
                                      const std::array<BitString, 2>& charlie_keys, std::uint64_t seed) {
    const std::size_t L = bob_keys[0].size();
    for (int m = 0; m < 2; ++m)
        if (bob_keys[m].size() != L || charlie_keys[m].size() != L)
            throw std::invalid_argument("exchange_single_bit: verifier key lengths differ");
    if (L % 2 != 0) throw std::invalid_argument("exchange_single_bit: L must be even");

    SingleBitExchange ex;
    ex.bob.own_link_is_ab = true;
    ex.charlie.own_link_is_ab = false;
    Rng bob_rng = substream(seed, 1);
    Rng charlie_rng = substream(seed, 2);
    for (int m = 0; m < 2; ++m) {
        auto [bob_kept, bob_sent] = halve(L, bob_rng);
        auto [charlie_kept, charlie_sent] = halve(L, charlie_rng);
        ex.bob_sent.positions[m] = bob_sent;
        ex.bob_sent.bits[m] = gather(bob_keys[m], bob_sent);
        ex.charlie_sent.positions[m] = charlie_sent;
        ex.charlie_sent.bits[m] = gather(charlie_keys[m], charlie_sent);

        ex.bob.per_message[m] = {bob_kept, gather(bob_keys[m], bob_kept), charlie_sent, ex.charlie_sent.bits[m]};
        ex.charlie.per_message[m] = {charlie_kept, gather(charlie_keys[m], charlie_kept), bob_sent,
                                     ex.bob_sent.bits[m]};
    }
    return ex;
}

SignatureBundle sign_single(std::uint8_t m, const SignerSingleKeys& keys) {
    if (m > 1) throw std::invalid_argument("sign_single: message must be a single bit");
    SignatureBundle b;
    b.scheme = Scheme::single_bit;
    b.length = static_cast<std::uint32_t>(keys.a_b[m].size());
    b.message = {m};
    b.payload = {keys.a_b[m], keys.a_c[m]};
    return b;
}

SingleVerdict verify_single(const SignatureBundle& bundle, const SingleBitKeys& keys, double threshold,
                            std::size_t L) {
    SingleVerdict v;
    if (bundle.scheme != Scheme::single_bit) {
        v.reason = "not a single-bit bundle";
        return v;
    }
    if (bundle.message.size() != 1 || bundle.message[0] > 1) {
        v.reason = "single-bit message expected";
        return v;
    }
    if (bundle.length != L || bundle.payload[0].size() != L || bundle.payload[1].size() != L) {
        v.reason = "signature length differs from L";
        return v;
    }
    const VerifierHalf& h = keys.per_message[bundle.message[0]];
    const BitString& own = keys.own_link_is_ab ? bundle.payload[0] : bundle.payload[1];
    const BitString& other = keys.own_link_is_ab ? bundle.payload[1] : bundle.payload[0];
    for (std::size_t i = 0; i < h.kept_positions.size(); ++i) v.mismatches[0] += own[h.kept_positions[i]] != h.kept[i];
    for (std::size_t i = 0; i < h.received_positions.size(); ++i)
        v.mismatches[1] += other[h.received_positions[i]] != h.received[i];

    const double limit = threshold * static_cast<double>(L) / 2.0;
    v.accept = static_cast<double>(v.mismatches[0]) < limit && static_cast<double>(v.mismatches[1]) < limit;
    if (!v.accept) v.reason = "mismatch count not below threshold";
    return v;
}

OtuhKeys make_otuh_keys(BitView x_ab, BitView y_ab, BitView x_ac, BitView y_ac, BitView x_b, BitView y_b,
                        BitView x_c, BitView y_c, BitView p_a) {
    OtuhKeys k;
    k.X_a = xor_bits(x_ab, x_ac);
    k.Y_a = xor_bits(y_ab, y_ac);
    k.p_a.assign(p_a.begin(), p_a.end());
    k.X_b.assign(x_b.begin(), x_b.end());
    k.Y_b.assign(y_b.begin(), y_b.end());
    k.X_c.assign(x_c.begin(), x_c.end());
    k.Y_c.assign(y_c.begin(), y_c.end());
    return k;
}

SignatureBundle sign_multi(BitView message, const OtuhKeys& keys) {
    const std::size_t L = keys.p_a.size();
    if (L == 0 || keys.X_a.size() != L || keys.Y_a.size() != L)
        throw std::invalid_argument("sign_multi: X_a, Y_a and p_a must all have L bits");
    const Gf2Poly poly = generate_irreducible(keys.p_a, L);
    const HashDigest h = gdh_hash(message, poly);
    SignatureBundle b;
    b.scheme = Scheme::multi_bit;
    b.length = static_cast<std::uint32_t>(L);
    b.message.assign(message.begin(), message.end());
    b.payload = {xor_bits(h.bits, keys.Y_a), xor_bits(keys.p_a, keys.X_a)};
    return b;
}

MultiVerdict verify_multi(const SignatureBundle& bundle, BitView K_X, BitView K_Y) {
    MultiVerdict v;
    const std::size_t L = bundle.length;
    if (bundle.scheme != Scheme::multi_bit) {
        v.reason = "not a multi-bit bundle";
        return v;
    }
    if (L == 0 || K_X.size() != L || K_Y.size() != L || bundle.payload[0].size() != L ||
        bundle.payload[1].size() != L) {
        v.reason = "malformed lengths";
        return v;
    }
    const BitString p = xor_bits(bundle.payload[1], K_X);
    const BitString expected = xor_bits(bundle.payload[0], K_Y);
    const HashDigest h = gdh_hash(bundle.message, generate_irreducible(p, L));
    v.accept = h.bits == expected;
    if (!v.accept) v.reason = "hash mismatch";
    return v;
}

// ---------------------------------------------------------------- framing

namespace {

void put_be(std::vector<std::uint8_t>& out, std::uint64_t value, int bytes) {
    for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

std::uint64_t get_be(std::span<const std::uint8_t> in, std::size_t& pos, int bytes) {
    if (pos + static_cast<std::size_t>(bytes) > in.size()) throw std::invalid_argument("bundle truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v = (v << 8) | in[pos++];
    return v;
}

BitString take_bits(std::span<const std::uint8_t> in, std::size_t& pos, std::size_t nbits) {
    const std::size_t nbytes = (nbits + 7) / 8;
    if (pos + nbytes > in.size()) throw std::invalid_argument("bundle truncated");
    BitString out = unpack_bits(in.subspan(pos, nbytes), nbits);
    pos += nbytes;
    return out;
}

}  // namespace

std::vector<std::uint8_t> serialize(const SignatureBundle& bundle) {
    std::vector<std::uint8_t> out;
    out.push_back(bundle.scheme == Scheme::single_bit ? 1 : 2);
    put_be(out, bundle.length, 4);
    put_be(out, bundle.message.size(), 8);
    for (BitView part : {BitView(bundle.message), BitView(bundle.payload[0]), BitView(bundle.payload[1])}) {
        const auto packed = pack_bits(part);
        out.insert(out.end(), packed.begin(), packed.end());
    }
    return out;
}

SignatureBundle deserialize_bundle(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    SignatureBundle b;
    const auto tag = get_be(bytes, pos, 1);
    if (tag != 1 && tag != 2) throw std::invalid_argument("unknown scheme tag");
    b.scheme = tag == 1 ? Scheme::single_bit : Scheme::multi_bit;
    b.length = static_cast<std::uint32_t>(get_be(bytes, pos, 4));
    const std::uint64_t mbits = get_be(bytes, pos, 8);
    if (mbits > bytes.size() * 8) throw std::invalid_argument("bundle truncated");
    b.message = take_bits(bytes, pos, mbits);
    b.payload[0] = take_bits(bytes, pos, b.length);
    b.payload[1] = take_bits(bytes, pos, b.length);
    if (pos != bytes.size()) throw std::invalid_argument("trailing bytes after bundle");
    return b;
}

}  // namespace tfqds
