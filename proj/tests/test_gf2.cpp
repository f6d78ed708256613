#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <string>

#include "support.hpp"
#include "tfqds/gf2.hpp"

using namespace tfqds;

namespace {

BitString bits_of(const std::string& s) {
    BitString out;
    for (char c : s) out.push_back(static_cast<std::uint8_t>(c == '1'));
    return out;
}

}  // namespace

TEST_CASE("shipped division-hash vectors") {
    std::ifstream in(std::string(TFQDS_DATA_DIR) + "/fixtures/gdh_vectors.json");
    REQUIRE(in);
    const auto doc = nlohmann::json::parse(in);
    REQUIRE(doc["vectors"].size() >= 4);
    for (const auto& v : doc["vectors"]) {
        const BitString poly_bits = bits_of(v["poly"].get<std::string>());
        const BitString message = bits_of(v["message"].get<std::string>());
        const BitString digest = bits_of(v["digest"].get<std::string>());
        const Gf2Poly poly = Gf2Poly::from_bits_high_first(poly_bits);
        INFO("poly " << v["poly"].get<std::string>() << " message " << v["message"].get<std::string>());
        CHECK(gdh_hash(message, poly).bits == digest);
        CHECK(oracle::division_digest(message, oracle::mask_from_bits_high_first(poly_bits)) == digest);
    }
}

TEST_CASE("division hash agrees with long division on random inputs") {
    Rng rng = substream(5, 0);
    for (int t = 0; t < 300; ++t) {
        const int L = 2 + static_cast<int>(rng() % 40);
        const std::uint64_t mask = (std::uint64_t{1} << L) | (rng() & ((std::uint64_t{1} << L) - 1)) | 1U;
        const BitString message = random_bits(1 + rng() % 300, rng);
        CHECK(gdh_hash(message, Gf2Poly::from_mask(mask)).bits == oracle::division_digest(message, mask));
    }
}

TEST_CASE("zero and empty messages hash to zero") {
    const Gf2Poly poly = Gf2Poly::from_mask(0b1011);
    CHECK(gdh_hash(BitString(17, 0), poly).bits == BitString(3, 0));
    const HashDigest empty = gdh_hash(BitString{}, poly);
    CHECK(empty.bits == BitString(3, 0));
    CHECK(empty.empty_message);
}

TEST_CASE("irreducible polynomial generation") {
    SUBCASE("degree 3") {
        for (std::uint8_t a = 0; a < 8; ++a) {
            const BitString p_a = {static_cast<std::uint8_t>(a >> 2 & 1), static_cast<std::uint8_t>(a >> 1 & 1),
                                   static_cast<std::uint8_t>(a & 1)};
            const Gf2Poly p = generate_irreducible(p_a, 3);
            CHECK((p == Gf2Poly::from_mask(0b1011) || p == Gf2Poly::from_mask(0b1101)));
        }
    }
    SUBCASE("degree 1 is x + 1") {
        CHECK(generate_irreducible(BitString{0}, 1) == Gf2Poly::from_mask(0b11));
        CHECK(generate_irreducible(BitString{1}, 1) == Gf2Poly::from_mask(0b11));
    }
    SUBCASE("degree 8 outputs pass trial division") {
        Rng rng = substream(8, 0);
        for (int t = 0; t < 100; ++t) {
            const Gf2Poly p = generate_irreducible(random_bits(8, rng), 8);
            REQUIRE(p.degree() == 8);
            CHECK(oracle::irreducible_by_trial_division(p.words()[0]));
        }
    }
    SUBCASE("degree 64 and beyond") {
        Rng rng = substream(64, 0);
        for (std::size_t L : {63, 64, 65, 128, 300}) {
            const Gf2Poly p = generate_irreducible(random_bits(L, rng), L);
            CHECK(p.degree() == static_cast<long>(L));
            CHECK(is_irreducible(p));
        }
    }
}

TEST_CASE("irreducibility test matches trial division up to degree 12") {
    for (std::uint64_t m = 2; m < (std::uint64_t{1} << 13); ++m) {
        INFO("mask " << m);
        CHECK(is_irreducible(Gf2Poly::from_mask(m)) == oracle::irreducible_by_trial_division(m));
    }
}

TEST_CASE("polynomial arithmetic") {
    const Gf2Poly a = Gf2Poly::from_mask(0b1101), b = Gf2Poly::from_mask(0b111);
    CHECK((a * b) == Gf2Poly::from_mask(0b100011));
    CHECK((a * b) % b == Gf2Poly{});
    CHECK(gcd(a * b, b) == b);
    CHECK(a.square() == a * a);
    CHECK(Gf2Poly::monomial(100).degree() == 100);
    CHECK(Gf2Poly::from_bits_high_first(Gf2Poly::monomial(70).to_bits_high_first(71)) == Gf2Poly::monomial(70));
}

TEST_CASE("collision probability stays under the division-hash bound") {
    // Two fixed distinct n-bit messages collide under a random irreducible
    // polynomial of degree L with probability at most about 2n/L * 2^-L.
    const std::size_t L = 16, n = 256;
    Rng rng = substream(16, 0);
    const BitString m1 = random_bits(n, rng);
    BitString m2 = m1;
    m2[n / 3] ^= 1U;
    m2[n - 1] ^= 1U;
    const int draws = 100000;
    int collisions = 0;
    for (int i = 0; i < draws; ++i) {
        const Gf2Poly p = generate_irreducible(random_bits(L, rng), L);
        collisions += gdh_hash(m1, p).bits == gdh_hash(m2, p).bits;
    }
    const double bound = 2.0 * static_cast<double>(n) / L * std::pow(2.0, -static_cast<double>(L));
    const double expected = bound * draws;
    CHECK(collisions <= expected + 4.0 * std::sqrt(expected) + 1.0);
}
