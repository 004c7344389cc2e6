#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "saecrypt/chaos.hpp"
#include "saecrypt/error.hpp"
#include "saecrypt/rng.hpp"

using namespace saecrypt;
namespace fs = std::filesystem;

namespace {

CompressedImage payload_with_seed(double first_code_raw, std::size_t n = 64) {
    CompressedImage ci;
    ci.header = {8, 8, 1, 8, 1, 1, static_cast<std::uint32_t>(n), 1, 0};
    ci.first_code_raw = first_code_raw;
    ci.codes.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) ci.codes[i] = static_cast<std::uint8_t>(i * 37);
    return ci;
}

fs::path temp_path(const std::string& name) {
    return fs::temp_directory_path() / ("saecrypt_test_chaos_" + name);
}

double byte_agreement(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
    return static_cast<double>(same) / static_cast<double>(a.size());
}

} // namespace

TEST_CASE("key validation") {
    CHECK_NOTHROW((ChaoticKey{0.3, 4.0, 0}.validate()));
    CHECK_NOTHROW((ChaoticKey{1e-6, 3.57, 0}.validate()));
    CHECK_THROWS_AS((ChaoticKey{0.0, 4.0, 0}.validate()), InvalidArgument);
    CHECK_THROWS_AS((ChaoticKey{1.0, 4.0, 0}.validate()), InvalidArgument);
    CHECK_THROWS_AS((ChaoticKey{0.3, 3.5699, 0}.validate()), InvalidArgument);
    CHECK_THROWS_AS((ChaoticKey{0.3, 4.0000001, 0}.validate()), InvalidArgument);
    CHECK_THROWS_AS((ChaoticKey{0.3, std::nan(""), 0}.validate()), InvalidArgument);
}

TEST_CASE("logistic map iterates match hand evaluation") {
    const Keystream ks = logistic_sequence({0.2, 4.0, 0}, 3);
    // independent evaluation of the recurrence in 64-bit arithmetic
    double x = 0.2;
    for (int i = 0; i < 3; ++i) {
        x = 4.0 * x * (1.0 - x);
        CHECK(ks.values[i] == x);
    }
    CHECK(ks.values[0] == doctest::Approx(0.64).epsilon(1e-15));
    CHECK(ks.values[1] == doctest::Approx(0.9216).epsilon(1e-15));
    CHECK(ks.values[2] == doctest::Approx(0.28901376).epsilon(1e-15));
    CHECK(ks.perturbations == 0);
    CHECK(ks.x0_used == 0.2);
    CHECK(ks.bytes == std::vector<std::uint8_t>{163, 235, 73});
}

TEST_CASE("burn-in discards the leading iterates") {
    const Keystream full = logistic_sequence({0.3, 3.9, 0}, 50);
    const Keystream burned = logistic_sequence({0.3, 3.9, 10}, 40);
    for (std::size_t i = 0; i < 40; ++i) CHECK(burned.values[i] == full.values[i + 10]);
}

TEST_CASE("degenerate seeds are perturbed deterministically") {
    SUBCASE("fixed point 0.75 at r = 4") {
        const Keystream ks = logistic_sequence({0.75, 4.0, 0}, 100);
        CHECK(ks.perturbations >= 1);
        CHECK(ks.x0_used == doctest::Approx(0.75 + 1e-6 * ks.perturbations).epsilon(1e-12));
        CHECK(logistic_sequence({0.75, 4.0, 0}, 100).values == ks.values);
    }
    SUBCASE("0.5 collapses to 1 then 0 at r = 4") {
        const Keystream ks = logistic_sequence({0.5, 4.0, 1000}, 1000);
        CHECK(ks.perturbations == 1);
        CHECK(ks.x0_used == 0.5 + 1e-6);
    }
}

TEST_CASE("keystream values and bytes stay in range") {
    const Keystream ks = logistic_sequence({0.123456, 4.0, 1000}, 1 << 16);
    for (std::size_t i = 0; i < ks.values.size(); ++i) {
        REQUIRE((ks.values[i] > 0.0 && ks.values[i] < 1.0));
        REQUIRE(ks.bytes[i] == keystream_byte(ks.values[i]));
    }
    CHECK(keystream_byte(0.0) == 0);
    CHECK(keystream_byte(0.999999999) == 255);
    CHECK(keystream_byte(1.0) == 255);
    CHECK(keystream_byte(0.5) == 128);
}

TEST_CASE("keystream histogram follows the arcsine invariant density") {
    // At r = 4 the orbit is distributed with density 1 / (pi sqrt(x (1 - x))),
    // so the edge bytes are about ten times as frequent as the middle ones.
    const std::size_t n = 1 << 20;
    const Keystream ks = logistic_sequence({0.3141592653589793, 4.0, 1000}, n);
    std::array<std::size_t, 256> hist{};
    for (auto b : ks.bytes) ++hist[b];
    const double pi = std::acos(-1.0);
    const double uniform = static_cast<double>(n) / 256.0;
    for (std::size_t b = 0; b < 256; ++b) {
        const double mass = 2.0 / pi *
                            (std::asin(std::sqrt((b + 1) / 256.0)) - std::asin(std::sqrt(b / 256.0)));
        const double expected = mass * static_cast<double>(n);
        INFO("byte " << b);
        CHECK(std::fabs(static_cast<double>(hist[b]) - expected) < 0.1 * expected);
        if (b >= 3 && b <= 252) CHECK(static_cast<double>(hist[b]) < 3.0 * uniform);
    }
}

TEST_CASE("key sensitivity: seeds 1e-10 apart give unrelated streams") {
    const std::size_t n = 65536;
    const auto a = logistic_sequence({0.37, 4.0, 1000}, n).bytes;
    const auto b = logistic_sequence({0.37 + 1e-10, 4.0, 1000}, n).bytes;
    CHECK(1.0 - byte_agreement(a, b) > 0.95);
}

TEST_CASE("derive_key") {
    CHECK(derive_key(payload_with_seed(0.37)).x0 == 0.37);
    CHECK(derive_key(payload_with_seed(1e-9)).x0 == 1e-6);
    CHECK(derive_key(payload_with_seed(0.5), 4.0).x0 == 0.5 + 1e-6);
    const ChaoticKey k = derive_key(payload_with_seed(0.37), 3.9);
    CHECK(k.r == 3.9);
    CHECK(k.burn_in == 1000);
    CHECK_THROWS_AS(derive_key(payload_with_seed(0.37), 3.0), InvalidArgument);
    // the stored key reproduces the stream without further perturbation
    CHECK(logistic_sequence(derive_key(payload_with_seed(0.75)), 64).perturbations == 0);
}

TEST_CASE("XOR encryption") {
    SUBCASE("bit arithmetic") { CHECK((0xFF ^ 0x0F) == 0xF0); }
    SUBCASE("ciphertext is payload XOR keystream bytes") {
        const CompressedImage ci = payload_with_seed(0.4);
        const ChaoticKey key = derive_key(ci);
        const auto ks = logistic_sequence(key, ci.codes.size()).bytes;
        const auto e = encrypt(ci, key);
        for (std::size_t i = 0; i < e.size(); ++i) CHECK(e[i] == (ci.codes[i] ^ ks[i]));
    }
    SUBCASE("property: decrypt(encrypt(C)) == C") {
        Rng rng(99);
        for (int trial = 0; trial < 50; ++trial) {
            CompressedImage ci = payload_with_seed(0.01 + 0.98 * rng.uniform(), 1 + rng.below(500));
            for (auto& c : ci.codes) c = static_cast<std::uint8_t>(rng.below(256));
            const ChaoticKey key{0.001 + 0.998 * rng.uniform(), 3.6 + 0.4 * rng.uniform(), rng.below(2000)};
            const auto e = encrypt(ci, key);
            REQUIRE(decrypt(e, key, e.size()) == ci.codes);
        }
    }
    SUBCASE("wrong seed scrambles almost every byte") {
        CompressedImage ci = payload_with_seed(0.4, 65536);
        const ChaoticKey key = derive_key(ci);
        const auto e = encrypt(ci, key);
        ChaoticKey wrong = key;
        wrong.x0 += 1e-10;
        CHECK(1.0 - byte_agreement(decrypt(e, wrong, e.size()), ci.codes) > 0.95);
    }
    SUBCASE("length mismatch") {
        CHECK_THROWS_AS(decrypt(std::vector<std::uint8_t>(5), ChaoticKey{}, 6), InvalidArgument);
    }
    SUBCASE("container helpers flip the flag and keep the header") {
        const CompressedImage ci = payload_with_seed(0.4);
        const ChaoticKey key = derive_key(ci);
        const CompressedImage enc = encrypt_image(ci, key);
        CHECK(enc.encrypted);
        CHECK(enc.header == ci.header);
        CHECK(enc.first_code_raw == ci.first_code_raw);
        CHECK(enc.codes != ci.codes);
        CHECK(decrypt_image(enc, key) == ci);
        CHECK_THROWS_AS(encrypt_image(enc, key), InvalidArgument);
        CHECK_THROWS_AS(decrypt_image(ci, key), InvalidArgument);
    }
}

TEST_CASE("key file") {
    const ChaoticKey key{0.1 + 1e-17 * 3, 3.999999999999, 1000};
    const auto path = temp_path("k.key");
    write_key(key, path);

    SUBCASE("bit-exact round trip") { CHECK(read_key(path) == key); }
    SUBCASE("three hex-float lines") {
        const std::string text = format_key(key);
        CHECK(text.rfind("x0=0x", 0) == 0);
        CHECK(text.find("\nr=0x") != std::string::npos);
        CHECK(text.find("\nburn_in=1000\n") != std::string::npos);
    }
    SUBCASE("property: random keys survive") {
        Rng rng(4);
        for (int i = 0; i < 200; ++i) {
            const ChaoticKey k{kMinSeed + (kMaxSeed - kMinSeed) * rng.uniform(),
                               3.57 + 0.43 * rng.uniform(), rng.below(100000)};
            REQUIRE(parse_key(format_key(k)) == k);
        }
    }
    SUBCASE("out-of-range values are rejected") {
        CHECK_THROWS_WITH_AS(parse_key("x0=0x1p-2\nr=0x1.8p+1\nburn_in=10\n"),
                             doctest::Contains("r must lie"), FormatError);
        CHECK_THROWS_WITH_AS(parse_key("x0=0x0p+0\nr=0x1p+2\nburn_in=10\n"),
                             doctest::Contains("x0 must lie"), FormatError);
    }
    SUBCASE("malformed files") {
        CHECK_THROWS_AS(parse_key("x0=0x1p-2\nr=0x1p+2\n"), FormatError);
        CHECK_THROWS_AS(parse_key("x0=zzz\nr=0x1p+2\nburn_in=1\n"), FormatError);
        CHECK_THROWS_AS(parse_key("x0=0x1p-2\nr=0x1p+2\nburn_in=-1\n"), FormatError);
        CHECK_THROWS_AS(parse_key("x0=0x1p-2\nr=0x1p+2\nburn_in=1\nextra=2\n"), FormatError);
        CHECK_THROWS_AS(read_key(temp_path("missing.key")), FormatError);
    }
}
