#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "saecrypt/codec.hpp"

namespace saecrypt {

// Logistic-map parameters x_{n+1} = r x_n (1 - x_n). This is the shared secret.
struct ChaoticKey {
    double x0 = 0.5;
    double r = 4.0;
    std::size_t burn_in = 1000;

    // Throws InvalidArgument unless 1e-6 <= x0 <= 1-1e-6 and 3.5699 < r <= 4.
    void validate() const;

    friend bool operator==(const ChaoticKey&, const ChaoticKey&) = default;
};

inline constexpr double kMinSeed = 1e-6;
inline constexpr double kMaxSeed = 1.0 - 1e-6;
inline constexpr double kMinChaoticR = 3.5699;
inline constexpr double kSeedPerturbation = 1e-6;
inline constexpr double kFixedPointTolerance = 1e-12;
inline constexpr int kMaxPerturbations = 100;
inline constexpr std::size_t kDefaultBurnIn = 1000;

struct Keystream {
    std::vector<double> values;        // x_1 .. x_n after burn-in
    std::vector<std::uint8_t> bytes;   // floor(256 x), clamped to 255
    double x0_used = 0.0;              // seed after any degeneracy perturbation
    int perturbations = 0;
};

std::uint8_t keystream_byte(double x);

// Seeds x0 from ci.first_code_raw (clamped) and settles it against the
// degeneracy checks for a stream of the payload's length, so the returned key
// reproduces the stream without further perturbation.
ChaoticKey derive_key(const CompressedImage& ci, double r = 4.0);

// Iterates the map, discards burn_in values and returns the next n. An orbit
// that hits 0 or 1 or stalls on a fixed point restarts from x0 + 1e-6.
// Throws NumericError when that persists for 100 attempts.
Keystream logistic_sequence(const ChaoticKey& key, std::size_t n);

// XOR with the keystream; the same call decrypts.
std::vector<std::uint8_t> xor_keystream(std::span<const std::uint8_t> data, const ChaoticKey& key);

std::vector<std::uint8_t> encrypt(const CompressedImage& ci, const ChaoticKey& key);
std::vector<std::uint8_t> decrypt(std::span<const std::uint8_t> cipher, const ChaoticKey& key,
                                  std::size_t n);

// Whole-container helpers: codes replaced by ciphertext and the encrypted flag toggled.
CompressedImage encrypt_image(const CompressedImage& ci, const ChaoticKey& key);
CompressedImage decrypt_image(const CompressedImage& ci, const ChaoticKey& key);

// Three text lines: x0=<hex-float>, r=<hex-float>, burn_in=<decimal>.
std::string format_key(const ChaoticKey& key);
ChaoticKey parse_key(const std::string& text);

void write_key(const ChaoticKey& key, const std::filesystem::path& path);
ChaoticKey read_key(const std::filesystem::path& path);

} // namespace saecrypt
