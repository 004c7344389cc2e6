#include "saecrypt/chaos.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "byte_io.hpp"
#include "saecrypt/error.hpp"

namespace saecrypt {

void ChaoticKey::validate() const {
    if (!(x0 >= kMinSeed && x0 <= kMaxSeed))
        throw InvalidArgument("key x0 must lie in [1e-6, 1-1e-6]");
    if (!(r > kMinChaoticR && r <= 4.0)) throw InvalidArgument("key r must lie in (3.5699, 4]");
}

std::uint8_t keystream_byte(double x) {
    return static_cast<std::uint8_t>(std::min(255.0, std::floor(x * 256.0)));
}

namespace {

double perturb(double x0) {
    x0 += kSeedPerturbation;
    if (x0 > kMaxSeed) x0 -= kMaxSeed - kMinSeed;
    return x0;
}

// Fills out with n post-burn-in iterates; false if the orbit degenerated.
bool iterate_orbit(double x0, double r, std::size_t burn_in, std::size_t n,
                   std::vector<double>& out) {
    out.clear();
    double x = x0;
    const std::size_t total = burn_in + n;
    for (std::size_t i = 0; i < total; ++i) {
        const double next = r * x * (1.0 - x);
        if (!(next > 0.0 && next < 1.0)) return false;
        if (std::fabs(next - x) < kFixedPointTolerance) return false;
        x = next;
        if (i >= burn_in) out.push_back(x);
    }
    return true;
}

} // namespace

Keystream logistic_sequence(const ChaoticKey& key, std::size_t n) {
    key.validate();
    if (n == 0) throw InvalidArgument("keystream length must be at least 1");

    Keystream ks;
    ks.values.reserve(n);
    double x0 = key.x0;
    for (int attempt = 0; attempt < kMaxPerturbations; ++attempt) {
        if (iterate_orbit(x0, key.r, key.burn_in, n, ks.values)) {
            ks.x0_used = x0;
            ks.perturbations = attempt;
            ks.bytes.resize(n);
            std::transform(ks.values.begin(), ks.values.end(), ks.bytes.begin(), keystream_byte);
            return ks;
        }
        x0 = perturb(x0);
    }
    throw NumericError("logistic map stays degenerate after " +
                       std::to_string(kMaxPerturbations) + " perturbations of x0");
}

ChaoticKey derive_key(const CompressedImage& ci, double r) {
    ci.validate();
    ChaoticKey key;
    key.x0 = std::clamp(ci.first_code_raw, kMinSeed, kMaxSeed);
    key.r = r;
    key.burn_in = kDefaultBurnIn;
    key.validate();
    key.x0 = logistic_sequence(key, std::max<std::size_t>(1, ci.codes.size())).x0_used;
    return key;
}

std::vector<std::uint8_t> xor_keystream(std::span<const std::uint8_t> data, const ChaoticKey& key) {
    if (data.empty()) return {};
    const Keystream ks = logistic_sequence(key, data.size());
    std::vector<std::uint8_t> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i] ^ ks.bytes[i];
    return out;
}

std::vector<std::uint8_t> encrypt(const CompressedImage& ci, const ChaoticKey& key) {
    return xor_keystream(ci.codes, key);
}

std::vector<std::uint8_t> decrypt(std::span<const std::uint8_t> cipher, const ChaoticKey& key,
                                  std::size_t n) {
    if (cipher.size() != n)
        throw InvalidArgument("ciphertext length " + std::to_string(cipher.size()) +
                              " does not match expected " + std::to_string(n));
    return xor_keystream(cipher, key);
}

CompressedImage encrypt_image(const CompressedImage& ci, const ChaoticKey& key) {
    if (ci.encrypted) throw InvalidArgument("payload is already encrypted");
    CompressedImage out = ci;
    out.codes = encrypt(ci, key);
    out.encrypted = true;
    return out;
}

CompressedImage decrypt_image(const CompressedImage& ci, const ChaoticKey& key) {
    if (!ci.encrypted) throw InvalidArgument("payload is not encrypted");
    CompressedImage out = ci;
    out.codes = decrypt(ci.codes, key, ci.header.payload_size());
    out.encrypted = false;
    return out;
}

std::string format_key(const ChaoticKey& key) {
    char x0[64];
    char r[64];
    std::snprintf(x0, sizeof x0, "%a", key.x0);
    std::snprintf(r, sizeof r, "%a", key.r);
    return std::string("x0=") + x0 + "\nr=" + r + "\nburn_in=" + std::to_string(key.burn_in) + "\n";
}

namespace {

double parse_hex_double(const std::string& s) {
    if (s.empty()) throw FormatError("key file: empty value");
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v))
        throw FormatError("key file: malformed number '" + s + "'");
    return v;
}

} // namespace

ChaoticKey parse_key(const std::string& text) {
    ChaoticKey key;
    bool have_x0 = false, have_r = false, have_burn = false;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("key file: expected name=value, got '" + line + "'");
        const std::string name = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (name == "x0") {
            key.x0 = parse_hex_double(value);
            have_x0 = true;
        } else if (name == "r") {
            key.r = parse_hex_double(value);
            have_r = true;
        } else if (name == "burn_in") {
            std::size_t v = 0;
            const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc{} || p != value.data() + value.size() || value.empty())
                throw FormatError("key file: malformed burn_in '" + value + "'");
            key.burn_in = v;
            have_burn = true;
        } else {
            throw FormatError("key file: unknown field '" + name + "'");
        }
    }
    if (!have_x0 || !have_r || !have_burn) throw FormatError("key file: missing x0, r or burn_in");
    try {
        key.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("key file: ") + e.what());
    }
    return key;
}

void write_key(const ChaoticKey& key, const std::filesystem::path& path) {
    key.validate();
    const std::string text = format_key(key);
    detail::write_file(path, std::span<const std::uint8_t>(
                                 reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ChaoticKey read_key(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    return parse_key(std::string(bytes.begin(), bytes.end()));
}

} // namespace saecrypt
