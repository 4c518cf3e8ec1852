#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace rastergen {

// Error taxonomy shared by all modules. Each failure carries a kind so tests
// and the CLI can tell classes of failure apart without string matching.
enum class ErrorKind {
    invalid_argument,
    capacity,       // sequence exceeded a pre-allocated arena
    parse,          // malformed token stream; position carried in Error::position
    numeric,        // NaN/inf where finite values are required
    template_field, // missing placeholder in a system-prompt template
    io,
    bad_magic,
    bad_version,
    bad_checksum,
    shape_mismatch,
    bounds,
    config,
    data,
    generation,
};

struct Error : std::runtime_error {
    ErrorKind kind;
    size_t position; // meaningful for parse/classification errors, else 0

    Error(ErrorKind k, const std::string& msg, size_t pos = 0)
        : std::runtime_error(msg), kind(k), position(pos) {}
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg, size_t pos = 0) {
    throw Error(k, msg, pos);
}

inline void require(bool cond, ErrorKind k, const std::string& msg, size_t pos = 0) {
    if (!cond) {
        fail(k, msg, pos);
    }
}

// Counter-based RNG: every draw is a pure function of (seed, stream, counter),
// so parallel consumers get reproducible, non-overlapping streams by
// construction. splitmix64-style finalizer.
class CounterRng {
public:
    explicit CounterRng(uint64_t seed, uint64_t stream = 0)
        : key_(mix64(seed + 0x632be59bd9b4e019ull) ^ mix64(stream + 0x9e3779b97f4a7c15ull)) {}

    uint64_t next_u64() {
        counter_ += 1;
        return mix64(counter_ * 0xd1342543de82ef95ull ^ key_);
    }

    // uniform in [0,1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    float next_float() {
        return static_cast<float>(next_double());
    }

    // uniform integer in [0, n)
    uint64_t next_below(uint64_t n) {
        return static_cast<uint64_t>(next_double() * static_cast<double>(n)) % n;
    }

    // standard normal via Box-Muller (second value discarded; determinism
    // beats thrift here)
    double next_gaussian() {
        const double u1 = 1.0 - next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    static uint64_t mix64(uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

private:
    uint64_t key_;
    uint64_t counter_ = 0;
};

} // namespace rastergen
