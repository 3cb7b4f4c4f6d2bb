#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stabsched {

/// Raised for malformed or inconsistent input data (case files, configs,
/// datasets, surrogate files). Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a conic solve fails numerically. Maps to CLI exit code 2.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// ============================================================================
// Deterministic RNG
//
// A small xoshiro-style generator used everywhere randomness is part of an
// output contract. std::shuffle / std::uniform_real_distribution are avoided
// on purpose: their sequences differ between standard libraries, this one is
// pinned by the code itself.
// ============================================================================

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // splitmix64 expansion of the seed
        std::uint64_t x = seed;
        for (auto& w : s_) {
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            w = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller (always consumes two draws).
    double normal();

    /// Fisher-Yates shuffle with this generator.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = std::size_t(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

/// Shortest decimal string that round-trips the double exactly.
/// Used for every numeric field written to CSV so reruns are byte-identical.
std::string format_double(double v);

}  // namespace stabsched
