#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace cellgep {

/// Seeded random source used by every stochastic operation in the engine.
///
/// Draws go through this wrapper rather than the <random> distributions,
/// whose algorithms differ between standard libraries. The generator state
/// round-trips through text for snapshots.
class Rng {
public:
    /// Identifies the generator and draw algorithm in serialized snapshots.
    static constexpr const char* kAlgorithm = "mt19937_64/rejection-v1";

    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n);

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Uniform real in [0, 1) with 53 bits of resolution.
    double uniform01();

    bool bernoulli(double p);

    /// Derives an independent child stream (used for per-candidate work).
    Rng fork();

    std::string state() const;
    void restore(const std::string& state);

    friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace cellgep
