#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>

#include "cellgep/rng.hpp"

namespace cellgep {

/// Strict ranking used by every selection in the engine: evaluated beats
/// unevaluated, higher fitness beats lower, and ties go to the lower id.
inline bool ranks_above(std::optional<double> fa, std::uint64_t ida, std::optional<double> fb, std::uint64_t idb)
{
    if (fa.has_value() != fb.has_value()) {
        return fa.has_value();
    }
    if (fa && *fa != *fb) {
        return *fa > *fb;
    }
    return ida < idb;
}

/// Draws `k` members with replacement and returns the index of the best one.
template <class T, class IdFn, class FitnessFn>
std::size_t tournament_select(std::span<const T> population, int k, Rng& rng, IdFn id_of, FitnessFn fitness_of)
{
    if (population.empty()) {
        throw std::invalid_argument("tournament_select: empty population");
    }
    if (k < 1) {
        throw std::invalid_argument("tournament_select: tournament size must be >= 1");
    }
    std::size_t best = rng.uniform_index(population.size());
    for (int i = 1; i < k; ++i) {
        const std::size_t c = rng.uniform_index(population.size());
        const T& a = population[c];
        const T& b = population[best];
        if (ranks_above(fitness_of(a), id_of(a), fitness_of(b), id_of(b))) {
            best = c;
        }
    }
    return best;
}

} // namespace cellgep
