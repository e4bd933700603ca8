#pragma once

#include <stdexcept>
#include <utility>

#include "cellgep/karva.hpp"
#include "cellgep/operator_rates.hpp"
#include "cellgep/rng.hpp"

namespace cellgep {

struct ContextMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

using GenotypePair = std::pair<Genotype, Genotype>;

/// Point mutation. A mutated head position always becomes a function;
/// a mutated tail position becomes a terminal. `alphabet` must carry
/// concrete terminals.
Genotype mutate(Genotype g, const Alphabet& alphabet, const OperatorRates& rates, Rng& rng);

/// Insertion-sequence transposition.
Genotype is_transpose(Genotype g, const OperatorRates& rates, Rng& rng);

/// Root insertion-sequence transposition.
Genotype ris_transpose(Genotype g, const OperatorRates& rates, Rng& rng);

GenotypePair one_point(Genotype a, Genotype b, const OperatorRates& rates, Rng& rng);
GenotypePair two_point(Genotype a, Genotype b, const OperatorRates& rates, Rng& rng);

/// mutation, IS, RIS, one-point, two-point, in that order.
GenotypePair reproduce_pair(const Genotype& a, const Genotype& b, const Alphabet& alphabet,
                            const OperatorRates& rates, Rng& rng);

// Deterministic cores of the random operators above.

/// Copies symbols [start, start+len) (clipped to the sequence) into the head
/// at `pos`, shifting the head right and truncating it at head length.
Genotype insert_transposon(Genotype g, int start, int len, int pos);

/// Swaps all positions >= cut.
GenotypePair crossover_one_point(Genotype a, Genotype b, int cut);

/// Swaps positions in [first, last).
GenotypePair crossover_two_point(Genotype a, Genotype b, int first, int last);

} // namespace cellgep
