#pragma once

#include <vector>

namespace cellgep {

/// Variation-operator probabilities. Defaults are the classic GEP settings.
struct OperatorRates {
    double mutation_rate = 0.05; ///< per symbol
    double is_rate = 0.1;        ///< per genotype
    double ris_rate = 0.1;       ///< per genotype
    double one_point_rate = 0.2; ///< per pair
    double two_point_rate = 0.5; ///< per pair
    std::vector<int> is_element_lengths{1, 2, 3};

    static OperatorRates zero()
    {
        return OperatorRates{0.0, 0.0, 0.0, 0.0, 0.0, {1, 2, 3}};
    }

    friend bool operator==(const OperatorRates&, const OperatorRates&) = default;
};

} // namespace cellgep
