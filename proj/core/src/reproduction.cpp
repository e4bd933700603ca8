#include "cellgep/reproduction.hpp"

#include <algorithm>

namespace cellgep {

namespace {

void require_same_shape(const Genotype& a, const Genotype& b)
{
    if (a.context != b.context || a.head_len != b.head_len || a.length() != b.length()) {
        throw ContextMismatch("recombination of genotypes from different contexts: "
                              + std::string(to_string(a.context)) + " vs " + std::string(to_string(b.context)));
    }
}

int pick_element_length(const OperatorRates& rates, Rng& rng)
{
    const auto& lengths = rates.is_element_lengths;
    if (lengths.empty()) {
        return 1;
    }
    return std::max(1, lengths[rng.uniform_index(lengths.size())]);
}

} // namespace

Genotype mutate(Genotype g, const Alphabet& alphabet, const OperatorRates& rates, Rng& rng)
{
    if (rates.mutation_rate <= 0.0) {
        return g;
    }
    for (int i = 0; i < g.length(); ++i) {
        if (!rng.bernoulli(rates.mutation_rate)) {
            continue;
        }
        const auto& pool = i < g.head_len ? alphabet.functions : alphabet.terminals;
        if (pool.empty()) {
            throw std::invalid_argument("mutate: alphabet has no concrete terminals");
        }
        g.symbols[static_cast<std::size_t>(i)] = pool[rng.uniform_index(pool.size())];
    }
    return g;
}

Genotype insert_transposon(Genotype g, int start, int len, int pos)
{
    const int total = g.length();
    if (start < 0 || start >= total || len < 1 || pos < 0 || pos >= g.head_len) {
        throw std::out_of_range("insert_transposon: bad coordinates");
    }
    len = std::min(len, total - start);
    std::vector<Symbol> element(g.symbols.begin() + start, g.symbols.begin() + start + len);

    std::vector<Symbol> head(g.symbols.begin(), g.symbols.begin() + pos);
    head.insert(head.end(), element.begin(), element.end());
    head.insert(head.end(), g.symbols.begin() + pos, g.symbols.begin() + g.head_len);
    head.resize(static_cast<std::size_t>(g.head_len));
    std::copy(head.begin(), head.end(), g.symbols.begin());
    return g;
}

Genotype is_transpose(Genotype g, const OperatorRates& rates, Rng& rng)
{
    if (!rng.bernoulli(rates.is_rate) || g.head_len < 2) {
        return g;
    }
    const int len = pick_element_length(rates, rng);
    const int start = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(g.length())));
    const int pos = static_cast<int>(rng.uniform_int(1, g.head_len - 1));
    return insert_transposon(std::move(g), start, len, pos);
}

Genotype ris_transpose(Genotype g, const OperatorRates& rates, Rng& rng)
{
    if (!rng.bernoulli(rates.ris_rate) || g.head_len < 1) {
        return g;
    }
    const int from = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(g.head_len)));
    const int len = pick_element_length(rates, rng);
    for (int i = from; i < g.head_len; ++i) {
        if (arity_of(g.symbols[static_cast<std::size_t>(i)]) > 0) {
            return insert_transposon(std::move(g), i, len, 0);
        }
    }
    return g;
}

GenotypePair crossover_one_point(Genotype a, Genotype b, int cut)
{
    require_same_shape(a, b);
    if (cut < 0 || cut > a.length()) {
        throw std::out_of_range("crossover_one_point: cut outside sequence");
    }
    std::swap_ranges(a.symbols.begin() + cut, a.symbols.end(), b.symbols.begin() + cut);
    return {std::move(a), std::move(b)};
}

GenotypePair crossover_two_point(Genotype a, Genotype b, int first, int last)
{
    require_same_shape(a, b);
    if (first > last) {
        std::swap(first, last);
    }
    if (first < 0 || last > a.length()) {
        throw std::out_of_range("crossover_two_point: cut outside sequence");
    }
    std::swap_ranges(a.symbols.begin() + first, a.symbols.begin() + last, b.symbols.begin() + first);
    return {std::move(a), std::move(b)};
}

GenotypePair one_point(Genotype a, Genotype b, const OperatorRates& rates, Rng& rng)
{
    require_same_shape(a, b);
    if (!rng.bernoulli(rates.one_point_rate)) {
        return {std::move(a), std::move(b)};
    }
    const int cut = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(a.length())));
    return crossover_one_point(std::move(a), std::move(b), cut);
}

GenotypePair two_point(Genotype a, Genotype b, const OperatorRates& rates, Rng& rng)
{
    require_same_shape(a, b);
    if (!rng.bernoulli(rates.two_point_rate)) {
        return {std::move(a), std::move(b)};
    }
    const int n = a.length();
    const int first = static_cast<int>(rng.uniform_int(0, n));
    const int last = static_cast<int>(rng.uniform_int(0, n));
    return crossover_two_point(std::move(a), std::move(b), first, last);
}

GenotypePair reproduce_pair(const Genotype& a, const Genotype& b, const Alphabet& alphabet,
                            const OperatorRates& rates, Rng& rng)
{
    require_same_shape(a, b);
    Genotype x = mutate(a, alphabet, rates, rng);
    Genotype y = mutate(b, alphabet, rates, rng);
    x = is_transpose(std::move(x), rates, rng);
    y = is_transpose(std::move(y), rates, rng);
    x = ris_transpose(std::move(x), rates, rng);
    y = ris_transpose(std::move(y), rates, rng);
    auto [p, q] = one_point(std::move(x), std::move(y), rates, rng);
    return two_point(std::move(p), std::move(q), rates, rng);
}

} // namespace cellgep
