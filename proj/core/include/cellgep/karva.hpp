#pragma once

#include <span>
#include <string>
#include <vector>

#include "cellgep/rng.hpp"
#include "cellgep/search_space.hpp"

namespace cellgep {

/// Fixed-length head+tail symbol sequence for one cell or gene.
///
/// Positions past the expressed prefix are kept as genetic material; decode()
/// never reads them but the variation operators move them around.
struct Genotype {
    Context context = Context::NormalCell;
    int head_len = 0;
    std::vector<Symbol> symbols;

    int length() const { return static_cast<int>(symbols.size()); }
    int tail_len() const { return length() - head_len; }
    std::span<const Symbol> head() const { return std::span(symbols).first(static_cast<std::size_t>(head_len)); }
    std::span<const Symbol> tail() const { return std::span(symbols).subspan(static_cast<std::size_t>(head_len)); }

    friend bool operator==(const Genotype&, const Genotype&) = default;
};

Genotype make_genotype(Context context, std::vector<Symbol> head, std::vector<Symbol> tail);

struct TreeNode {
    Symbol symbol;
    std::vector<int> children;
};

/// Expression tree in breadth-first order: node i is genotype position i.
struct ExpressionTree {
    std::vector<TreeNode> nodes;
    int root = 0;
    int used_length = 0;

    const TreeNode& at(int id) const { return nodes.at(static_cast<std::size_t>(id)); }
};

Genotype random_genotype(const Alphabet& alphabet, Rng& rng);

/// Karva decoding. Throws std::invalid_argument if the genotype runs out of
/// symbols, which cannot happen for a valid genotype.
ExpressionTree decode(const Genotype& g);

struct Violation {
    int index = -1; ///< offending position, -1 for whole-genotype problems
    std::string message;
};

/// Every invariant violation of `g` against `alphabet`; empty means valid.
std::vector<Violation> validate(const Genotype& g, const Alphabet& alphabet);

inline bool is_valid(const Genotype& g, const Alphabet& alphabet) { return validate(g, alphabet).empty(); }

/// Gene references at expressed positions, sorted and unique.
std::vector<GeneId> expressed_genes(const Genotype& g);

/// Gene references anywhere in the sequence, sorted and unique.
std::vector<GeneId> referenced_genes(const Genotype& g);

/// "add cat g1 add | g2 g3 g4 g5 g1"
std::string to_text(const Genotype& g);

/// Inverse of to_text(). Throws std::invalid_argument on unknown mnemonics
/// or a missing "|" delimiter.
Genotype genotype_from_text(Context context, const std::string& text);

/// Nested prefix form of the expressed tree, e.g. "add(cat(g3,g4),g1)".
std::string to_infix(const ExpressionTree& tree);

} // namespace cellgep
