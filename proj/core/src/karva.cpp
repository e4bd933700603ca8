#include "cellgep/karva.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace cellgep {

Genotype make_genotype(Context context, std::vector<Symbol> head, std::vector<Symbol> tail)
{
    Genotype g;
    g.context = context;
    g.head_len = static_cast<int>(head.size());
    g.symbols = std::move(head);
    g.symbols.insert(g.symbols.end(), tail.begin(), tail.end());
    return g;
}

Genotype random_genotype(const Alphabet& alphabet, Rng& rng)
{
    if (alphabet.terminals.empty()) {
        throw std::invalid_argument("random_genotype: alphabet has no concrete terminals");
    }
    const auto n_fun = alphabet.functions.size();
    const auto n_term = alphabet.terminals.size();
    Genotype g;
    g.context = alphabet.context;
    g.head_len = alphabet.head_len;
    g.symbols.reserve(static_cast<std::size_t>(alphabet.length()));
    for (int i = 0; i < alphabet.head_len; ++i) {
        auto pick = rng.uniform_index(n_fun + n_term);
        g.symbols.push_back(pick < n_fun ? alphabet.functions[pick] : alphabet.terminals[pick - n_fun]);
    }
    for (int i = 0; i < alphabet.tail_len(); ++i) {
        g.symbols.push_back(alphabet.terminals[rng.uniform_index(n_term)]);
    }
    return g;
}

ExpressionTree decode(const Genotype& g)
{
    if (g.symbols.empty()) {
        throw std::invalid_argument("decode: empty genotype");
    }
    ExpressionTree tree;
    int next = 1;
    for (int i = 0; i < next; ++i) {
        if (i >= g.length()) {
            throw std::invalid_argument("decode: genotype exhausted at position " + std::to_string(i));
        }
        TreeNode node{g.symbols[static_cast<std::size_t>(i)], {}};
        const int arity = arity_of(node.symbol);
        for (int k = 0; k < arity; ++k) {
            node.children.push_back(next++);
        }
        tree.nodes.push_back(std::move(node));
    }
    if (next > g.length()) {
        throw std::invalid_argument("decode: genotype exhausted at position " + std::to_string(g.length()));
    }
    tree.used_length = next;
    return tree;
}

std::vector<Violation> validate(const Genotype& g, const Alphabet& alphabet)
{
    std::vector<Violation> out;
    if (g.context != alphabet.context) {
        out.push_back({-1, "context mismatch"});
    }
    if (g.head_len != alphabet.head_len) {
        out.push_back({-1, "head length"});
    }
    if (g.tail_len() != alphabet.tail_len()) {
        out.push_back({-1, "tail length"});
    }
    for (int i = 0; i < g.length(); ++i) {
        const Symbol s = g.symbols[static_cast<std::size_t>(i)];
        const bool fn = alphabet.is_function(s);
        const bool term = alphabet.is_terminal(s);
        if (!fn && !term) {
            out.push_back({i, "unknown symbol '" + mnemonic(s) + "' at index " + std::to_string(i)});
        } else if (i >= g.head_len && fn) {
            out.push_back({i, "function in tail at index " + std::to_string(i)});
        }
    }
    return out;
}

std::vector<GeneId> expressed_genes(const Genotype& g)
{
    std::vector<GeneId> ids;
    for (const auto& node : decode(g).nodes) {
        if (node.symbol.is_gene()) {
            ids.push_back(node.symbol.id);
        }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

std::vector<GeneId> referenced_genes(const Genotype& g)
{
    std::vector<GeneId> ids;
    for (auto s : g.symbols) {
        if (s.is_gene()) {
            ids.push_back(s.id);
        }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

std::string to_text(const Genotype& g)
{
    std::string out;
    for (int i = 0; i < g.length(); ++i) {
        if (i == g.head_len) {
            out += i == 0 ? "| " : " | ";
        } else if (i > 0) {
            out += ' ';
        }
        out += mnemonic(g.symbols[static_cast<std::size_t>(i)]);
    }
    return out;
}

Genotype genotype_from_text(Context context, const std::string& text)
{
    std::istringstream in(text);
    std::vector<Symbol> head;
    std::vector<Symbol> tail;
    bool in_tail = false;
    std::string token;
    while (in >> token) {
        if (token == "|") {
            if (in_tail) {
                throw std::invalid_argument("genotype text: more than one '|'");
            }
            in_tail = true;
            continue;
        }
        auto sym = parse_symbol(token);
        if (!sym) {
            throw std::invalid_argument("genotype text: unknown symbol '" + token + "'");
        }
        (in_tail ? tail : head).push_back(*sym);
    }
    if (!in_tail) {
        throw std::invalid_argument("genotype text: missing '|' between head and tail");
    }
    return make_genotype(context, std::move(head), std::move(tail));
}

namespace {

void infix(const ExpressionTree& tree, int id, std::string& out)
{
    const auto& node = tree.at(id);
    out += mnemonic(node.symbol);
    if (node.children.empty()) {
        return;
    }
    out += '(';
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        infix(tree, node.children[i], out);
    }
    out += ')';
}

} // namespace

std::string to_infix(const ExpressionTree& tree)
{
    std::string out;
    infix(tree, tree.root, out);
    return out;
}

} // namespace cellgep
