#include <doctest.h>

#include <set>

#include "cellgep/karva.hpp"
#include "oracles.hpp"

using namespace cellgep;

namespace {

std::vector<GeneId> iota_ids(GeneId n)
{
    std::vector<GeneId> v;
    for (GeneId i = 0; i < n; ++i) {
        v.push_back(i);
    }
    return v;
}

Alphabet concrete(Context c, int head)
{
    auto a = alphabet_for(c, head);
    if (is_cell_context(c)) {
        const auto ids = iota_ids(12);
        a = a.with_genes(ids);
    }
    return a;
}

} // namespace

TEST_CASE("breadth-first decoding of a cell genotype")
{
    const auto g = genotype_from_text(Context::NormalCell, "add cat g1 add | g2 g3 g4 g5 g1");
    const auto t = decode(g);
    CHECK(to_infix(t) == "add(cat(add(g3,g4),g2),g1)");
    CHECK(t.used_length == 7);
    CHECK(t.at(0).children == std::vector<int>{1, 2});
    CHECK(t.at(1).children == std::vector<int>{3, 4});
    CHECK(t.at(3).children == std::vector<int>{5, 6});
}

TEST_CASE("a terminal at the root expresses a single symbol")
{
    const auto g = genotype_from_text(Context::NormalCell, "g4 add add add | g1 g2 g3 g4 g5");
    const auto t = decode(g);
    CHECK(to_infix(t) == "g4");
    CHECK(t.used_length == 1);
    CHECK(expressed_genes(g) == std::vector<GeneId>{4});
    CHECK(referenced_genes(g) == std::vector<GeneId>{1, 2, 3, 4, 5});
}

TEST_CASE("gene genotypes decode unary convolutions")
{
    const auto g = genotype_from_text(Context::NormalGene, "sep3x3 | dw5x5(h) h2");
    CHECK(to_infix(decode(g)) == "sep3x3(dw5x5(h))");
    const auto h = genotype_from_text(Context::NormalGene, "add | pw1x1(h) h2");
    CHECK(to_infix(decode(h)) == "add(pw1x1(h),h2)");
}

TEST_CASE("breadth-first decode equals the level-by-level oracle")
{
    Rng rng(2024);
    for (auto c : {Context::NormalCell, Context::ReductionCell, Context::NormalGene, Context::ReductionGene}) {
        for (int head : {1, 2, 4, 6}) {
            const auto a = concrete(c, head);
            for (int i = 0; i < 250; ++i) {
                const auto g = random_genotype(a, rng);
                REQUIRE(oracle::karva_infix(g) == to_infix(decode(g)));
            }
        }
    }
}

TEST_CASE("random genotypes are valid by construction")
{
    Rng rng(5);
    const std::set<GeneId> genes{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    for (auto c : {Context::NormalCell, Context::ReductionCell, Context::NormalGene, Context::ReductionGene}) {
        const int head = is_cell_context(c) ? 4 : 1;
        const auto a = concrete(c, head);
        for (int i = 0; i < 500; ++i) {
            const auto g = random_genotype(a, rng);
            REQUIRE(g.length() == 2 * head + 1);
            REQUIRE(oracle::genotype_ok(g, c, head, genes));
            REQUIRE(is_valid(g, a));
        }
    }
}

TEST_CASE("validate names the offending position")
{
    const auto a = alphabet_for(Context::NormalCell, 4);
    auto g = genotype_from_text(Context::NormalCell, "add cat g1 add | g2 g3 g4 g5 g1");
    CHECK(is_valid(g, a));

    auto bad = g;
    bad.symbols[6] = op_symbol(OpKind::Add);
    const auto v = validate(bad, a);
    REQUIRE(v.size() == 1);
    CHECK(v[0].index == 6);
    CHECK(v[0].message == "function in tail at index 6");

    auto wrong = g;
    wrong.symbols[0] = op_symbol(OpKind::PointwiseConv);
    CHECK(validate(wrong, a).front().index == 0);

    auto shorter = g;
    shorter.symbols.pop_back();
    CHECK_FALSE(is_valid(shorter, a));

    auto other = g;
    other.context = Context::ReductionCell;
    CHECK_FALSE(is_valid(other, a));

    const std::vector<GeneId> only{1, 2};
    CHECK_FALSE(is_valid(g, a.with_genes(only)));
}

TEST_CASE("text form round-trips and rejects malformed input")
{
    Rng rng(9);
    const auto a = alphabet_for(Context::NormalGene, 3);
    for (int i = 0; i < 100; ++i) {
        const auto g = random_genotype(a, rng);
        CHECK(genotype_from_text(Context::NormalGene, to_text(g)) == g);
    }
    CHECK(to_text(genotype_from_text(Context::NormalCell, "add cat g1 add | g2 g3 g4 g5 g1"))
          == "add cat g1 add | g2 g3 g4 g5 g1");
    CHECK_THROWS_AS(genotype_from_text(Context::NormalCell, "add g1 g2"), std::invalid_argument);
    CHECK_THROWS_AS(genotype_from_text(Context::NormalCell, "add | g1 frob"), std::invalid_argument);
}

TEST_CASE("decode throws when an invalid genotype runs out of symbols")
{
    Genotype g;
    g.context = Context::NormalCell;
    g.head_len = 1;
    g.symbols = {op_symbol(OpKind::Add), Symbol::gene(1)};
    CHECK_THROWS_AS(decode(g), std::invalid_argument);
}
