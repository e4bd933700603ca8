#include <doctest.h>

#include <map>
#include <string>

#include "cellgep/search_space.hpp"

using namespace cellgep;

TEST_CASE("conv catalog: 1 pointwise, 6 depthwise, 12 separable")
{
    std::map<OpKind, int> counts;
    for (const auto& op : conv_catalog()) {
        ++counts[op.kind];
    }
    CHECK(conv_catalog().size() == 19);
    CHECK(counts[OpKind::PointwiseConv] == 1);
    CHECK(counts[OpKind::DepthwiseConv] == 6);
    CHECK(counts[OpKind::SeparableConv] + counts[OpKind::InverseSeparableConv] == 12);
    for (const auto& op : conv_catalog()) {
        if (op.kind == OpKind::PointwiseConv) {
            CHECK(op.kernel == Kernel{1, 1});
        }
    }
}

TEST_CASE("every symbol mnemonic parses back to itself")
{
    const auto& table = symbol_table();
    CHECK(table.size() == 42);
    for (std::uint32_t i = 0; i < table.size(); ++i) {
        const auto s = parse_symbol(table[i].mnemonic);
        REQUIRE(s.has_value());
        CHECK(*s == Symbol::op(i));
    }
    CHECK(parse_symbol("g17") == Symbol::gene(17));
    CHECK_FALSE(parse_symbol("g").has_value());
    CHECK_FALSE(parse_symbol("g1x").has_value());
    CHECK_FALSE(parse_symbol("conv9x9").has_value());
}

TEST_CASE("arity: add and cat take two, conv functions one, leaves none")
{
    CHECK(arity_of(op_symbol(OpKind::Add)) == 2);
    CHECK(arity_of(op_symbol(OpKind::Concat)) == 2);
    CHECK(arity_of(op_symbol(OpKind::SeparableConv, {3, 5})) == 1);
    CHECK(arity_of(op_symbol(OpKind::SeparableConv, {3, 5}, true)) == 0);
    CHECK(arity_of(input_symbol(InputSlot::PrevPrevCell)) == 0);
    CHECK(arity_of(Symbol::gene(3)) == 0);
    CHECK(mnemonic(op_symbol(OpKind::InverseSeparableConv, {7, 1}, true)) == "isep7x1(h)");
    CHECK(mnemonic(input_symbol(InputSlot::PrevCell)) == "h1");
}

TEST_CASE("alphabets per context")
{
    const auto nc = alphabet_for(Context::NormalCell, 4);
    CHECK(nc.functions.size() == 2);
    CHECK(nc.gene_terminals);
    CHECK(nc.tail_len() == 5);
    CHECK(nc.length() == 9);

    const auto ng = alphabet_for(Context::NormalGene, 1);
    CHECK(ng.functions.size() == 20);
    CHECK(ng.terminals.size() == 21);
    CHECK(ng.is_terminal(input_symbol(InputSlot::PrevPrevCell)));
    CHECK(ng.tail_len() == 2);

    const auto rg = alphabet_for(Context::ReductionGene, 1);
    CHECK(rg.functions.size() == 20);
    CHECK(rg.terminals.size() == 19);
    CHECK_FALSE(rg.is_terminal(input_symbol(InputSlot::PrevCell)));
    CHECK_FALSE(rg.is_function(op_symbol(OpKind::Concat)));

    const std::vector<GeneId> genes{2, 5};
    const auto bound = nc.with_genes(genes);
    CHECK(bound.is_terminal(Symbol::gene(5)));
    CHECK_FALSE(bound.is_terminal(Symbol::gene(3)));
    CHECK_THROWS_AS(ng.with_genes(genes), std::logic_error);
}

TEST_CASE("context and profile names round-trip")
{
    for (auto c : {Context::NormalCell, Context::ReductionCell, Context::NormalGene, Context::ReductionGene}) {
        CHECK(context_from_string(to_string(c)) == c);
    }
    CHECK(profile_from_string("cifar") == DatasetProfile::Cifar);
    CHECK(profile_from_string(to_string(DatasetProfile::ImageNetMobile)) == DatasetProfile::ImageNetMobile);
    CHECK_THROWS_AS(profile_from_string("mnist"), std::invalid_argument);
    CHECK(gene_context_for(Context::ReductionCell) == Context::ReductionGene);
    CHECK_THROWS(gene_context_for(Context::NormalGene));
}

TEST_CASE("default config values and validation")
{
    const auto c = default_config();
    CHECK(c.population_size == 10);
    CHECK(c.gene_pool_init == 50);
    CHECK(c.gene_pool_max == 100);
    CHECK(c.gene_children_min == 2);
    CHECK(c.gene_children_max == 10);
    CHECK(c.epochs_max == 10);
    CHECK(c.reward_fraction == 0.75);
    CHECK(c.cell_head_len == 4);
    CHECK(c.cell_tail_len() == 5);
    CHECK(c.gene_head_len == 1);
    CHECK(c.gene_tail_len() == 2);
    CHECK(c.param_limit == 300000);
    CHECK(c.search_width == 16);
    CHECK(c.full_width == 64);
    CHECK(c.normal_repeats == 3);
    CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("validate_config lists every bad field")
{
    auto c = default_config();
    c.population_size = 0;
    c.reward_fraction = 1.5;
    c.gene_children_min = 20;
    try {
        validate_config(c);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("population_size") != std::string::npos);
        CHECK(msg.find("reward_fraction") != std::string::npos);
        CHECK(msg.find("gene_children_min") != std::string::npos);
    }
    c = default_config();
    c.epochs_max = 2;
    CHECK_THROWS_AS(validate_config(c), ConfigError);
}
