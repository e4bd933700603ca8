#include <doctest.h>

#include <algorithm>

#include "cellgep/compiler.hpp"
#include "oracles.hpp"

using namespace cellgep;

namespace {

GenePool leaf_pool(Context c, std::initializer_list<const char*> genes)
{
    GenePool pool(c, 1);
    for (const char* g : genes) {
        pool.add(genotype_from_text(c, g), 0);
    }
    return pool;
}

int count_kind(const CellGraph& g, OpKind k)
{
    return static_cast<int>(std::count_if(g.nodes.begin(), g.nodes.end(), [&](const CellNode& n) { return n.op.kind == k; }));
}

std::vector<const CellNode*> projections(const CellGraph& g)
{
    std::vector<const CellNode*> out;
    for (const auto& n : g.nodes) {
        if (n.projection) {
            out.push_back(&n);
        }
    }
    return out;
}

} // namespace

TEST_CASE("block parameter counts")
{
    const OpSpec pw{OpKind::PointwiseConv, {1, 1}};
    const OpSpec dw{OpKind::DepthwiseConv, {3, 3}};
    const OpSpec sep{OpKind::SeparableConv, {3, 3}};
    const OpSpec isep{OpKind::InverseSeparableConv, {3, 3}};
    CHECK(block_params(pw, 16, 16) == 288);
    CHECK(block_params(dw, 16, 16) == 176);
    CHECK(block_params(sep, 16, 16) == 464);
    CHECK(block_params(isep, 16, 16) == 464);
    for (const auto& op : conv_catalog()) {
        for (auto [cin, cout] : {std::pair{16, 16}, {32, 16}, {16, 64}, {48, 16}}) {
            if (op.kind == OpKind::DepthwiseConv) {
                cout = cin;
            }
            REQUIRE(block_params(op, cin, cout) == oracle::block_tensor_params(op, cin, cout));
        }
    }
    CHECK(block_params(kStemConv, 3, 16) == oracle::block_tensor_params(kStemConv, 3, 16));
}

TEST_CASE("single-gene cells compile to one block")
{
    const auto pool = leaf_pool(Context::NormalGene, {"pw1x1(h) | h1 h1", "dw3x3(h) | h1 h1", "sep3x3(h) | h1 h1"});
    const std::pair<const char*, std::int64_t> cases[] = {{"g0 | g0 g0", 288}, {"g1 | g1 g1", 176}, {"g2 | g2 g2", 464}};
    for (const auto& [text, params] : cases) {
        const auto g = compile_cell(genotype_from_text(Context::NormalCell, text), pool, 16);
        CHECK(g.nodes.size() == 2);
        CHECK(g.at(0).is_input());
        CHECK(g.output == 1);
        CHECK(g.output_channels() == 16);
        CHECK(count_params(g) == params);
    }
}

TEST_CASE("add of a wide concat projects the narrower input")
{
    const auto pool = leaf_pool(Context::NormalGene, {"pw1x1(h) | h1 h1", "pw1x1(h) | h1 h1", "dw3x3(h) | h1 h1"});
    const auto g = compile_cell(genotype_from_text(Context::NormalCell, "add cat | g2 g0 g1"), pool, 16);
    CHECK(count_kind(g, OpKind::Add) == 1);
    CHECK(count_kind(g, OpKind::Concat) == 1);
    const auto proj = projections(g);
    REQUIRE(proj.size() == 2);
    CHECK(proj[0]->in_channels == 16);
    CHECK(proj[0]->out_channels == 32);
    CHECK(g.at(proj[0]->inputs.at(0)).op.kind == OpKind::DepthwiseConv);
    // root 32 -> 16
    CHECK(proj[1]->in_channels == 32);
    CHECK(proj[1]->out_channels == 16);
    CHECK(g.output == proj[1]->id);
    CHECK(oracle::graph_soundness(g).empty());
}

TEST_CASE("root wider than the cell width gets an output projection")
{
    const auto pool = leaf_pool(Context::NormalGene, {"pw1x1(h) | h1 h1", "dw3x3(h) | h1 h1", "dw5x5(h) | h1 h1"});
    const auto g = compile_cell(genotype_from_text(Context::NormalCell, "cat cat | g0 g1 g2"), pool, 16);
    const auto proj = projections(g);
    REQUIRE(proj.size() == 1);
    CHECK(proj[0]->in_channels == 48);
    CHECK(proj[0]->out_channels == 16);
    CHECK(g.output_channels() == 16);
}

TEST_CASE("equal-width adds need no projection")
{
    const auto pool = leaf_pool(Context::NormalGene, {"pw1x1(h) | h1 h1", "dw3x3(h) | h1 h1"});
    const auto g = compile_cell(genotype_from_text(Context::NormalCell, "add | g0 g1"), pool, 16);
    CHECK(projections(g).empty());
    CHECK(count_params(g) == 288 + 176);
}

TEST_CASE("a gene referenced twice is one subgraph")
{
    const auto pool = leaf_pool(Context::NormalGene, {"sep3x3(h) | h1 h1"});
    const auto g = compile_cell(genotype_from_text(Context::NormalCell, "add | g0 g0"), pool, 16);
    CHECK(count_kind(g, OpKind::SeparableConv) == 1);
    CHECK(count_params(g) == 464);
}

TEST_CASE("reduction cells halve every input path and double the width")
{
    const auto pool = leaf_pool(Context::ReductionGene, {"dw3x3(h) | pw1x1(h) pw1x1(h)", "sep5x5 | pw1x1(h) pw1x1(h)"});
    const auto g = compile_cell(genotype_from_text(Context::ReductionCell, "add | g0 g1"), pool, 16);
    CHECK(g.kind == CellKind::Reduction);
    CHECK(g.output_channels() == 32);
    CHECK(oracle::graph_soundness(g).empty());
    for (const auto& n : g.nodes) {
        for (int in : n.inputs) {
            if (g.at(in).is_input()) {
                CHECK(n.stride == 2);
            }
        }
    }
}

TEST_CASE("dangling gene references do not compile")
{
    const auto pool = leaf_pool(Context::NormalGene, {"pw1x1(h) | h1 h1"});
    CHECK_THROWS_AS(compile_cell(genotype_from_text(Context::NormalCell, "add | g0 g7"), pool, 16), CompileError);
}

TEST_CASE("random cells agree with the bottom-up oracle")
{
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const bool reduction = trial % 2 == 1;
        const auto cell_ctx = reduction ? Context::ReductionCell : Context::NormalCell;
        const int gene_head = 1 + trial % 3;
        const auto pool = init_pool(gene_context_for(cell_ctx), 6, gene_head, rng);
        const auto ids = pool.ids();
        const auto cell = random_genotype(alphabet_for(cell_ctx, 4).with_genes(ids), rng);
        const int width = trial % 5 == 0 ? 24 : 16;
        const auto g = compile_cell(cell, pool, width);
        const auto est = oracle::estimate_cell(cell, pool, width);
        INFO(to_text(cell));
        REQUIRE(oracle::graph_soundness(g).empty());
        REQUIRE(check_cell_graph(g).empty());
        REQUIRE(count_params(g) == est.params);
        REQUIRE(g.uses_input(InputSlot::PrevPrevCell) == est.uses_prev_prev);
        REQUIRE(compile_cell(cell, pool, width) == g);
        REQUIRE(insert_projections(g) == g);
    }
}

TEST_CASE("network assembly widths and cell counts")
{
    const auto normal_pool = leaf_pool(Context::NormalGene, {"pw1x1(h) | h1 h1", "add | dw3x3(h) h2"});
    const auto reduction_pool = leaf_pool(Context::ReductionGene, {"sep3x3(h) | pw1x1(h) pw1x1(h)"});
    const auto normal = make_cell_template(genotype_from_text(Context::NormalCell, "add | g0 g1"), normal_pool);
    const auto reduction = make_cell_template(genotype_from_text(Context::ReductionCell, "g0 | g0 g0"), reduction_pool);

    const auto d = assemble_network(normal, reduction, DatasetProfile::Cifar, 16, 3, 10);
    int normals = 0;
    int reductions = 0;
    for (const auto& c : d.cells) {
        (c.kind == CellKind::Normal ? normals : reductions)++;
    }
    CHECK(normals == 9);
    CHECK(reductions == 2);
    CHECK(d.stages.size() == 3);
    CHECK(d.stages.back().normal_cell.base_width == 64);
    CHECK(d.head.in_features == 64);
    CHECK(d.stem.size() == 1);
    CHECK_FALSE(d.stem[0].has_relu);
    CHECK(check_descriptor(d).empty());
    CHECK(d.total_params == count_params(d));
    CHECK(d.total_params
          == oracle::network_params(genotype_from_text(Context::NormalCell, "add | g0 g1"), normal_pool,
                                    genotype_from_text(Context::ReductionCell, "g0 | g0 g0"), reduction_pool,
                                    DatasetProfile::Cifar, 16, 3, 10));

    const auto full = assemble_network(normal, reduction, DatasetProfile::Cifar, 64, 3, 10);
    CHECK(full.head.in_features == 256);

    const auto imagenet = assemble_network(normal, reduction, DatasetProfile::ImageNetMobile, 64, 3, 1000);
    REQUIRE(imagenet.stem.size() == 3);
    CHECK(imagenet.stem[0].out_channels == 32);
    CHECK(imagenet.stem[1].out_channels == 64);
    CHECK_FALSE(imagenet.stem[0].has_relu);
    for (const auto& b : imagenet.stem) {
        CHECK(b.stride == 2);
    }
    CHECK(imagenet.stem_scale() == 3);
}

TEST_CASE("cell inputs are wired to the previous two cells")
{
    const auto normal_pool = leaf_pool(Context::NormalGene, {"add | dw3x3(h) h2"});
    const auto reduction_pool = leaf_pool(Context::ReductionGene, {"dw3x3(h) | pw1x1(h) pw1x1(h)"});
    const auto normal = make_cell_template(genotype_from_text(Context::NormalCell, "g0 | g0 g0"), normal_pool);
    const auto reduction = make_cell_template(genotype_from_text(Context::ReductionCell, "g0 | g0 g0"), reduction_pool);
    const auto d = assemble_network(normal, reduction, DatasetProfile::Cifar, 16, 2, 10);

    REQUIRE(d.cells.size() == 8);
    CHECK(d.cells[0].prev == kStemSource);
    CHECK(d.cells[0].prev_prev == kStemSource);
    int projected = 0;
    for (std::size_t i = 1; i < d.cells.size(); ++i) {
        const auto& c = d.cells[i];
        CHECK(c.prev == d.cells[i - 1].id);
        CHECK(c.prev_prev == (i == 1 ? kStemSource : d.cells[i - 2].id));
        CHECK(c.input_scale == d.cells[i - 1].output_scale);
        const int pp_scale = i == 1 ? 0 : d.cells[i - 2].output_scale;
        const bool after_reduction = d.cells[i - 1].kind == CellKind::Reduction;
        if (c.kind == CellKind::Normal && after_reduction) {
            REQUIRE(c.prev_prev_projection.has_value());
            CHECK(c.prev_prev_projection->stride == 2);
            CHECK(c.prev_prev_projection->op.kind == OpKind::PointwiseConv);
            CHECK(pp_scale + 1 == c.input_scale);
            ++projected;
        } else if (c.kind == CellKind::Normal) {
            CHECK_FALSE(c.prev_prev_projection.has_value());
            CHECK(pp_scale == c.input_scale);
        }
    }
    CHECK(projected == 2);
    CHECK(d.cells.back().output_scale == 2);
    CHECK(wire_cell_inputs(d) == d);
}

TEST_CASE("weight keys are sorted, unique and shared by reused genes")
{
    const auto pool = leaf_pool(Context::NormalGene, {"sep3x3(h) | h1 h1"});
    const auto rpool = leaf_pool(Context::ReductionGene, {"dw3x3(h) | pw1x1(h) pw1x1(h)"});
    const auto d = assemble_network(make_cell_template(genotype_from_text(Context::NormalCell, "add | g0 g0"), pool),
                                    make_cell_template(genotype_from_text(Context::ReductionCell, "g0 | g0 g0"), rpool),
                                    DatasetProfile::Cifar, 16, 3, 10);
    const auto keys = weight_keys(d);
    CHECK(std::is_sorted(keys.begin(), keys.end()));
    CHECK(std::adjacent_find(keys.begin(), keys.end()) == keys.end());
    CHECK(std::any_of(keys.begin(), keys.end(), [](const std::string& k) { return k.rfind("ng0.", 0) == 0; }));
}
