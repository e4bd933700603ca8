#include <benchmark/benchmark.h>

#include <algorithm>

#include "cellgep/evolution.hpp"
#include "cellgep/reproduction.hpp"
#include "cellgep/serialization.hpp"

using namespace cellgep;

namespace {

Alphabet cell_alphabet(int head)
{
    return alphabet_for(Context::NormalCell, head).with_genes(std::vector<GeneId>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
}

void BM_Decode(benchmark::State& state)
{
    Rng rng(1);
    auto g = random_genotype(cell_alphabet(static_cast<int>(state.range(0))), rng);
    std::fill_n(g.symbols.begin(), g.head_len, op_symbol(OpKind::Add)); // full binary tree
    for (auto _ : state) {
        benchmark::DoNotOptimize(decode(g));
    }
}
BENCHMARK(BM_Decode)->Arg(4)->Arg(16);

void BM_ReproducePair(benchmark::State& state)
{
    Rng rng(2);
    const auto alpha = cell_alphabet(4);
    const auto a = random_genotype(alpha, rng);
    const auto b = random_genotype(alpha, rng);
    const OperatorRates rates;
    for (auto _ : state) {
        benchmark::DoNotOptimize(reproduce_pair(a, b, alpha, rates, rng));
    }
}
BENCHMARK(BM_ReproducePair);

void BM_CompileCell(benchmark::State& state)
{
    Rng rng(3);
    const auto pool = init_pool(Context::NormalGene, 10, 2, rng);
    const auto cell = random_genotype(alphabet_for(Context::NormalCell, 4).with_genes(pool.ids()), rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(compile_cell(cell, pool, 16));
    }
}
BENCHMARK(BM_CompileCell);

void BM_AssembleNetwork(benchmark::State& state)
{
    Rng rng(4);
    const auto np = init_pool(Context::NormalGene, 10, 1, rng);
    const auto rp = init_pool(Context::ReductionGene, 10, 1, rng);
    const auto n = make_cell_template(random_genotype(alphabet_for(Context::NormalCell, 4).with_genes(np.ids()), rng), np);
    const auto r
        = make_cell_template(random_genotype(alphabet_for(Context::ReductionCell, 4).with_genes(rp.ids()), rng), rp);
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_network(n, r, DatasetProfile::Cifar, 16, 3, 10));
    }
}
BENCHMARK(BM_AssembleNetwork);

void BM_DescriptorJson(benchmark::State& state)
{
    Rng rng(5);
    const auto np = init_pool(Context::NormalGene, 10, 1, rng);
    const auto rp = init_pool(Context::ReductionGene, 10, 1, rng);
    const auto d = assemble_network(
        make_cell_template(random_genotype(alphabet_for(Context::NormalCell, 4).with_genes(np.ids()), rng), np),
        make_cell_template(random_genotype(alphabet_for(Context::ReductionCell, 4).with_genes(rp.ids()), rng), rp),
        DatasetProfile::Cifar, 16, 3, 10);
    for (auto _ : state) {
        benchmark::DoNotOptimize(descriptor_from_json(json::parse(to_json(d).dump())));
    }
}
BENCHMARK(BM_DescriptorJson);

/// One surrogate generation of the default configuration.
void BM_Generation(benchmark::State& state)
{
    auto cfg = default_config();
    cfg.rng_seed = 6;
    SurrogateEvaluator ev(6);
    auto s = start_search(cfg, ev);
    for (auto _ : state) {
        run_generation(s, ev);
    }
}
BENCHMARK(BM_Generation)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
