#include "cellgep/genepool.hpp"

#include <algorithm>

#include "cellgep/reproduction.hpp"
#include "cellgep/selection.hpp"

namespace cellgep {

GenePool::GenePool(Context context, int head_len)
    : context_(context), head_len_(head_len), alphabet_(alphabet_for(context, head_len))
{
    if (is_cell_context(context)) {
        throw std::invalid_argument("GenePool: needs a gene context");
    }
}

const GeneRecord& GenePool::at(GeneId id) const
{
    auto it = records_.find(id);
    if (it == records_.end()) {
        throw UnknownGene("gene " + gene_weight_key(context_, id) + " is not in the pool");
    }
    return it->second;
}

GeneRecord& GenePool::at(GeneId id)
{
    return const_cast<GeneRecord&>(std::as_const(*this).at(id));
}

std::vector<GeneId> GenePool::ids() const
{
    std::vector<GeneId> out;
    out.reserve(records_.size());
    for (const auto& [id, rec] : records_) {
        out.push_back(id);
    }
    return out;
}

GeneId GenePool::add(Genotype genotype, int birth_generation)
{
    const GeneId id = next_id_++;
    GeneRecord rec;
    rec.id = id;
    rec.genotype = std::move(genotype);
    rec.birth_generation = birth_generation;
    rec.weight_key = gene_weight_key(context_, id);
    records_.emplace(id, std::move(rec));
    return id;
}

bool GenePool::erase(GeneId id)
{
    return records_.erase(id) != 0;
}

GenePool GenePool::restore(Context context, int head_len, GeneId next_id, std::vector<GeneRecord> records)
{
    GenePool pool(context, head_len);
    pool.next_id_ = next_id;
    for (auto& rec : records) {
        if (rec.id >= next_id) {
            throw std::invalid_argument("GenePool::restore: gene id beyond next_id");
        }
        const GeneId id = rec.id;
        pool.records_.emplace(id, std::move(rec));
    }
    return pool;
}

std::string gene_weight_key(Context context, GeneId id)
{
    return (is_reduction_context(context) ? "rg" : "ng") + std::to_string(id);
}

GenePool init_pool(Context context, int pool_size, int head_len, Rng& rng, int generation)
{
    if (pool_size < 1) {
        throw std::invalid_argument("init_pool: pool size must be >= 1");
    }
    GenePool pool(context, head_len);
    for (int i = 0; i < pool_size; ++i) {
        pool.add(random_genotype(pool.alphabet(), rng), generation);
    }
    return pool;
}

void attribute_fitness(GenePool& pool, double host_fitness, std::span<const GeneId> genes_used)
{
    for (auto id : genes_used) {
        (void)pool.at(id);
    }
    for (auto id : genes_used) {
        auto& rec = pool.at(id);
        if (!rec.fitness || host_fitness > *rec.fitness) {
            rec.fitness = host_fitness;
        }
    }
}

void recompute_usage(GenePool& pool, std::span<const Genotype* const> hosts)
{
    for (const auto id : pool.ids()) {
        pool.at(id).in_use_count = 0;
    }
    for (const Genotype* host : hosts) {
        for (auto id : referenced_genes(*host)) {
            if (pool.contains(id)) {
                ++pool.at(id).in_use_count;
            }
        }
    }
}

std::vector<GeneId> cull(GenePool& pool, std::optional<double> threshold)
{
    std::vector<GeneId> removed;
    if (!threshold) {
        return removed;
    }
    for (const auto& [id, rec] : pool.records()) {
        if (rec.in_use_count == 0 && rec.fitness && *rec.fitness < *threshold) {
            removed.push_back(id);
        }
    }
    for (auto id : removed) {
        pool.erase(id);
    }
    return removed;
}

std::vector<GeneId> reproduce_genes(GenePool& pool, const GeneReproductionLimits& limits,
                                    const OperatorRates& rates, int generation, Rng& rng)
{
    std::vector<GeneId> created;
    if (pool.size() == 0) {
        return created;
    }
    std::vector<const GeneRecord*> parents;
    parents.reserve(pool.size());
    for (const auto& [id, rec] : pool.records()) {
        parents.push_back(&rec);
    }
    const auto evaluated = std::count_if(parents.begin(), parents.end(), [](const auto* r) { return r->fitness.has_value(); });
    const std::span<const GeneRecord* const> view(parents);
    const auto id_of = [](const GeneRecord* r) { return static_cast<std::uint64_t>(r->id); };
    const auto fitness_of = [](const GeneRecord* r) { return r->fitness; };
    const auto pick = [&]() -> const GeneRecord* {
        if (evaluated < 2) {
            return parents[rng.uniform_index(parents.size())];
        }
        return parents[tournament_select(view, limits.tournament_size, rng, id_of, fitness_of)];
    };

    const auto room = [&] {
        return static_cast<int>(created.size()) < limits.children_max
            && static_cast<int>(pool.size()) < limits.pool_max;
    };
    // Parents are drawn from the pool as it stood before this phase; the
    // `parents` pointers stay valid because std::map never relocates nodes.
    while (room()) {
        const GeneRecord* a = pick();
        const GeneRecord* b = pick();
        auto [x, y] = reproduce_pair(a->genotype, b->genotype, pool.alphabet(), rates, rng);
        created.push_back(pool.add(std::move(x), generation));
        if (room()) {
            created.push_back(pool.add(std::move(y), generation));
        }
    }
    return created;
}

} // namespace cellgep
