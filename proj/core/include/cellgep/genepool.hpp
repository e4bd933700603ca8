#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellgep/karva.hpp"
#include "cellgep/operator_rates.hpp"
#include "cellgep/rng.hpp"

namespace cellgep {

/// A reusable sub-tree (automatically defined function) shared by cells.
struct GeneRecord {
    GeneId id = 0;
    Genotype genotype;
    std::optional<double> fitness; ///< best fitness of any host, absent until evaluated
    int in_use_count = 0;
    int birth_generation = 0;
    std::string weight_key;

    friend bool operator==(const GeneRecord&, const GeneRecord&) = default;
};

struct UnknownGene : std::out_of_range {
    using std::out_of_range::out_of_range;
};

class GenePool {
public:
    GenePool() = default;
    GenePool(Context context, int head_len);

    Context context() const { return context_; }
    int head_len() const { return head_len_; }
    const Alphabet& alphabet() const { return alphabet_; }

    std::size_t size() const { return records_.size(); }
    bool contains(GeneId id) const { return records_.count(id) != 0; }
    const GeneRecord& at(GeneId id) const;
    GeneRecord& at(GeneId id);
    const std::map<GeneId, GeneRecord>& records() const { return records_; }
    std::vector<GeneId> ids() const;

    /// Inserts a new gene with a fresh id.
    GeneId add(Genotype genotype, int birth_generation);

    /// Removes a gene; returns false if absent.
    bool erase(GeneId id);

    GeneId next_id() const { return next_id_; }

    /// Rebuilds a pool from serialized parts.
    static GenePool restore(Context context, int head_len, GeneId next_id, std::vector<GeneRecord> records);

    friend bool operator==(const GenePool& a, const GenePool& b)
    {
        return a.context_ == b.context_ && a.head_len_ == b.head_len_ && a.next_id_ == b.next_id_
            && a.records_ == b.records_;
    }

private:
    Context context_ = Context::NormalGene;
    int head_len_ = 1;
    Alphabet alphabet_{};
    GeneId next_id_ = 0;
    std::map<GeneId, GeneRecord> records_;
};

std::string gene_weight_key(Context context, GeneId id);

GenePool init_pool(Context context, int pool_size, int head_len, Rng& rng, int generation = 0);

/// Raises every listed gene's fitness to at least `host_fitness`.
/// Throws UnknownGene if any id is missing; the pool is left untouched then.
void attribute_fitness(GenePool& pool, double host_fitness, std::span<const GeneId> genes_used);

/// Sets in_use_count from the cell genotypes currently alive. A host counts
/// once per gene it references anywhere in its sequence.
void recompute_usage(GenePool& pool, std::span<const Genotype* const> hosts);

/// Removes unused, evaluated genes whose fitness is below `threshold`.
/// An absent threshold removes nothing.
std::vector<GeneId> cull(GenePool& pool, std::optional<double> threshold);

struct GeneReproductionLimits {
    int children_min = 2;
    int children_max = 10;
    int pool_max = 100;
    int tournament_size = 3;
};

/// Breeds new genes until children_max is reached or the pool is full; the
/// pool cap wins over children_min.
std::vector<GeneId> reproduce_genes(GenePool& pool, const GeneReproductionLimits& limits,
                                    const OperatorRates& rates, int generation, Rng& rng);

} // namespace cellgep
