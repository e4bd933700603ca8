#pragma once

// Small hand-written networks shared by several test files.

#include "cellgep/compiler.hpp"
#include "cellgep/fitness.hpp"

namespace cellgep::fixture {

inline GenePool gene_pool(Context c, std::initializer_list<const char*> genes)
{
    GenePool pool(c, 1);
    for (const char* g : genes) {
        pool.add(genotype_from_text(c, g), 0);
    }
    return pool;
}

/// Normal cell add(g0, g1) with g1 = add(dw3x3, h2); reduction cell g0.
inline ModelDescriptor small_network(int width = 16, DatasetProfile profile = DatasetProfile::Cifar)
{
    const auto np = gene_pool(Context::NormalGene, {"sep3x3(h) | h1 h1", "add | dw3x3(h) h2"});
    const auto rp = gene_pool(Context::ReductionGene, {"isep5x3 | pw1x1(h) pw1x1(h)"});
    return assemble_network(make_cell_template(genotype_from_text(Context::NormalCell, "add | g0 g1"), np),
                            make_cell_template(genotype_from_text(Context::ReductionCell, "g0 | g0 g0"), rp), profile,
                            width, 3, 10);
}

inline EvaluationRequest request_for(const ModelDescriptor& d, std::uint64_t id, int cumulative_epochs)
{
    EvaluationRequest r;
    r.descriptor = d;
    r.candidate_id = id;
    r.epochs_to_train = 1;
    r.cumulative_epochs = cumulative_epochs;
    r.weight_keys = weight_keys(d);
    r.seed = 42;
    return r;
}

} // namespace cellgep::fixture
