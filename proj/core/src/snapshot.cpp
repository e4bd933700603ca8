#include "cellgep/snapshot.hpp"

#include "json_fields.hpp"

namespace cellgep {

using detail::field;
using detail::optional_field;

namespace {

json opt_json(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

Genotype genotype_field(const json& j, const char* key, Context context)
{
    try {
        return genotype_from_text(context, field<std::string>(j, key));
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("field '") + key + "': " + e.what());
    }
}

std::vector<GeneRecord> gene_list(const json& j, const char* key, Context context)
{
    std::vector<GeneRecord> out;
    for (const auto& r : field<json>(j, key)) {
        out.push_back(gene_record_from_json(r, context));
    }
    return out;
}

json gene_list_json(const std::vector<GeneRecord>& genes)
{
    json out = json::array();
    for (const auto& g : genes) {
        out.push_back(to_json(g));
    }
    return out;
}

} // namespace

json to_json(const Individual& ind)
{
    return {{"id", ind.id},
            {"normal", to_text(ind.normal)},
            {"reduction_cell", ind.reduction_cell},
            {"fitness", opt_json(ind.fitness)},
            {"epochs_trained", ind.epochs_trained},
            {"birth_generation", ind.birth_generation},
            {"marked_dead", ind.marked_dead}};
}

Individual individual_from_json(const json& j)
{
    Individual ind;
    ind.id = field<std::uint64_t>(j, "id");
    ind.normal = genotype_field(j, "normal", Context::NormalCell);
    ind.reduction_cell = field<std::uint64_t>(j, "reduction_cell");
    ind.fitness = optional_field<double>(j, "fitness");
    ind.epochs_trained = field<int>(j, "epochs_trained");
    ind.birth_generation = field<int>(j, "birth_generation");
    ind.marked_dead = field<bool>(j, "marked_dead");
    return ind;
}

json to_json(const ReductionCell& cell)
{
    return {{"id", cell.id},
            {"genotype", to_text(cell.genotype)},
            {"fitness", opt_json(cell.fitness)},
            {"in_use_count", cell.in_use_count},
            {"birth_generation", cell.birth_generation},
            {"marked_dead", cell.marked_dead}};
}

ReductionCell reduction_cell_from_json(const json& j)
{
    ReductionCell c;
    c.id = field<std::uint64_t>(j, "id");
    c.genotype = genotype_field(j, "genotype", Context::ReductionCell);
    c.fitness = optional_field<double>(j, "fitness");
    c.in_use_count = field<int>(j, "in_use_count");
    c.birth_generation = field<int>(j, "birth_generation");
    c.marked_dead = field<bool>(j, "marked_dead");
    return c;
}

json to_json(const Champion& c)
{
    return {{"individual", to_json(c.individual)},
            {"reduction_cell", to_json(c.reduction_cell)},
            {"normal_genes", gene_list_json(c.normal_genes)},
            {"reduction_genes", gene_list_json(c.reduction_genes)},
            {"generation", c.generation}};
}

Champion champion_from_json(const json& j)
{
    Champion c;
    c.individual = individual_from_json(field<json>(j, "individual"));
    c.reduction_cell = reduction_cell_from_json(field<json>(j, "reduction_cell"));
    c.normal_genes = gene_list(j, "normal_genes", Context::NormalGene);
    c.reduction_genes = gene_list(j, "reduction_genes", Context::ReductionGene);
    c.generation = field<int>(j, "generation");
    return c;
}

json to_json(const WeightStore& store)
{
    json entries = json::array();
    for (const auto& [key, e] : store.entries()) {
        entries.push_back(
            {{"key", e.key}, {"best_fitness", e.best_fitness}, {"blob_path", e.blob_path}, {"updated_at", e.updated_at}});
    }
    return {{"directory", store.directory()}, {"entries", entries}};
}

WeightStore weight_store_from_json(const json& j)
{
    WeightStore store(field<std::string>(j, "directory"));
    std::vector<WeightStoreEntry> entries;
    for (const auto& e : field<json>(j, "entries")) {
        entries.push_back({field<std::string>(e, "key"), field<double>(e, "best_fitness"),
                           field<std::string>(e, "blob_path"), field<int>(e, "updated_at")});
    }
    store.restore(std::move(entries));
    return store;
}

json snapshot_to_json(const SearchState& s)
{
    json individuals = json::array();
    for (const auto& ind : s.individuals) {
        individuals.push_back(to_json(ind));
    }
    json cells = json::array();
    for (const auto& c : s.reduction_cells) {
        cells.push_back(to_json(c));
    }
    json state{{"generation", s.generation},
               {"individuals", individuals},
               {"reduction_cells", cells},
               {"normal_genes", to_json(s.normal_genes)},
               {"reduction_genes", to_json(s.reduction_genes)},
               {"gene_threshold", opt_json(s.gene_threshold)},
               {"child_threshold", opt_json(s.child_threshold)},
               {"rng_algorithm", Rng::kAlgorithm},
               {"rng_state", s.rng.state()},
               {"next_individual_id", s.next_individual_id},
               {"next_reduction_id", s.next_reduction_id},
               {"champion", s.champion ? to_json(*s.champion) : json(nullptr)},
               {"elapsed_seconds", s.elapsed_seconds},
               {"evaluations", s.evaluations},
               {"failed_evaluations", s.failed_evaluations}};
    return {{"schema", kSnapshotSchema},
            {"schema_version", kSnapshotSchemaVersion},
            {"config", to_json(s.config)},
            {"state", state},
            {"weight_store", to_json(s.weights)},
            {"event_log_offset", s.event_count}};
}

SearchState snapshot_from_json(const json& j)
{
    if (!j.is_object() || j.value("schema", std::string()) != kSnapshotSchema) {
        throw SchemaVersionError("not a search snapshot");
    }
    const int version = field<int>(j, "schema_version");
    if (version != kSnapshotSchemaVersion) {
        throw SchemaVersionError("unsupported snapshot schema_version " + std::to_string(version) + " (expected "
                                 + std::to_string(kSnapshotSchemaVersion) + ")");
    }
    SearchState s;
    try {
        s.config = config_from_json(field<json>(j, "config"));
    } catch (const ConfigError& e) {
        throw ParseError(std::string("snapshot config: ") + e.what());
    }
    const auto& st = field<json>(j, "state");
    if (field<std::string>(st, "rng_algorithm") != Rng::kAlgorithm) {
        throw SchemaVersionError("snapshot was written with random generator '"
                                 + field<std::string>(st, "rng_algorithm") + "'");
    }
    s.generation = field<int>(st, "generation");
    for (const auto& ind : field<json>(st, "individuals")) {
        s.individuals.push_back(individual_from_json(ind));
    }
    for (const auto& c : field<json>(st, "reduction_cells")) {
        s.reduction_cells.push_back(reduction_cell_from_json(c));
    }
    s.normal_genes = gene_pool_from_json(field<json>(st, "normal_genes"));
    s.reduction_genes = gene_pool_from_json(field<json>(st, "reduction_genes"));
    s.gene_threshold = optional_field<double>(st, "gene_threshold");
    s.child_threshold = optional_field<double>(st, "child_threshold");
    try {
        s.rng.restore(field<std::string>(st, "rng_state"));
    } catch (const std::exception& e) {
        throw ParseError(std::string("rng_state: ") + e.what());
    }
    s.next_individual_id = field<std::uint64_t>(st, "next_individual_id");
    s.next_reduction_id = field<std::uint64_t>(st, "next_reduction_id");
    if (const auto& c = field<json>(st, "champion"); !c.is_null()) {
        s.champion = champion_from_json(c);
    }
    s.elapsed_seconds = field<double>(st, "elapsed_seconds");
    s.evaluations = field<std::uint64_t>(st, "evaluations");
    s.failed_evaluations = field<std::uint64_t>(st, "failed_evaluations");
    s.weights = weight_store_from_json(field<json>(j, "weight_store"));
    s.event_count = field<std::uint64_t>(j, "event_log_offset");

    std::vector<std::string> errors;
    try {
        errors = check_state(s);
    } catch (const std::exception& e) {
        errors.push_back(e.what());
    }
    if (!errors.empty()) {
        std::string msg = "snapshot state is inconsistent:";
        for (const auto& e : errors) {
            msg += "\n  " + e;
        }
        throw InvariantError(msg);
    }
    return s;
}

void write_snapshot(const SearchState& state, const std::filesystem::path& path)
{
    write_json_file(path, snapshot_to_json(state));
}

SearchState read_snapshot(const std::filesystem::path& path)
{
    return snapshot_from_json(read_json_file(path));
}

} // namespace cellgep
