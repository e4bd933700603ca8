#include "cellgep/serialization.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json_fields.hpp"

namespace cellgep {

using detail::field;
using detail::optional_field;
using detail::parse_enum;

namespace {

json op_to_json(const OpSpec& op)
{
    json j;
    j["kind"] = to_string(op.kind);
    j["kernel"] = {op.kernel.kh, op.kernel.kw};
    if (op.kind == OpKind::InputRef) {
        j["slot"] = op.slot == InputSlot::PrevCell ? "prev" : "prev_prev";
    }
    return j;
}

OpSpec op_from_json(const json& j)
{
    OpSpec op;
    op.kind = parse_enum(op_kind_from_string, field<std::string>(j, "kind"));
    const auto kernel = field<std::vector<int>>(j, "kernel");
    if (kernel.size() != 2) {
        throw ParseError("kernel must hold two integers");
    }
    op.kernel = {kernel[0], kernel[1]};
    if (op.kind == OpKind::InputRef) {
        const auto slot = field<std::string>(j, "slot");
        if (slot == "prev") {
            op.slot = InputSlot::PrevCell;
        } else if (slot == "prev_prev") {
            op.slot = InputSlot::PrevPrevCell;
        } else {
            throw ParseError("unknown input slot '" + slot + "'");
        }
    }
    return op;
}

} // namespace

// ---------------------------------------------------------------------------

json to_json(const Genotype& g)
{
    return {{"context", to_string(g.context)}, {"symbols", to_text(g)}};
}

Genotype genotype_from_json(const json& j)
{
    const auto context = parse_enum(context_from_string, field<std::string>(j, "context"));
    try {
        return genotype_from_text(context, field<std::string>(j, "symbols"));
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
}

json to_json(const CellGraph& g)
{
    json nodes = json::array();
    for (const auto& n : g.nodes) {
        json jn;
        jn["id"] = n.id;
        jn["op"] = op_to_json(n.op);
        jn["mnemonic"] = op_mnemonic(n.op);
        jn["projection"] = n.projection;
        jn["in_channels"] = n.in_channels;
        jn["out_channels"] = n.out_channels;
        jn["stride"] = n.stride;
        jn["inputs"] = n.inputs;
        jn["gene"] = n.gene ? json(*n.gene) : json(nullptr);
        jn["weight_key"] = n.weight_key;
        jn["block_key"] = n.block_key;
        jn["has_relu"] = n.is_conv();
        jn["params"] = block_params(n.op, n.in_channels, n.out_channels);
        nodes.push_back(std::move(jn));
    }
    return {{"kind", to_string(g.kind)}, {"base_width", g.base_width}, {"output", g.output}, {"nodes", nodes}};
}

CellGraph cell_graph_from_json(const json& j)
{
    CellGraph g;
    g.kind = parse_enum(cell_kind_from_string, field<std::string>(j, "kind"));
    g.base_width = field<int>(j, "base_width");
    g.output = field<int>(j, "output");
    for (const auto& jn : field<json>(j, "nodes")) {
        CellNode n;
        n.id = field<int>(jn, "id");
        n.op = op_from_json(field<json>(jn, "op"));
        n.projection = field<bool>(jn, "projection");
        n.in_channels = field<int>(jn, "in_channels");
        n.out_channels = field<int>(jn, "out_channels");
        n.stride = field<int>(jn, "stride");
        n.inputs = field<std::vector<int>>(jn, "inputs");
        n.gene = optional_field<GeneId>(jn, "gene");
        n.weight_key = field<std::string>(jn, "weight_key");
        n.block_key = field<std::string>(jn, "block_key");
        g.nodes.push_back(std::move(n));
    }
    return g;
}

json to_json(const ConvBlockSpec& b)
{
    return {{"op", op_to_json(b.op)},       {"mnemonic", op_mnemonic(b.op)}, {"in_channels", b.in_channels},
            {"out_channels", b.out_channels}, {"stride", b.stride},            {"has_relu", b.has_relu},
            {"params", b.param_count},      {"weight_key", b.weight_key}};
}

ConvBlockSpec conv_block_from_json(const json& j)
{
    return make_block(op_from_json(field<json>(j, "op")), field<int>(j, "in_channels"), field<int>(j, "out_channels"),
                      field<int>(j, "stride"), field<bool>(j, "has_relu"), field<std::string>(j, "weight_key"));
}

json to_json(const ModelDescriptor& d)
{
    json j;
    j["schema"] = kDescriptorSchema;
    j["schema_version"] = kDescriptorSchemaVersion;
    j["dataset_profile"] = to_string(d.dataset_profile);
    j["width"] = d.width;
    j["input_channels"] = d.input_channels;
    j["stem"] = json::array();
    for (const auto& b : d.stem) {
        j["stem"].push_back(to_json(b));
    }
    j["stages"] = json::array();
    for (const auto& s : d.stages) {
        j["stages"].push_back({{"normal_cell", to_json(s.normal_cell)},
                               {"repeats", s.repeats},
                               {"reduction_cell", s.reduction_cell ? to_json(*s.reduction_cell) : json(nullptr)}});
    }
    j["cells"] = json::array();
    for (const auto& c : d.cells) {
        j["cells"].push_back({{"id", c.id},
                              {"stage", c.stage},
                              {"kind", to_string(c.kind)},
                              {"prev", c.prev},
                              {"prev_prev", c.prev_prev},
                              {"prev_prev_projection",
                               c.prev_prev_projection ? to_json(*c.prev_prev_projection) : json(nullptr)},
                              {"in_channels", c.in_channels},
                              {"out_channels", c.out_channels},
                              {"input_scale", c.input_scale},
                              {"output_scale", c.output_scale}});
    }
    j["head"] = {{"final_bn_relu", d.head.final_bn_relu},
                 {"global_pool", d.head.global_pool},
                 {"in_features", d.head.in_features},
                 {"classes", d.head.classes},
                 {"params", d.head.param_count}};
    j["total_params"] = d.total_params;
    return j;
}

ModelDescriptor descriptor_from_json(const json& j)
{
    if (!j.is_object()) {
        throw ParseError("descriptor must be a JSON object");
    }
    if (j.value("schema", std::string()) != kDescriptorSchema) {
        throw SchemaVersionError("not a model descriptor (schema '" + j.value("schema", std::string()) + "')");
    }
    const int version = field<int>(j, "schema_version");
    if (version != kDescriptorSchemaVersion) {
        throw SchemaVersionError("unsupported descriptor schema_version " + std::to_string(version) + " (expected "
                                 + std::to_string(kDescriptorSchemaVersion) + ")");
    }
    ModelDescriptor d;
    d.dataset_profile = parse_enum(profile_from_string, field<std::string>(j, "dataset_profile"));
    d.width = field<int>(j, "width");
    d.input_channels = field<int>(j, "input_channels");
    for (const auto& b : field<json>(j, "stem")) {
        d.stem.push_back(conv_block_from_json(b));
    }
    for (const auto& s : field<json>(j, "stages")) {
        Stage stage;
        stage.normal_cell = cell_graph_from_json(field<json>(s, "normal_cell"));
        stage.repeats = field<int>(s, "repeats");
        if (auto r = optional_field<json>(s, "reduction_cell")) {
            stage.reduction_cell = cell_graph_from_json(*r);
        }
        d.stages.push_back(std::move(stage));
    }
    for (const auto& c : field<json>(j, "cells")) {
        CellInstance inst;
        inst.id = field<int>(c, "id");
        inst.stage = field<int>(c, "stage");
        inst.kind = parse_enum(cell_kind_from_string, field<std::string>(c, "kind"));
        inst.prev = field<int>(c, "prev");
        inst.prev_prev = field<int>(c, "prev_prev");
        if (auto p = optional_field<json>(c, "prev_prev_projection")) {
            inst.prev_prev_projection = conv_block_from_json(*p);
        }
        inst.in_channels = field<int>(c, "in_channels");
        inst.out_channels = field<int>(c, "out_channels");
        inst.input_scale = field<int>(c, "input_scale");
        inst.output_scale = field<int>(c, "output_scale");
        d.cells.push_back(std::move(inst));
    }
    const auto& h = field<json>(j, "head");
    d.head.final_bn_relu = field<bool>(h, "final_bn_relu");
    d.head.global_pool = field<std::string>(h, "global_pool");
    d.head.in_features = field<int>(h, "in_features");
    d.head.classes = field<int>(h, "classes");
    d.head.param_count = field<std::int64_t>(h, "params");
    d.total_params = field<std::int64_t>(j, "total_params");

    if (auto errs = check_descriptor(d); !errs.empty()) {
        std::string msg = "descriptor violates invariants:";
        for (const auto& e : errs) {
            msg += "\n  " + e;
        }
        throw InvariantError(msg);
    }
    return d;
}

// ---------------------------------------------------------------------------

json to_json(const GeneRecord& r)
{
    return {{"id", r.id},
            {"symbols", to_text(r.genotype)},
            {"fitness", r.fitness ? json(*r.fitness) : json(nullptr)},
            {"in_use_count", r.in_use_count},
            {"birth_generation", r.birth_generation},
            {"weight_key", r.weight_key}};
}

GeneRecord gene_record_from_json(const json& j, Context context)
{
    GeneRecord r;
    r.id = field<GeneId>(j, "id");
    try {
        r.genotype = genotype_from_text(context, field<std::string>(j, "symbols"));
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
    r.fitness = optional_field<double>(j, "fitness");
    r.in_use_count = field<int>(j, "in_use_count");
    r.birth_generation = field<int>(j, "birth_generation");
    r.weight_key = field<std::string>(j, "weight_key");
    return r;
}

json to_json(const GenePool& pool)
{
    json records = json::array();
    for (const auto& [id, rec] : pool.records()) {
        records.push_back(to_json(rec));
    }
    return {{"context", to_string(pool.context())},
            {"head_len", pool.head_len()},
            {"next_id", pool.next_id()},
            {"records", records}};
}

GenePool gene_pool_from_json(const json& j)
{
    const auto context = parse_enum(context_from_string, field<std::string>(j, "context"));
    std::vector<GeneRecord> records;
    for (const auto& r : field<json>(j, "records")) {
        records.push_back(gene_record_from_json(r, context));
    }
    try {
        return GenePool::restore(context, field<int>(j, "head_len"), field<GeneId>(j, "next_id"), std::move(records));
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
}

// ---------------------------------------------------------------------------

json to_json(const OperatorRates& r)
{
    return {{"mutation_rate", r.mutation_rate},   {"is_rate", r.is_rate},
            {"ris_rate", r.ris_rate},             {"one_point_rate", r.one_point_rate},
            {"two_point_rate", r.two_point_rate}, {"is_element_lengths", r.is_element_lengths}};
}

json to_json(const SearchConfig& c)
{
    json budget;
    if (c.budget.kind == Budget::Kind::Generations) {
        budget = {{"kind", "generations"}, {"generations", c.budget.generations}};
    } else {
        budget = {{"kind", "seconds"}, {"seconds", c.budget.seconds}};
    }
    return {{"population_size", c.population_size},
            {"reduction_pool_init", c.reduction_pool_init},
            {"gene_pool_init", c.gene_pool_init},
            {"gene_pool_max", c.gene_pool_max},
            {"gene_children_min", c.gene_children_min},
            {"gene_children_max", c.gene_children_max},
            {"epochs_max", c.epochs_max},
            {"reward_fraction", c.reward_fraction},
            {"cell_head_len", c.cell_head_len},
            {"gene_head_len", c.gene_head_len},
            {"param_limit", c.param_limit},
            {"search_width", c.search_width},
            {"full_width", c.full_width},
            {"normal_repeats", c.normal_repeats},
            {"classes", c.classes},
            {"dataset_profile", to_string(c.dataset_profile)},
            {"budget", budget},
            {"rng_seed", c.rng_seed},
            {"tournament_size", c.tournament_size},
            {"max_spawn_retries", c.max_spawn_retries},
            {"eval_workers", c.eval_workers},
            {"rates", to_json(c.rates)}};
}

namespace {

template <class T>
T config_value(const json& j, const std::string& key)
{
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

} // namespace

SearchConfig config_from_json(const json& j, SearchConfig c)
{
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    using Setter = std::function<void(const json&)>;
    const std::map<std::string, Setter> setters{
        {"population_size", [&c](const json& v) { c.population_size = config_value<int>(v, "population_size"); }},
        {"reduction_pool_init", [&c](const json& v) { c.reduction_pool_init = config_value<int>(v, "reduction_pool_init"); }},
        {"gene_pool_init", [&c](const json& v) { c.gene_pool_init = config_value<int>(v, "gene_pool_init"); }},
        {"gene_pool_max", [&c](const json& v) { c.gene_pool_max = config_value<int>(v, "gene_pool_max"); }},
        {"gene_children_min", [&c](const json& v) { c.gene_children_min = config_value<int>(v, "gene_children_min"); }},
        {"gene_children_max", [&c](const json& v) { c.gene_children_max = config_value<int>(v, "gene_children_max"); }},
        {"epochs_max", [&c](const json& v) { c.epochs_max = config_value<int>(v, "epochs_max"); }},
        {"reward_fraction", [&c](const json& v) { c.reward_fraction = config_value<double>(v, "reward_fraction"); }},
        {"cell_head_len", [&c](const json& v) { c.cell_head_len = config_value<int>(v, "cell_head_len"); }},
        {"gene_head_len", [&c](const json& v) { c.gene_head_len = config_value<int>(v, "gene_head_len"); }},
        {"param_limit", [&c](const json& v) { c.param_limit = config_value<std::int64_t>(v, "param_limit"); }},
        {"search_width", [&c](const json& v) { c.search_width = config_value<int>(v, "search_width"); }},
        {"full_width", [&c](const json& v) { c.full_width = config_value<int>(v, "full_width"); }},
        {"normal_repeats", [&c](const json& v) { c.normal_repeats = config_value<int>(v, "normal_repeats"); }},
        {"classes", [&c](const json& v) { c.classes = config_value<int>(v, "classes"); }},
        {"dataset_profile",
         [&c](const json& v) {
             try {
                 c.dataset_profile = profile_from_string(config_value<std::string>(v, "dataset_profile"));
             } catch (const std::invalid_argument& e) {
                 throw ConfigError(e.what());
             }
         }},
        {"budget",
         [&c](const json& v) {
             if (!v.is_object()) {
                 throw ConfigError("config key 'budget' must be an object");
             }
             if (v.contains("generations") == v.contains("seconds")) {
                 throw ConfigError("budget needs exactly one of 'generations' or 'seconds'");
             }
             if (v.contains("generations")) {
                 c.budget.kind = Budget::Kind::Generations;
                 c.budget.generations = config_value<std::int64_t>(v["generations"], "budget.generations");
             } else {
                 c.budget.kind = Budget::Kind::Seconds;
                 c.budget.seconds = config_value<double>(v["seconds"], "budget.seconds");
             }
         }},
        {"rng_seed", [&c](const json& v) { c.rng_seed = config_value<std::uint64_t>(v, "rng_seed"); }},
        {"tournament_size", [&c](const json& v) { c.tournament_size = config_value<int>(v, "tournament_size"); }},
        {"max_spawn_retries", [&c](const json& v) { c.max_spawn_retries = config_value<int>(v, "max_spawn_retries"); }},
        {"eval_workers", [&c](const json& v) { c.eval_workers = config_value<int>(v, "eval_workers"); }},
        {"rates",
         [&c](const json& v) {
             if (!v.is_object()) {
                 throw ConfigError("config key 'rates' must be an object");
             }
             for (const auto& [key, value] : v.items()) {
                 if (key == "mutation_rate") {
                     c.rates.mutation_rate = config_value<double>(value, "rates.mutation_rate");
                 } else if (key == "is_rate") {
                     c.rates.is_rate = config_value<double>(value, "rates.is_rate");
                 } else if (key == "ris_rate") {
                     c.rates.ris_rate = config_value<double>(value, "rates.ris_rate");
                 } else if (key == "one_point_rate") {
                     c.rates.one_point_rate = config_value<double>(value, "rates.one_point_rate");
                 } else if (key == "two_point_rate") {
                     c.rates.two_point_rate = config_value<double>(value, "rates.two_point_rate");
                 } else if (key == "is_element_lengths") {
                     c.rates.is_element_lengths = config_value<std::vector<int>>(value, "rates.is_element_lengths");
                 } else {
                     throw ConfigError("unknown config key 'rates." + key + "'");
                 }
             }
         }},
    };
    for (const auto& [key, value] : j.items()) {
        auto it = setters.find(key);
        if (it == setters.end()) {
            throw ConfigError("unknown config key '" + key + "'");
        }
        it->second(value);
    }
    return c;
}

// ---------------------------------------------------------------------------

void write_json_file(const std::filesystem::path& path, const json& j)
{
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw PersistenceError("cannot write " + path.string());
        }
        out << j.dump(2) << '\n';
        if (!out) {
            throw PersistenceError("write failed for " + path.string());
        }
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw PersistenceError("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw PersistenceError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void export_descriptor(const ModelDescriptor& d, const std::filesystem::path& path)
{
    write_json_file(path, to_json(d));
}

ModelDescriptor import_descriptor(const std::filesystem::path& path)
{
    return descriptor_from_json(read_json_file(path));
}

SearchConfig load_config_file(const std::filesystem::path& path)
{
    json j;
    try {
        j = read_json_file(path);
    } catch (const PersistenceError& e) {
        throw ConfigError(e.what());
    }
    auto config = config_from_json(j);
    validate_config(config);
    return config;
}

} // namespace cellgep
