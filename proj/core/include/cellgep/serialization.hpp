#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "cellgep/compiler.hpp"
#include "cellgep/genepool.hpp"
#include "cellgep/karva.hpp"
#include "cellgep/search_space.hpp"

namespace cellgep {

using json = nlohmann::json;

inline constexpr const char* kDescriptorSchema = "cellgep.model_descriptor";
inline constexpr int kDescriptorSchemaVersion = 1;

struct PersistenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed file contents (bad JSON, missing or mistyped field).
struct ParseError : PersistenceError {
    using PersistenceError::PersistenceError;
};

/// Unknown schema name or unsupported schema_version.
struct SchemaVersionError : PersistenceError {
    using PersistenceError::PersistenceError;
};

/// Well-formed data that breaks a graph or descriptor invariant.
struct InvariantError : PersistenceError {
    using PersistenceError::PersistenceError;
};

// Field-level conversions. The from_json side throws ParseError.

json to_json(const Genotype& g);
Genotype genotype_from_json(const json& j);

json to_json(const CellGraph& g);
CellGraph cell_graph_from_json(const json& j);

json to_json(const ConvBlockSpec& b);
ConvBlockSpec conv_block_from_json(const json& j);

json to_json(const ModelDescriptor& d);
/// Parses and validates; throws SchemaVersionError, ParseError or
/// InvariantError (the message names the offending node).
ModelDescriptor descriptor_from_json(const json& j);

json to_json(const GeneRecord& r);
GeneRecord gene_record_from_json(const json& j, Context context);

json to_json(const GenePool& pool);
GenePool gene_pool_from_json(const json& j);

json to_json(const OperatorRates& r);
json to_json(const SearchConfig& c);

/// Overlays the keys present in `j` onto `base`. Unknown keys are rejected
/// with ConfigError so that typos in config files do not pass silently.
SearchConfig config_from_json(const json& j, SearchConfig base = default_config());

// Files

/// Pretty-printed JSON with sorted keys and a trailing newline, written via a
/// temporary file and rename. Throws PersistenceError if unwritable.
void write_json_file(const std::filesystem::path& path, const json& j);
json read_json_file(const std::filesystem::path& path);

void export_descriptor(const ModelDescriptor& d, const std::filesystem::path& path);
ModelDescriptor import_descriptor(const std::filesystem::path& path);

/// Reads, overlays onto the defaults and validates.
SearchConfig load_config_file(const std::filesystem::path& path);

} // namespace cellgep
