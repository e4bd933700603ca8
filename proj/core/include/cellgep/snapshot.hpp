#pragma once

#include <filesystem>

#include "cellgep/evolution.hpp"
#include "cellgep/serialization.hpp"

namespace cellgep {

inline constexpr const char* kSnapshotSchema = "cellgep.snapshot";
inline constexpr int kSnapshotSchemaVersion = 1;

json to_json(const Individual& ind);
Individual individual_from_json(const json& j);

json to_json(const ReductionCell& cell);
ReductionCell reduction_cell_from_json(const json& j);

json to_json(const Champion& c);
Champion champion_from_json(const json& j);

/// Index only; the blobs stay in the weight directory.
json to_json(const WeightStore& store);
WeightStore weight_store_from_json(const json& j);

/// Complete resumable state, including config, RNG and the number of events
/// already emitted (the offset into the event log).
json snapshot_to_json(const SearchState& state);

/// Throws SchemaVersionError, ParseError, or InvariantError when the
/// restored state has dangling references.
SearchState snapshot_from_json(const json& j);

void write_snapshot(const SearchState& state, const std::filesystem::path& path);
SearchState read_snapshot(const std::filesystem::path& path);

} // namespace cellgep
