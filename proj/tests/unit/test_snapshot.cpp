#include <doctest.h>

#include <filesystem>

#include "cellgep/snapshot.hpp"

using namespace cellgep;

namespace {

SearchConfig small_config(std::int64_t generations)
{
    auto c = default_config();
    c.population_size = 4;
    c.reduction_pool_init = 4;
    c.gene_pool_init = 8;
    c.gene_pool_max = 20;
    c.epochs_max = 4;
    c.budget.generations = generations;
    c.rng_seed = 11;
    return c;
}

SearchCallbacks recording(std::vector<json>& events)
{
    SearchCallbacks cb;
    cb.on_event = [&events](const json& e) { events.push_back(e); };
    return cb;
}

} // namespace

TEST_CASE("snapshots round-trip the full search state")
{
    SurrogateEvaluator ev(1);
    auto s = start_search(small_config(10), ev);
    continue_search(s, ev, {}, 4);
    s.weights.update(s.weights.entries().begin()->first, 0.5, "blob", 4);
    const auto j = snapshot_to_json(s);
    CHECK(j.at("schema") == kSnapshotSchema);
    CHECK(j.at("event_log_offset") == s.event_count);
    const auto back = snapshot_from_json(json::parse(j.dump()));
    CHECK(back == s);
    CHECK(snapshot_to_json(back).dump() == j.dump());
}

TEST_CASE("resuming from a snapshot matches an uninterrupted search")
{
    const auto config = small_config(9);
    SurrogateEvaluator ev(1);

    std::vector<json> straight_events;
    auto straight = start_search(config, ev, recording(straight_events));
    continue_search(straight, ev, recording(straight_events));

    std::vector<json> events;
    auto first = start_search(config, ev, recording(events));
    continue_search(first, ev, recording(events), 4);
    const auto path = std::filesystem::temp_directory_path() / ("cellgep-snap-" + std::to_string(::getpid()) + ".json");
    write_snapshot(first, path);
    auto resumed = read_snapshot(path);
    std::filesystem::remove(path);
    REQUIRE(events.size() == resumed.event_count);
    continue_search(resumed, ev, recording(events));

    CHECK(events == straight_events);
    CHECK(resumed.champion == straight.champion);
    resumed.elapsed_seconds = straight.elapsed_seconds = 0;
    CHECK(resumed == straight);
}

TEST_CASE("broken snapshots are rejected with the right error")
{
    SurrogateEvaluator ev(1);
    auto s = start_search(small_config(2), ev);
    const auto good = snapshot_to_json(s);

    auto version = good;
    version["schema_version"] = 2;
    CHECK_THROWS_AS(snapshot_from_json(version), SchemaVersionError);

    auto missing = good;
    missing["state"].erase("individuals");
    CHECK_THROWS_AS(snapshot_from_json(missing), ParseError);

    auto dangling = good;
    dangling["state"]["individuals"][0]["reduction_cell"] = 9999;
    CHECK_THROWS_AS(snapshot_from_json(dangling), InvariantError);

    auto rng = good;
    rng["state"]["rng_state"] = "not a state";
    CHECK_THROWS(snapshot_from_json(rng));
}
