#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellgep/compiler.hpp"
#include "cellgep/fitness.hpp"
#include "cellgep/genepool.hpp"
#include "cellgep/karva.hpp"
#include "cellgep/rng.hpp"
#include "cellgep/search_space.hpp"
#include "cellgep/serialization.hpp"

namespace cellgep {

/// A network candidate: an evolved normal cell plus a reference into the
/// reduction-cell population. Members of SearchState::individuals are alive.
struct Individual {
    std::uint64_t id = 0;
    Genotype normal;
    std::uint64_t reduction_cell = 0;
    std::optional<double> fitness; ///< latest evaluation, absent until trained
    int epochs_trained = 0;
    int birth_generation = 0;
    bool marked_dead = false;

    friend bool operator==(const Individual&, const Individual&) = default;
};

struct ReductionCell {
    std::uint64_t id = 0;
    Genotype genotype;
    std::optional<double> fitness; ///< best host fitness
    int in_use_count = 0;
    int birth_generation = 0;
    bool marked_dead = false;

    friend bool operator==(const ReductionCell&, const ReductionCell&) = default;
};

/// Best individual seen so far, with copies of everything needed to compile
/// it after its genes have left the pools.
struct Champion {
    Individual individual;
    ReductionCell reduction_cell;
    std::vector<GeneRecord> normal_genes;
    std::vector<GeneRecord> reduction_genes;
    int generation = 0; ///< generation it was found in

    friend bool operator==(const Champion&, const Champion&) = default;
};

struct SearchState {
    SearchConfig config;
    int generation = 0;
    std::vector<Individual> individuals;       ///< sorted by id
    std::vector<ReductionCell> reduction_cells; ///< sorted by id
    GenePool normal_genes;
    GenePool reduction_genes;
    std::optional<double> gene_threshold;  ///< T_g, absent before the first evaluation
    std::optional<double> child_threshold; ///< T_c
    Rng rng;
    std::uint64_t next_individual_id = 0;
    std::uint64_t next_reduction_id = 0;
    std::optional<Champion> champion;
    WeightStore weights;
    double elapsed_seconds = 0.0;
    std::uint64_t event_count = 0; ///< events emitted so far
    std::uint64_t evaluations = 0;
    std::uint64_t failed_evaluations = 0;

    const Individual& individual(std::uint64_t id) const;
    const ReductionCell& reduction_cell(std::uint64_t id) const;
    ReductionCell& reduction_cell(std::uint64_t id);

    friend bool operator==(const SearchState&, const SearchState&) = default;
};

/// Receives one JSON record per engine event, in order.
using EventSink = std::function<void(const json& event)>;

struct GenerationStats {
    int generation = 0;
    double best_alive = 0.0;
    double mean_alive = 0.0;
    double worst_alive = 0.0;
    double best_ever = 0.0;
    std::optional<double> gene_threshold;
    std::optional<double> child_threshold;
    int alive_individuals = 0;
    int alive_reduction_cells = 0;
    int normal_pool_size = 0;
    int reduction_pool_size = 0;
    std::uint64_t evaluations = 0;
    std::uint64_t failed_evaluations = 0;
};

struct SpawnAborted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Compilation helpers

/// Network for an alive individual at `width` with `repeats` normal cells
/// per stage.
ModelDescriptor compile_individual(const SearchState& state, const Individual& individual, int width, int repeats);

ModelDescriptor compile_champion(const Champion& champion, const SearchConfig& config, int width, int repeats);

/// Parameter count at search width, or nullopt when the candidate does not
/// compile or exceeds param_limit (it is then redrawn).
std::optional<std::int64_t> candidate_params(const SearchState& state, const Genotype& normal,
                                             std::uint64_t reduction_cell);

// ---------------------------------------------------------------------------
// Generation steps. Each emits exactly one event through `sink`.

/// Gene pools, reduction cells and individuals; nothing evaluated. Emits
/// an "init" event.
SearchState init_search(const SearchConfig& config, Rng rng, const EventSink& sink = {});

/// Removes unused genes below T_g from both pools.
void gene_cull_step(SearchState& state, const EventSink& sink = {});

/// Breeds new genes in both pools.
void gene_reproduce_step(SearchState& state, const EventSink& sink = {});

/// New reduction cells, then population_size child individuals.
void spawn_generation(SearchState& state, const EventSink& sink = {});

/// One epoch for every individual below epochs_max, a second for those that
/// reach T_c, then fitness attribution and champion tracking.
void step_training(SearchState& state, Evaluator& evaluator, const EventSink& sink = {});

/// Elitism, oldest-kill, dead removal, trim to population_size, reduction
/// cell trimming and threshold update.
void survivor_select(SearchState& state, const EventSink& sink = {});

/// Sets T_g and T_c from the current population without removing anyone.
/// Closes generation 0.
void update_thresholds(SearchState& state, const EventSink& sink = {});

/// Recounts gene usage in both pools from the current populations.
void refresh_usage(SearchState& state);

GenerationStats generation_stats(const SearchState& state);
json to_json(const GenerationStats& s);

/// Dangling references and population-size violations; empty means sound.
std::vector<std::string> check_state(const SearchState& state);

// ---------------------------------------------------------------------------
// Driver

struct SearchCallbacks {
    EventSink on_event;
    std::function<void(const GenerationStats&, const SearchState&)> on_generation;
};

/// init_search plus the first training round and thresholds (generation 0).
SearchState start_search(const SearchConfig& config, Evaluator& evaluator, const SearchCallbacks& callbacks = {});

/// One full generation: gene-cull, gene-reproduce, spawn, train,
/// survivor-select.
void run_generation(SearchState& state, Evaluator& evaluator, const SearchCallbacks& callbacks = {});

bool budget_exhausted(const SearchState& state);

/// Runs generations until the budget is spent. `stop_after`, if given,
/// ends the loop once that generation is complete.
void continue_search(SearchState& state, Evaluator& evaluator, const SearchCallbacks& callbacks = {},
                     std::optional<int> stop_after = std::nullopt);

struct SearchResult {
    SearchState state;
    std::vector<GenerationStats> history;

    const Champion& best() const { return *state.champion; }
};

SearchResult run_search(const SearchConfig& config, Evaluator& evaluator, const SearchCallbacks& callbacks = {});

/// Fitness of `count` random within-budget candidates, each trained for
/// epochs_max epochs.
std::vector<double> random_baseline(const SearchConfig& config, Evaluator& evaluator, int count);

} // namespace cellgep
